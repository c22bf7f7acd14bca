#include "crystensor/error.h"

namespace crystensor {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::RankDeficientLattice:
    return "RankDeficientLattice";
  case ErrorCode::CoordinateOutOfRange:
    return "CoordinateOutOfRange";
  case ErrorCode::EmptyCell:
    return "EmptyCell";
  case ErrorCode::SymmetryViolation:
    return "SymmetryViolation";
  case ErrorCode::KindMismatch:
    return "KindMismatch";
  case ErrorCode::MaskInconsistent:
    return "MaskInconsistent";
  case ErrorCode::MaskUnavailable:
    return "MaskUnavailable";
  case ErrorCode::ZeroLabelNorm:
    return "ZeroLabelNorm";
  case ErrorCode::NeighborSearchOverflow:
    return "NeighborSearchOverflow";
  case ErrorCode::NonpositiveLength:
    return "NonpositiveLength";
  case ErrorCode::UnknownSpecies:
    return "UnknownSpecies";
  case ErrorCode::DimMismatch:
    return "DimMismatch";
  case ErrorCode::EmptyDataset:
    return "EmptyDataset";
  case ErrorCode::ParseError:
    return "ParseError";
  case ErrorCode::ValidationError:
    return "ValidationError";
  case ErrorCode::InvalidArgument:
    return "InvalidArgument";
  case ErrorCode::IoError:
    return "IoError";
  }
  return "Unknown";
}

} // namespace crystensor
