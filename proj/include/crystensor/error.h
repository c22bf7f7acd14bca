#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crystensor {

enum class ErrorCode {
  RankDeficientLattice,
  CoordinateOutOfRange,
  EmptyCell,
  SymmetryViolation,
  KindMismatch,
  MaskInconsistent,
  MaskUnavailable,
  ZeroLabelNorm,
  NeighborSearchOverflow,
  NonpositiveLength,
  UnknownSpecies,
  DimMismatch,
  EmptyDataset,
  ParseError,
  ValidationError,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures in the library are reported through this type.
// The CLI maps it to exit code 1 and a JSON error object on stderr.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace crystensor
