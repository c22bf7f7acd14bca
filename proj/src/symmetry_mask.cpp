#include "crystensor/symmetry_mask.h"

#include "crystensor/error.h"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>

namespace crystensor {

namespace {

using Pattern = std::vector<std::vector<int>>;

Pattern numbered_symmetric(int n) {
  Pattern p(n, std::vector<int>(n, 0));
  int next = 1;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      p[i][j] = p[j][i] = next++;
    }
  }
  return p;
}

Pattern numbered_dense(int rows, int cols) {
  Pattern p(rows, std::vector<int>(cols, 0));
  int next = 1;
  for (auto &row : p) {
    for (auto &x : row) {
      x = next++;
    }
  }
  return p;
}

} // namespace

std::string_view to_string(CrystalSystem system) {
  switch (system) {
  case CrystalSystem::Cubic:
    return "cubic";
  case CrystalSystem::Tetragonal:
    return "tetragonal";
  case CrystalSystem::Hexagonal:
    return "hexagonal";
  case CrystalSystem::Trigonal:
    return "trigonal";
  case CrystalSystem::Orthorhombic:
    return "orthorhombic";
  case CrystalSystem::Monoclinic:
    return "monoclinic";
  case CrystalSystem::Triclinic:
    return "triclinic";
  }
  return "unknown";
}

CrystalSystem crystal_system_from_string(std::string_view name) {
  for (CrystalSystem s : all_crystal_systems()) {
    if (to_string(s) == name) {
      return s;
    }
  }
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown crystal system '{}'", name));
}

const std::vector<CrystalSystem> &all_crystal_systems() {
  static const std::vector<CrystalSystem> kAll{
      CrystalSystem::Cubic,        CrystalSystem::Tetragonal,
      CrystalSystem::Hexagonal,    CrystalSystem::Trigonal,
      CrystalSystem::Orthorhombic, CrystalSystem::Monoclinic,
      CrystalSystem::Triclinic};
  return kAll;
}

SymmetryMask::SymmetryMask(CrystalSystem system, TensorKind kind,
                           const Pattern &pattern)
    : system_(system), kind_(kind), rows_(voigt_rows(kind)),
      cols_(voigt_cols(kind)) {
  if (static_cast<int>(pattern.size()) != rows_) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("{} mask needs {} rows", to_string(kind), rows_));
  }
  slots_.reserve(rows_ * cols_);
  for (const auto &row : pattern) {
    if (static_cast<int>(row.size()) != cols_) {
      throw Error(ErrorCode::DimMismatch,
                  fmt::format("{} mask needs {} columns", to_string(kind),
                              cols_));
    }
    for (int x : row) {
      MaskSlot s;
      if (x != 0) {
        s.component = std::abs(x) - 1;
        s.sign = x < 0 ? -1.0 : 1.0;
        count_ = std::max(count_, std::abs(x));
      }
      slots_.push_back(s);
    }
  }
  std::vector<bool> seen(count_, false);
  for (const auto &s : slots_) {
    if (!s.is_zero()) {
      seen[s.component] = true;
    }
  }
  for (int k = 0; k < count_; ++k) {
    if (!seen[k]) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("mask skips independent component {}", k + 1));
    }
  }
  if (kind != TensorKind::Piezoelectric) {
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) {
        const auto &a = slot(r, c);
        const auto &b = slot(c, r);
        if (a.component != b.component || a.sign != b.sign) {
          throw Error(ErrorCode::InvalidArgument,
                      "mask for a symmetric property must be symmetric");
        }
      }
    }
  }
}

Pattern SymmetryMask::pattern() const {
  Pattern p(rows_, std::vector<int>(cols_, 0));
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      const auto &s = slot(r, c);
      if (!s.is_zero()) {
        p[r][c] = static_cast<int>(s.sign) * (s.component + 1);
      }
    }
  }
  return p;
}

bool has_builtin_mask(TensorKind kind, CrystalSystem system) {
  switch (kind) {
  case TensorKind::Dielectric:
    return true;
  case TensorKind::Elastic:
    return system == CrystalSystem::Cubic ||
           system == CrystalSystem::Tetragonal ||
           system == CrystalSystem::Triclinic;
  case TensorKind::Piezoelectric:
    return system == CrystalSystem::Trigonal ||
           system == CrystalSystem::Monoclinic ||
           system == CrystalSystem::Triclinic;
  }
  return false;
}

SymmetryMask builtin_mask(TensorKind kind, CrystalSystem system) {
  if (!has_builtin_mask(kind, system)) {
    throw Error(ErrorCode::MaskUnavailable,
                fmt::format("no built-in {} mask for the {} system; supply a "
                            "mask file",
                            to_string(kind), to_string(system)));
  }
  switch (kind) {
  case TensorKind::Dielectric:
    switch (system) {
    case CrystalSystem::Cubic:
      return {system, kind, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    case CrystalSystem::Tetragonal:
    case CrystalSystem::Hexagonal:
    case CrystalSystem::Trigonal:
      return {system, kind, {{1, 0, 0}, {0, 1, 0}, {0, 0, 2}}};
    case CrystalSystem::Orthorhombic:
      return {system, kind, {{1, 0, 0}, {0, 2, 0}, {0, 0, 3}}};
    case CrystalSystem::Monoclinic:
      return {system, kind, {{1, 0, 2}, {0, 3, 0}, {2, 0, 4}}};
    case CrystalSystem::Triclinic:
      return {system, kind, numbered_symmetric(3)};
    }
    break;
  case TensorKind::Elastic:
    switch (system) {
    case CrystalSystem::Cubic:
      return {system,
              kind,
              {{1, 2, 2, 0, 0, 0},
               {2, 1, 2, 0, 0, 0},
               {2, 2, 1, 0, 0, 0},
               {0, 0, 0, 3, 0, 0},
               {0, 0, 0, 0, 3, 0},
               {0, 0, 0, 0, 0, 3}}};
    case CrystalSystem::Tetragonal:
      return {system,
              kind,
              {{1, 2, 3, 0, 0, 0},
               {2, 1, 3, 0, 0, 0},
               {3, 3, 4, 0, 0, 0},
               {0, 0, 0, 5, 0, 0},
               {0, 0, 0, 0, 5, 0},
               {0, 0, 0, 0, 0, 6}}};
    default:
      return {system, kind, numbered_symmetric(6)};
    }
  case TensorKind::Piezoelectric:
    switch (system) {
    case CrystalSystem::Trigonal:
      return {system,
              kind,
              {{1, -1, 0, 2, 0, 0}, {0, 0, 0, 0, -2, -1}, {0, 0, 0, 0, 0, 0}}};
    case CrystalSystem::Monoclinic:
      return {system,
              kind,
              {{0, 0, 0, 1, 0, 2}, {3, 4, 5, 0, 6, 0}, {0, 0, 0, 7, 0, 8}}};
    default:
      return {system, kind, numbered_dense(3, 6)};
    }
  }
  throw Error(ErrorCode::MaskUnavailable, "unreachable mask request");
}

SymmetryMask mask_from_json(const nlohmann::json &j) {
  try {
    const auto kind = tensor_kind_from_string(j.at("kind").get<std::string>());
    const auto system =
        crystal_system_from_string(j.at("crystal_system").get<std::string>());
    return {system, kind, j.at("pattern").get<Pattern>()};
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::ParseError,
                fmt::format("malformed mask description: {}", e.what()));
  }
}

nlohmann::json mask_to_json(const SymmetryMask &mask) {
  return {{"schema", "crystensor-mask/1"},
          {"kind", to_string(mask.kind())},
          {"crystal_system", to_string(mask.crystal_system())},
          {"pattern", mask.pattern()}};
}

SymmetryMask load_mask_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, fmt::format("cannot open mask file {}", path));
  }
  try {
    return mask_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error &e) {
    throw Error(ErrorCode::ParseError,
                fmt::format("{}: {}", path, e.what()));
  }
}

namespace {

void require_kind(const TensorProperty &p, const SymmetryMask &mask) {
  if (p.kind != mask.kind()) {
    throw Error(ErrorCode::KindMismatch,
                fmt::format("{} mask applied to a {} property",
                            to_string(mask.kind()), to_string(p.kind)));
  }
}

} // namespace

TensorProperty apply_mask(const TensorProperty &p, const SymmetryMask &mask) {
  require_kind(p, mask);
  const int n = mask.independent_count();
  std::vector<double> sum(n, 0.0);
  std::vector<double> first(n, 0.0);
  std::vector<int> members(n, 0);
  std::vector<bool> uniform(n, true);
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      const auto &s = mask.slot(r, c);
      if (s.is_zero()) {
        continue;
      }
      const double v = s.sign * p.voigt(r, c);
      if (members[s.component] == 0) {
        first[s.component] = v;
      } else if (v != first[s.component]) {
        uniform[s.component] = false;
      }
      sum[s.component] += v;
      ++members[s.component];
    }
  }
  std::vector<double> value(n);
  for (int k = 0; k < n; ++k) {
    value[k] = uniform[k] ? first[k] : sum[k] / members[k];
  }
  TensorProperty out{p.kind, Eigen::MatrixXd::Zero(mask.rows(), mask.cols())};
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      const auto &s = mask.slot(r, c);
      if (!s.is_zero()) {
        out.voigt(r, c) = s.sign * value[s.component];
      }
    }
  }
  return out;
}

Eigen::VectorXd independent_components(const TensorProperty &p,
                                       const SymmetryMask &mask, double tol) {
  require_kind(p, mask);
  const TensorProperty projected = apply_mask(p, mask);
  const double dev = (projected.voigt - p.voigt).cwiseAbs().maxCoeff();
  if (!(dev <= tol)) {
    throw Error(ErrorCode::MaskInconsistent,
                fmt::format("property deviates from the {} {} mask by {:.3e}",
                            to_string(mask.crystal_system()),
                            to_string(mask.kind()), dev));
  }
  Eigen::VectorXd values(mask.independent_count());
  std::vector<bool> filled(mask.independent_count(), false);
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      const auto &s = mask.slot(r, c);
      if (!s.is_zero() && !filled[s.component]) {
        values(s.component) = s.sign * p.voigt(r, c);
        filled[s.component] = true;
      }
    }
  }
  return values;
}

TensorProperty reconstruct_from_independent(const Eigen::VectorXd &values,
                                            const SymmetryMask &mask) {
  if (values.size() != mask.independent_count()) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("mask has {} independent components, got {}",
                            mask.independent_count(), values.size()));
  }
  TensorProperty out{mask.kind(),
                     Eigen::MatrixXd::Zero(mask.rows(), mask.cols())};
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      const auto &s = mask.slot(r, c);
      if (!s.is_zero()) {
        out.voigt(r, c) = s.sign * values(s.component);
      }
    }
  }
  return out;
}

} // namespace crystensor
