#pragma once

#include "crystensor/tensor.h"

#include <nlohmann/json_fwd.hpp>
#include <string_view>
#include <vector>

namespace crystensor {

enum class CrystalSystem {
  Cubic,
  Tetragonal,
  Hexagonal,
  Trigonal,
  Orthorhombic,
  Monoclinic,
  Triclinic,
};

std::string_view to_string(CrystalSystem system);
CrystalSystem crystal_system_from_string(std::string_view name);
const std::vector<CrystalSystem> &all_crystal_systems();

/// One entry of a Voigt-shaped mask: either a structural zero or a signed
/// reference to an independent component.
struct MaskSlot {
  int component = -1; // -1 marks a zero slot
  double sign = 1.0;  // +1 or -1

  bool is_zero() const { return component < 0; }
};

/// Symmetry-imposed structure of a property for one crystal system.
///
/// The pattern is written with integers: 0 for a forced zero, +k / -k for
/// independent component k (1-based). E.g. the trigonal (32) piezoelectric
/// pattern is
///   [[1,-1,0,2,0,0],[0,0,0,0,-2,-1],[0,0,0,0,0,0]].
class SymmetryMask {
public:
  SymmetryMask(CrystalSystem system, TensorKind kind,
               const std::vector<std::vector<int>> &pattern);

  CrystalSystem crystal_system() const { return system_; }
  TensorKind kind() const { return kind_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int independent_count() const { return count_; }
  const MaskSlot &slot(int r, int c) const { return slots_[r * cols_ + c]; }
  std::vector<std::vector<int>> pattern() const;

private:
  CrystalSystem system_;
  TensorKind kind_;
  int rows_;
  int cols_;
  int count_ = 0;
  std::vector<MaskSlot> slots_;
};

/// Masks tabulated for dielectric (all systems), elastic (cubic, tetragonal,
/// triclinic) and piezoelectric (trigonal 32, monoclinic 2, triclinic 1).
/// Throws MaskUnavailable for anything else; load those from a mask file.
SymmetryMask builtin_mask(TensorKind kind, CrystalSystem system);
bool has_builtin_mask(TensorKind kind, CrystalSystem system);

/// {"schema": "crystensor-mask/1", "kind": ..., "crystal_system": ...,
///  "pattern": [[...], ...]}
SymmetryMask mask_from_json(const nlohmann::json &j);
nlohmann::json mask_to_json(const SymmetryMask &mask);
SymmetryMask load_mask_file(const std::string &path);

/// Orthogonal projection onto the mask subspace: zero slots become exactly
/// 0.0, each tied group is replaced by the signed mean of its members. A group
/// whose members already agree keeps its value, so the projection is exactly
/// idempotent. Throws KindMismatch.
TensorProperty apply_mask(const TensorProperty &p, const SymmetryMask &mask);

/// Values of the independent components, read from the first slot of each
/// group. Throws MaskInconsistent if `p` deviates from its masked projection
/// by more than `tol`.
Eigen::VectorXd independent_components(const TensorProperty &p,
                                       const SymmetryMask &mask,
                                       double tol = 1e-9);
TensorProperty reconstruct_from_independent(const Eigen::VectorXd &values,
                                            const SymmetryMask &mask);

} // namespace crystensor
