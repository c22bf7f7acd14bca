#pragma once

#include "crystensor/linalg.h"

#include <string>
#include <vector>

namespace crystensor {

using CoordMatrix = Eigen::MatrixX3d;

// Relative singular-value threshold below which a lattice is treated as
// rank deficient (2D or collapsed cells).
inline constexpr double kRankTol = 1e-8;
inline constexpr double kOrthTol = 1e-10;

/// Element of O(3). Rotations and reflections are both accepted.
class OrthogonalMatrix {
public:
  OrthogonalMatrix() : q_(Mat3::Identity()) {}

  /// Checks q^T q = I and |det q| = 1 within `tol`; throws InvalidArgument.
  static OrthogonalMatrix from_matrix(const Mat3 &q, double tol = kOrthTol);
  /// No validation. For factors produced by decompositions that are
  /// orthogonal by construction.
  static OrthogonalMatrix trusted(const Mat3 &q) { return OrthogonalMatrix(q); }
  static OrthogonalMatrix identity() { return {}; }

  const Mat3 &matrix() const { return q_; }
  double operator()(int i, int j) const { return q_(i, j); }
  double det() const { return q_.determinant(); }
  OrthogonalMatrix transpose() const { return OrthogonalMatrix(q_.transpose()); }

  friend OrthogonalMatrix operator*(const OrthogonalMatrix &a,
                                    const OrthogonalMatrix &b) {
    return OrthogonalMatrix(a.q_ * b.q_);
  }

private:
  explicit OrthogonalMatrix(const Mat3 &q) : q_(q) {}
  Mat3 q_;
};

/// A periodic crystal M = (A, F, L).
///
/// `lattice` holds the lattice vectors as its columns, so a fractional
/// coordinate f maps to the Cartesian position L f and an O(3) element Q acts
/// on the crystal as L -> Q L. Dataset files store lattice vectors as rows and
/// are transposed on load.
struct Crystal {
  std::string id;
  std::vector<int> species;
  CoordMatrix frac_coords;
  Mat3 lattice = Mat3::Identity();

  std::size_t size() const { return species.size(); }

  /// Wraps coordinates into [0,1), then validates.
  static Crystal make(std::string id, std::vector<int> species,
                      CoordMatrix frac_coords, const Mat3 &lattice);
};

/// x - floor(x), mapped into [0,1) even when rounding produces 1.0.
double wrap_unit(double x);
CoordMatrix wrap_coords(const CoordMatrix &frac);

/// Throws RankDeficientLattice when sigma_min < kRankTol * sigma_max.
void check_full_rank(const Mat3 &lattice);

/// Throws EmptyCell, CoordinateOutOfRange, RankDeficientLattice or
/// InvalidArgument (species/coordinate count or atomic number range).
void validate(const Crystal &crystal);

/// Row i is the Cartesian position of atom i.
CoordMatrix frac_to_cart(const Crystal &crystal);

/// Inverse of frac_to_cart; the result is wrapped into [0,1).
CoordMatrix cart_to_frac(const CoordMatrix &cart, const Mat3 &lattice);

/// g . M = (A, F, Q L). Species and fractional coordinates are copied
/// unchanged.
Crystal act(const OrthogonalMatrix &g, const Crystal &crystal);

} // namespace crystensor
