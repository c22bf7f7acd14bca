#include "crystensor/crystal.h"

#include "crystensor/error.h"

#include <cmath>
#include <fmt/format.h>

namespace crystensor {

OrthogonalMatrix OrthogonalMatrix::from_matrix(const Mat3 &q, double tol) {
  const double dev = max_abs_diff(q.transpose() * q, Mat3::Identity());
  const double det_dev = std::abs(std::abs(q.determinant()) - 1.0);
  if (!(dev <= tol) || !(det_dev <= tol)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("matrix is not orthogonal (|QtQ - I| = {:.3e}, "
                            "||det| - 1| = {:.3e})",
                            dev, det_dev));
  }
  return OrthogonalMatrix(q);
}

double wrap_unit(double x) {
  double w = x - std::floor(x);
  if (w >= 1.0) {
    w = 0.0;
  }
  return w;
}

CoordMatrix wrap_coords(const CoordMatrix &frac) {
  return frac.unaryExpr([](double x) { return wrap_unit(x); });
}

Crystal Crystal::make(std::string id, std::vector<int> species,
                      CoordMatrix frac_coords, const Mat3 &lattice) {
  Crystal c{std::move(id), std::move(species), wrap_coords(frac_coords),
            lattice};
  validate(c);
  return c;
}

void check_full_rank(const Mat3 &lattice) {
  if (!lattice.allFinite()) {
    throw Error(ErrorCode::RankDeficientLattice,
                "lattice contains non-finite entries");
  }
  const Vec3 s = singular_values(lattice);
  if (!(s(0) > 0.0) || s(2) < kRankTol * s(0)) {
    throw Error(ErrorCode::RankDeficientLattice,
                fmt::format("lattice is rank deficient (singular values "
                            "{:.3e}, {:.3e}, {:.3e})",
                            s(0), s(1), s(2)));
  }
}

void validate(const Crystal &crystal) {
  if (crystal.species.empty()) {
    throw Error(ErrorCode::EmptyCell, "crystal has no atoms");
  }
  if (static_cast<std::size_t>(crystal.frac_coords.rows()) !=
      crystal.species.size()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("{} species but {} coordinate rows",
                            crystal.species.size(),
                            crystal.frac_coords.rows()));
  }
  for (int z : crystal.species) {
    if (z < 1 || z > 118) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("atomic number {} out of range 1..118", z));
    }
  }
  for (Eigen::Index i = 0; i < crystal.frac_coords.rows(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const double f = crystal.frac_coords(i, k);
      if (!(f >= 0.0 && f < 1.0)) {
        throw Error(ErrorCode::CoordinateOutOfRange,
                    fmt::format("fractional coordinate ({}, {}) = {} not in "
                                "[0,1)",
                                i, k, f));
      }
    }
  }
  check_full_rank(crystal.lattice);
}

CoordMatrix frac_to_cart(const Crystal &crystal) {
  return crystal.frac_coords * crystal.lattice.transpose();
}

CoordMatrix cart_to_frac(const CoordMatrix &cart, const Mat3 &lattice) {
  check_full_rank(lattice);
  // x^T = f^T L^T  =>  f^T = x^T L^{-T}
  const Mat3 inv_t = lattice.transpose().inverse();
  return wrap_coords(cart * inv_t);
}

Crystal act(const OrthogonalMatrix &g, const Crystal &crystal) {
  return Crystal{crystal.id, crystal.species, crystal.frac_coords,
                 g.matrix() * crystal.lattice};
}

} // namespace crystensor
