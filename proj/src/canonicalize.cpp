#include "crystensor/canonicalize.h"

#include <cmath>

namespace crystensor {

CanonicalDecomposition polar_decompose(const Mat3 &lattice) {
  check_full_rank(lattice);
  const Svd3 svd = svd3(lattice);
  const Mat3 q = svd.u * svd.v.transpose();
  Mat3 h = svd.v * svd.sigma.asDiagonal() * svd.v.transpose();
  h = 0.5 * (h + h.transpose()).eval();
  return {OrthogonalMatrix::trusted(q), h, CanonicalMethod::Polar};
}

CanonicalDecomposition qr_decompose(const Mat3 &lattice) {
  check_full_rank(lattice);
  Mat3 r = lattice;
  Mat3 q = Mat3::Identity();
  for (int k = 0; k < 2; ++k) {
    const int len = 3 - k;
    Eigen::VectorXd x = r.col(k).tail(len);
    const double norm_x = x.norm();
    if (norm_x == 0.0) {
      continue;
    }
    Eigen::VectorXd v = x;
    v(0) += std::copysign(norm_x, x(0));
    const double vnorm2 = v.squaredNorm();
    if (vnorm2 == 0.0) {
      continue;
    }
    // Apply P = I - 2 v v^T / (v^T v) to the trailing block of r and
    // accumulate q <- q P.
    for (int c = 0; c < 3; ++c) {
      const double s = 2.0 * v.dot(r.col(c).tail(len)) / vnorm2;
      r.col(c).tail(len) -= s * v;
    }
    for (int row = 0; row < 3; ++row) {
      const double s = 2.0 * q.row(row).tail(len).dot(v.transpose()) / vnorm2;
      q.row(row).tail(len) -= s * v.transpose();
    }
  }
  for (int k = 0; k < 3; ++k) {
    if (r(k, k) < 0.0) {
      r.row(k) *= -1.0;
      q.col(k) *= -1.0;
    }
  }
  for (int row = 1; row < 3; ++row) {
    for (int col = 0; col < row; ++col) {
      r(row, col) = 0.0;
    }
  }
  return {OrthogonalMatrix::trusted(q), r, CanonicalMethod::QR};
}

CanonicalDecomposition decompose(const Mat3 &lattice, CanonicalMethod method) {
  return method == CanonicalMethod::Polar ? polar_decompose(lattice)
                                          : qr_decompose(lattice);
}

CanonicalDecomposition recanonicalize(const CanonicalDecomposition &decomp,
                                      const OrthogonalMatrix &q0) {
  return {decomp.q * q0.transpose(), q0.matrix() * decomp.h, decomp.method};
}

CanonicalForm canonical_form(const Crystal &crystal, CanonicalMethod method) {
  const CanonicalDecomposition d = decompose(crystal.lattice, method);
  return {Crystal{crystal.id, crystal.species, crystal.frac_coords, d.h}, d.q};
}

} // namespace crystensor
