#pragma once

#include <Eigen/Dense>

namespace crystensor {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Singular value decomposition a = u * diag(sigma) * v^T of a 3x3 matrix.
/// Singular values are sorted in descending order and are non-negative.
struct Svd3 {
  Mat3 u;
  Vec3 sigma;
  Mat3 v;
};

/// One-sided (Hestenes) Jacobi SVD. Columns of `a` are rotated until they
/// are mutually orthogonal; the accumulated rotations form v. Accurate to a
/// few ulps relative to the largest singular value.
Svd3 svd3(const Mat3 &a);

Vec3 singular_values(const Mat3 &a);

/// max |a_ij - b_ij|
double max_abs_diff(const Mat3 &a, const Mat3 &b);

} // namespace crystensor
