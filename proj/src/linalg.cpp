#include "crystensor/linalg.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace crystensor {

namespace {

constexpr int kMaxSweeps = 60;

} // namespace

Svd3 svd3(const Mat3 &a) {
  Mat3 w = a;
  Mat3 v = Mat3::Identity();

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (gamma == 0.0 ||
            std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int r = 0; r < 3; ++r) {
          const double wp = w(r, p);
          const double wq = w(r, q);
          w(r, p) = c * wp - s * wq;
          w(r, q) = s * wp + c * wq;
          const double vp = v(r, p);
          const double vq = v(r, q);
          v(r, p) = c * vp - s * vq;
          v(r, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) {
      break;
    }
  }

  std::array<double, 3> norms{w.col(0).norm(), w.col(1).norm(),
                              w.col(2).norm()};
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return norms[x] > norms[y]; });

  Svd3 out;
  for (int k = 0; k < 3; ++k) {
    const int src = order[k];
    out.sigma(k) = norms[src];
    out.v.col(k) = v.col(src);
    if (norms[src] > 0.0) {
      out.u.col(k) = w.col(src) / norms[src];
    } else {
      out.u.col(k).setZero();
    }
  }
  // Complete u for rank-deficient input so that it stays orthogonal.
  if (out.sigma(2) == 0.0) {
    if (out.sigma(1) == 0.0) {
      if (out.sigma(0) == 0.0) {
        out.u = Mat3::Identity();
      } else {
        Vec3 trial = std::abs(out.u(0, 0)) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        out.u.col(1) = out.u.col(0).cross(trial).normalized();
      }
    }
    out.u.col(2) = out.u.col(0).cross(out.u.col(1));
  }
  return out;
}

Vec3 singular_values(const Mat3 &a) { return svd3(a).sigma; }

double max_abs_diff(const Mat3 &a, const Mat3 &b) {
  return (a - b).cwiseAbs().maxCoeff();
}

} // namespace crystensor
