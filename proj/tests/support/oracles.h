#pragma once

// Reference implementations used only by the tests. Each one takes a
// different route from the library code it checks.

#include "crystensor/crystal.h"
#include "crystensor/error.h"
#include "crystensor/graph.h"
#include "crystensor/tensor.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

namespace oracle {

using crystensor::Mat3;
using crystensor::Vec3;

// Newton iteration for the orthogonal polar factor: Q <- (Q + Q^-T) / 2.
inline std::pair<Mat3, Mat3> newton_polar(const Mat3 &l) {
  Mat3 q = l;
  for (int it = 0; it < 100; ++it) {
    const Mat3 next = 0.5 * (q + q.inverse().transpose());
    const double change = (next - q).cwiseAbs().maxCoeff();
    q = next;
    if (change < 1e-15) {
      break;
    }
  }
  const Mat3 h = q.transpose() * l;
  return {q, 0.5 * (h + h.transpose())};
}

// Modified Gram-Schmidt on the columns.
inline std::pair<Mat3, Mat3> gram_schmidt_qr(const Mat3 &l) {
  Mat3 q = l;
  Mat3 r = Mat3::Zero();
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < j; ++i) {
      r(i, j) = q.col(i).dot(q.col(j));
      q.col(j) -= r(i, j) * q.col(i);
    }
    r(j, j) = q.col(j).norm();
    q.col(j) /= r(j, j);
  }
  return {q, r};
}

// Plain nested sums over every index; t is stored last-index-fastest.
inline std::vector<double> transform_loops(const std::vector<double> &t, int rank,
                                           const Mat3 &q) {
  const int n = static_cast<int>(t.size());
  std::vector<double> out(t.size(), 0.0);
  for (int a = 0; a < n; ++a) {
    std::array<int, 4> ia{};
    for (int k = rank - 1, v = a; k >= 0; --k, v /= 3) {
      ia[k] = v % 3;
    }
    double s = 0.0;
    for (int b = 0; b < n; ++b) {
      std::array<int, 4> ib{};
      for (int k = rank - 1, v = b; k >= 0; --k, v /= 3) {
        ib[k] = v % 3;
      }
      double w = t[b];
      for (int k = 0; k < rank; ++k) {
        w *= q(ia[k], ib[k]);
      }
      s += w;
    }
    out[a] = s;
  }
  return out;
}

inline double max_abs_diff(const std::vector<double> &a,
                           const std::vector<double> &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

struct BruteEdge {
  int i;
  int j;
  std::array<int, 3> k;
  double length;

  bool operator<(const BruteEdge &o) const {
    return std::tie(i, j, k) < std::tie(o.i, o.j, o.k);
  }
};

// k-th neighbor radius and every image inside it, from an exhaustive scan of
// offsets in [-range, range]^3.
inline std::pair<double, std::vector<BruteEdge>>
brute_force_graph(const crystensor::Crystal &c, int k_neighbors, int range = 6,
                  double tie = 1e-8) {
  const int n = static_cast<int>(c.size());
  const auto cart = crystensor::frac_to_cart(c);
  std::vector<BruteEdge> all;
  double radius = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> dists;
    for (int j = 0; j < n; ++j) {
      for (int a = -range; a <= range; ++a) {
        for (int b = -range; b <= range; ++b) {
          for (int d = -range; d <= range; ++d) {
            if (i == j && a == 0 && b == 0 && d == 0) {
              continue;
            }
            const Vec3 v = cart.row(j).transpose() +
                           c.lattice * Vec3(a, b, d) - cart.row(i).transpose();
            all.push_back({i, j, {a, b, d}, v.norm()});
            dists.push_back(v.norm());
          }
        }
      }
    }
    std::nth_element(dists.begin(), dists.begin() + (k_neighbors - 1), dists.end());
    radius = std::max(radius, dists[static_cast<std::size_t>(k_neighbors - 1)]);
  }
  std::vector<BruteEdge> kept;
  for (const auto &e : all) {
    if (e.length <= radius * (1.0 + tie)) {
      kept.push_back(e);
    }
  }
  std::sort(kept.begin(), kept.end());
  return {radius, kept};
}

inline crystensor::ErrorCode
error_code_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const crystensor::Error &e) {
    return e.code();
  }
  throw std::logic_error("expected a crystensor::Error");
}

inline Mat3 random_matrix(std::mt19937_64 &rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      m(i, j) = u(rng);
    }
  }
  return m;
}

// Random full-rank lattice: identity-dominated to stay well conditioned.
inline Mat3 random_full_rank(std::mt19937_64 &rng, double scale = 4.0) {
  return scale * (Mat3::Identity() + 0.4 * random_matrix(rng));
}

inline crystensor::Crystal random_crystal(std::mt19937_64 &rng, int n,
                                          double scale = 4.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> z(1, 30);
  crystensor::CoordMatrix f(n, 3);
  std::vector<int> species;
  for (int a = 0; a < n; ++a) {
    species.push_back(z(rng));
    for (int d = 0; d < 3; ++d) {
      f(a, d) = u(rng);
    }
  }
  return crystensor::Crystal::make("rand", species, f, random_full_rank(rng, scale));
}

// Random full tensor with the index symmetries of the given kind.
inline crystensor::FullTensor random_symmetric_tensor(std::mt19937_64 &rng,
                                                      crystensor::TensorKind kind) {
  using crystensor::FullTensor;
  using crystensor::TensorKind;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  if (kind == TensorKind::Dielectric) {
    const Mat3 a = random_matrix(rng);
    return FullTensor::from_matrix(a + a.transpose());
  }
  if (kind == TensorKind::Piezoelectric) {
    FullTensor t(3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = j; k < 3; ++k) {
          t(i, j, k) = t(i, k, j) = u(rng);
        }
      }
    }
    return t;
  }
  Eigen::Matrix<double, 6, 6> v;
  for (int a = 0; a < 6; ++a) {
    for (int b = a; b < 6; ++b) {
      v(a, b) = v(b, a) = u(rng);
    }
  }
  return crystensor::voigt_decode({TensorKind::Elastic, v});
}

} // namespace oracle
