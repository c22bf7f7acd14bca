#include "crystensor/canonicalize.h"
#include "crystensor/error.h"
#include "crystensor/harness.h"
#include "oracles.h"

#include <catch_amalgamated.hpp>

using namespace crystensor;

namespace {

bool is_spd(const Mat3 &h) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(h);
  return es.eigenvalues().minCoeff() > 0.0;
}

} // namespace

TEST_CASE("polar_decompose on special lattices") {
  SECTION("identity") {
    const auto d = polar_decompose(Mat3::Identity());
    CHECK(max_abs_diff(d.q.matrix(), Mat3::Identity()) < 1e-14);
    CHECK(max_abs_diff(d.h, Mat3::Identity()) < 1e-14);
  }
  SECTION("rotation about z") {
    Mat3 r;
    r << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    const auto d = polar_decompose(r);
    CHECK(max_abs_diff(d.q.matrix(), r) < 1e-14);
    CHECK(max_abs_diff(d.h, Mat3::Identity()) < 1e-14);
  }
  SECTION("already SPD") {
    const Mat3 l = Vec3(2, 3, 4).asDiagonal();
    const auto d = polar_decompose(l);
    CHECK(max_abs_diff(d.q.matrix(), Mat3::Identity()) < 1e-14);
    CHECK(max_abs_diff(d.h, l) < 1e-13);
  }
  SECTION("shear against an SVD built from the symmetric eigensolver") {
    Mat3 l;
    l << 1, 1, 0, 0, 1, 0, 0, 0, 1;
    const auto d = polar_decompose(l);
    Eigen::SelfAdjointEigenSolver<Mat3> es(l.transpose() * l);
    const Mat3 h = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
                   es.eigenvectors().transpose();
    CHECK(max_abs_diff(d.h, h) < 1e-12);
    CHECK(max_abs_diff(d.q.matrix() * d.h, l) < 1e-14);
    CHECK(d.h == d.h.transpose());
    CHECK(is_spd(d.h));
  }
  SECTION("left-handed lattice keeps an improper Q") {
    const Mat3 l = Vec3(1, 2, -3).asDiagonal();
    const auto d = polar_decompose(l);
    CHECK(d.q.det() == Catch::Approx(-1.0));
    CHECK(max_abs_diff(d.h, Mat3(Vec3(1, 2, 3).asDiagonal())) < 1e-14);
  }
}

TEST_CASE("polar factors match the Newton iteration") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const Mat3 l = oracle::random_full_rank(rng);
    const auto d = polar_decompose(l);
    const auto [q, h] = oracle::newton_polar(l);
    REQUIRE(max_abs_diff(d.q.matrix(), q) < 1e-9);
    REQUIRE(max_abs_diff(d.h, h) < 1e-9);
    REQUIRE(max_abs_diff(d.q.matrix() * d.h, l) < 1e-10);
  }
}

TEST_CASE("polar factors are invariant and equivariant under O(3)") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat3 l = oracle::random_full_rank(rng);
    const OrthogonalMatrix g = random_orthogonal(rng);
    const auto a = polar_decompose(l);
    const auto b = polar_decompose(g.matrix() * l);
    REQUIRE(max_abs_diff(a.h, b.h) < 1e-10);
    REQUIRE(max_abs_diff(b.q.matrix(), g.matrix() * a.q.matrix()) < 1e-10);
  }
}

TEST_CASE("rank-deficient lattices are rejected") {
  Mat3 l = Mat3::Identity();
  l.row(2) = l.row(0) + l.row(1);
  CHECK(oracle::error_code_of([&] { polar_decompose(l); }) ==
        ErrorCode::RankDeficientLattice);
  CHECK(oracle::error_code_of([&] { qr_decompose(l); }) ==
        ErrorCode::RankDeficientLattice);
  Mat3 tiny = Mat3::Identity();
  tiny(2, 2) = 1e-10;
  CHECK(oracle::error_code_of([&] { polar_decompose(tiny); }) ==
        ErrorCode::RankDeficientLattice);
}

TEST_CASE("qr_decompose") {
  SECTION("identity") {
    const auto d = qr_decompose(Mat3::Identity());
    CHECK(max_abs_diff(d.q.matrix(), Mat3::Identity()) < 1e-15);
    CHECK(max_abs_diff(d.h, Mat3::Identity()) < 1e-15);
  }
  SECTION("upper triangular input") {
    Mat3 l;
    l << 2, 1, 0.5, 0, 3, -1, 0, 0, 4;
    const auto d = qr_decompose(l);
    CHECK(max_abs_diff(d.q.matrix(), Mat3::Identity()) < 1e-14);
    CHECK(max_abs_diff(d.h, l) < 1e-14);
  }
  SECTION("random lattices against Gram-Schmidt") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
      const Mat3 l = oracle::random_full_rank(rng);
      const auto d = qr_decompose(l);
      const auto [q, r] = oracle::gram_schmidt_qr(l);
      REQUIRE(max_abs_diff(d.q.matrix(), q) < 1e-10);
      REQUIRE(max_abs_diff(d.h, r) < 1e-10);
      REQUIRE(max_abs_diff(d.q.matrix() * d.h, l) < 1e-10);
      REQUIRE(d.h(1, 0) == 0.0);
      REQUIRE(d.h(2, 0) == 0.0);
      REQUIRE(d.h(2, 1) == 0.0);
      REQUIRE(d.h.diagonal().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("recanonicalize") {
  std::mt19937_64 rng(24);
  const Mat3 l = oracle::random_full_rank(rng);
  const auto d = polar_decompose(l);
  const auto same = recanonicalize(d, OrthogonalMatrix::identity());
  CHECK(max_abs_diff(same.q.matrix(), d.q.matrix()) == 0.0);
  CHECK(max_abs_diff(same.h, d.h) == 0.0);

  const auto refl = recanonicalize(
      d, OrthogonalMatrix::from_matrix(Mat3(Vec3(-1, 1, 1).asDiagonal())));
  CHECK(max_abs_diff(refl.q.matrix() * refl.h, l) < 1e-10);

  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 m = oracle::random_full_rank(rng);
    const auto r = recanonicalize(polar_decompose(m), random_orthogonal(rng));
    REQUIRE(max_abs_diff(r.q.matrix() * r.h, m) < 1e-10);
  }
}

TEST_CASE("canonical_form registration contract") {
  std::mt19937_64 rng(25);
  SECTION("orthogonal lattice") {
    const OrthogonalMatrix r = random_orthogonal(rng);
    const Crystal c = Crystal::make("o", {3}, CoordMatrix{{0.1, 0.2, 0.3}}, r.matrix());
    const CanonicalForm cf = canonical_form(c);
    CHECK(max_abs_diff(cf.crystal.lattice, Mat3::Identity()) < 1e-12);
    CHECK(max_abs_diff(cf.q.matrix(), r.matrix()) < 1e-12);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const Crystal m = oracle::random_crystal(rng, 3);
    const OrthogonalMatrix g = random_orthogonal(rng);
    const CanonicalForm a = canonical_form(m);
    const CanonicalForm b = canonical_form(act(g, m));
    REQUIRE(max_abs_diff(act(a.q, a.crystal).lattice, m.lattice) < 1e-10);
    REQUIRE(a.crystal.frac_coords == m.frac_coords);
    REQUIRE(max_abs_diff(a.crystal.lattice, b.crystal.lattice) < 1e-10);
    REQUIRE(max_abs_diff(b.q.matrix(), g.matrix() * a.q.matrix()) < 1e-10);
  }
}
