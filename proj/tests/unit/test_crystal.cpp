#include "crystensor/crystal.h"
#include "crystensor/error.h"
#include "oracles.h"

#include <catch_amalgamated.hpp>

using namespace crystensor;

TEST_CASE("frac_to_cart on simple lattices") {
  const Crystal c = Crystal::make("c", {1}, CoordMatrix{{0.5, 0.5, 0.5}},
                                  Mat3::Identity());
  CHECK(frac_to_cart(c).isApprox(CoordMatrix{{0.5, 0.5, 0.5}}));

  const Crystal d = Crystal::make("d", {1}, CoordMatrix{{0.25, 0, 0}},
                                  2.0 * Mat3::Identity());
  CHECK((frac_to_cart(d) - CoordMatrix{{0.5, 0, 0}}).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("frac_to_cart agrees with an explicit inverse") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Crystal c = oracle::random_crystal(rng, 4);
    const CoordMatrix x = frac_to_cart(c);
    // Cartesian positions are combinations of the lattice columns.
    const CoordMatrix back = (c.lattice.inverse() * x.transpose()).transpose();
    CHECK((back - c.frac_coords).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("cart_to_frac wraps and round-trips") {
  const Mat3 l = 2.0 * Mat3::Identity();
  CHECK((cart_to_frac(CoordMatrix{{0.5, 0, 0}}, l) - CoordMatrix{{0.25, 0, 0}})
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  CHECK((cart_to_frac(CoordMatrix{{2.5, 0, 0}}, l) - CoordMatrix{{0.25, 0, 0}})
            .cwiseAbs()
            .maxCoeff() < 1e-15);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Crystal c = oracle::random_crystal(rng, 5);
    const CoordMatrix f = cart_to_frac(frac_to_cart(c), c.lattice);
    // Compare on the circle so coordinates near 0 and 1 count as equal.
    const CoordMatrix d = f - c.frac_coords;
    const double dev =
        d.unaryExpr([](double v) { return std::abs(v - std::round(v)); }).maxCoeff();
    CHECK(dev < 1e-12);
  }

  Mat3 flat = Mat3::Identity();
  flat(2, 2) = 0.0;
  CHECK(oracle::error_code_of([&] { cart_to_frac(CoordMatrix{{0, 0, 0}}, flat); }) ==
        ErrorCode::RankDeficientLattice);
}

TEST_CASE("wrap_unit maps into [0,1)") {
  CHECK(wrap_unit(1.0) == 0.0);
  CHECK(wrap_unit(-0.25) == 0.75);
  CHECK(wrap_unit(-1e-20) == 0.0);
  CHECK(wrap_unit(0.999) == 0.999);
}

TEST_CASE("act replaces the lattice and keeps everything else") {
  const Crystal c = Crystal::make("c", {6, 8}, CoordMatrix{{0, 0, 0}, {0.1, 0.2, 0.3}},
                                  Mat3::Identity());
  const Crystal same = act(OrthogonalMatrix::identity(), c);
  CHECK(same.lattice == c.lattice);
  CHECK(same.frac_coords == c.frac_coords);
  CHECK(same.species == c.species);

  const OrthogonalMatrix refl =
      OrthogonalMatrix::from_matrix(Eigen::Vector3d(1, 1, -1).asDiagonal().toDenseMatrix());
  const Crystal r = act(refl, c);
  CHECK(r.lattice == Mat3(Eigen::Vector3d(1, 1, -1).asDiagonal()));
  CHECK(r.frac_coords == c.frac_coords);
}

TEST_CASE("act is a group action") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Crystal m = oracle::random_crystal(rng, 3);
    const auto g1 = OrthogonalMatrix::from_matrix(oracle::gram_schmidt_qr(oracle::random_matrix(rng)).first, 1e-9);
    const auto g2 = OrthogonalMatrix::from_matrix(oracle::gram_schmidt_qr(oracle::random_matrix(rng)).first, 1e-9);
    const Crystal lhs = act(g1, act(g2, m));
    const Crystal rhs = act(g1 * g2, m);
    CHECK(max_abs_diff(lhs.lattice, rhs.lattice) < 1e-12);
    CHECK(lhs.frac_coords == m.frac_coords);
    CHECK(act(g1, m).lattice == g1.matrix() * m.lattice);
  }
}

TEST_CASE("validate rejects broken crystals") {
  CHECK_NOTHROW(Crystal::make("ok", {11}, CoordMatrix{{0, 0, 0}}, Mat3::Identity()));

  Mat3 zero_row = Mat3::Identity();
  zero_row.row(1).setZero();
  CHECK(oracle::error_code_of([&] {
          Crystal::make("z", {11}, CoordMatrix{{0, 0, 0}}, zero_row);
        }) == ErrorCode::RankDeficientLattice);

  CHECK(oracle::error_code_of([&] {
          Crystal::make("e", {}, CoordMatrix(0, 3), Mat3::Identity());
        }) == ErrorCode::EmptyCell);

  Crystal bad{"b", {1}, CoordMatrix{{1.5, 0, 0}}, Mat3::Identity()};
  CHECK(oracle::error_code_of([&] { validate(bad); }) ==
        ErrorCode::CoordinateOutOfRange);

  CHECK(oracle::error_code_of([&] {
          Crystal::make("s", {119}, CoordMatrix{{0, 0, 0}}, Mat3::Identity());
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("OrthogonalMatrix validation") {
  CHECK_NOTHROW(OrthogonalMatrix::from_matrix(-Mat3::Identity()));
  Mat3 m = Mat3::Identity();
  m(0, 1) = 1e-6;
  CHECK(oracle::error_code_of([&] { OrthogonalMatrix::from_matrix(m); }) ==
        ErrorCode::InvalidArgument);
  CHECK(oracle::error_code_of([&] {
          OrthogonalMatrix::from_matrix(2.0 * Mat3::Identity());
        }) == ErrorCode::InvalidArgument);
}
