#include "crystensor/error.h"
#include "crystensor/harness.h"
#include "crystensor/symmetry_mask.h"
#include "oracles.h"

#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

using namespace crystensor;

namespace {

OrthogonalMatrix rotation(const Vec3 &axis, double angle) {
  return OrthogonalMatrix::from_matrix(
      Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), 1e-12);
}

const double kPi = std::acos(-1.0);

TensorProperty random_property(std::mt19937_64 &rng, TensorKind kind) {
  return voigt_encode(oracle::random_symmetric_tensor(rng, kind));
}

// Largest change of the masked tensor under any of the generators.
double generator_deviation(const SymmetryMask &mask,
                           const std::vector<OrthogonalMatrix> &gens,
                           std::mt19937_64 &rng) {
  const TensorProperty p = apply_mask(random_property(rng, mask.kind()), mask);
  double worst = 0.0;
  for (const auto &g : gens) {
    worst = std::max(worst,
                     (transform_property(p, g).voigt - p.voigt).cwiseAbs().maxCoeff());
  }
  return worst;
}

} // namespace

TEST_CASE("independent component counts") {
  const std::map<CrystalSystem, int> dielectric{
      {CrystalSystem::Cubic, 1},        {CrystalSystem::Tetragonal, 2},
      {CrystalSystem::Hexagonal, 2},    {CrystalSystem::Trigonal, 2},
      {CrystalSystem::Orthorhombic, 3}, {CrystalSystem::Monoclinic, 4},
      {CrystalSystem::Triclinic, 6}};
  for (const auto &[system, n] : dielectric) {
    CHECK(builtin_mask(TensorKind::Dielectric, system).independent_count() == n);
  }
  CHECK(builtin_mask(TensorKind::Elastic, CrystalSystem::Cubic).independent_count() == 3);
  CHECK(builtin_mask(TensorKind::Elastic, CrystalSystem::Tetragonal).independent_count() == 6);
  CHECK(builtin_mask(TensorKind::Elastic, CrystalSystem::Triclinic).independent_count() == 21);
  CHECK(builtin_mask(TensorKind::Piezoelectric, CrystalSystem::Trigonal).independent_count() == 2);
  CHECK(builtin_mask(TensorKind::Piezoelectric, CrystalSystem::Monoclinic).independent_count() == 8);
  CHECK(builtin_mask(TensorKind::Piezoelectric, CrystalSystem::Triclinic).independent_count() == 18);

  CHECK(oracle::error_code_of([] {
          builtin_mask(TensorKind::Elastic, CrystalSystem::Hexagonal);
        }) == ErrorCode::MaskUnavailable);
  CHECK_FALSE(has_builtin_mask(TensorKind::Piezoelectric, CrystalSystem::Cubic));
}

TEST_CASE("masks agree with point-group generators") {
  std::mt19937_64 rng(41);
  const Vec3 x(1, 0, 0), y(0, 1, 0), z(0, 0, 1), d(1, 1, 1);
  const auto c4z = rotation(z, kPi / 2);
  const auto c3d = rotation(d, 2 * kPi / 3);
  const auto c3z = rotation(z, 2 * kPi / 3);
  const auto c6z = rotation(z, kPi / 3);
  const auto c2x = rotation(x, kPi);
  const auto c2y = rotation(y, kPi);
  const auto c2z = rotation(z, kPi);

  for (int trial = 0; trial < 20; ++trial) {
    using K = TensorKind;
    using S = CrystalSystem;
    REQUIRE(generator_deviation(builtin_mask(K::Dielectric, S::Cubic), {c4z, c3d}, rng) < 1e-10);
    REQUIRE(generator_deviation(builtin_mask(K::Elastic, S::Cubic), {c4z, c3d}, rng) < 1e-10);
    REQUIRE(generator_deviation(builtin_mask(K::Dielectric, S::Tetragonal), {c4z}, rng) < 1e-10);
    REQUIRE(generator_deviation(builtin_mask(K::Dielectric, S::Hexagonal), {c6z}, rng) < 1e-10);
    REQUIRE(generator_deviation(builtin_mask(K::Dielectric, S::Trigonal), {c3z}, rng) < 1e-10);
    REQUIRE(generator_deviation(builtin_mask(K::Dielectric, S::Orthorhombic), {c2x, c2y}, rng) < 1e-10);
    REQUIRE(generator_deviation(builtin_mask(K::Dielectric, S::Monoclinic), {c2y}, rng) < 1e-10);
    REQUIRE(generator_deviation(builtin_mask(K::Elastic, S::Tetragonal), {c4z, c2x}, rng) < 1e-10);
    REQUIRE(generator_deviation(builtin_mask(K::Piezoelectric, S::Trigonal), {c3z, c2x}, rng) < 1e-10);
    REQUIRE(generator_deviation(builtin_mask(K::Piezoelectric, S::Monoclinic), {c2y}, rng) < 1e-10);
  }
  (void)c2z;
}

TEST_CASE("apply_mask projection") {
  const SymmetryMask cubic = builtin_mask(TensorKind::Dielectric, CrystalSystem::Cubic);
  const TensorProperty p{TensorKind::Dielectric,
                         Eigen::MatrixXd{{2.252, 0.016, 0.008},
                                         {0.016, 2.230, 0.007},
                                         {0.008, 0.007, 2.262}}};
  const TensorProperty m = apply_mask(p, cubic);
  const double a = (2.252 + 2.230 + 2.262) / 3.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) {
        CHECK(m.voigt(i, j) == Catch::Approx(a).epsilon(1e-15));
      } else {
        CHECK(m.voigt(i, j) == 0.0);
      }
    }
  }
  CHECK(m.voigt(0, 0) == m.voigt(1, 1));
  CHECK(m.voigt(1, 1) == m.voigt(2, 2));

  std::mt19937_64 rng(42);
  for (TensorKind kind : {TensorKind::Dielectric, TensorKind::Elastic,
                          TensorKind::Piezoelectric}) {
    for (CrystalSystem s : all_crystal_systems()) {
      if (!has_builtin_mask(kind, s)) {
        continue;
      }
      const SymmetryMask mask = builtin_mask(kind, s);
      const TensorProperty once = apply_mask(random_property(rng, kind), mask);
      REQUIRE(apply_mask(once, mask).voigt == once.voigt);
      for (int r = 0; r < mask.rows(); ++r) {
        for (int c = 0; c < mask.cols(); ++c) {
          if (mask.slot(r, c).is_zero()) {
            REQUIRE(once.voigt(r, c) == 0.0);
          }
        }
      }
      if (s == CrystalSystem::Triclinic) {
        const TensorProperty q = random_property(rng, kind);
        REQUIRE(apply_mask(q, mask).voigt == q.voigt);
      }
    }
  }
  CHECK(oracle::error_code_of([&] {
          apply_mask(TensorProperty::zero(TensorKind::Elastic), cubic);
        }) == ErrorCode::KindMismatch);
}

TEST_CASE("signed ties in the trigonal piezoelectric mask") {
  const SymmetryMask mask = builtin_mask(TensorKind::Piezoelectric, CrystalSystem::Trigonal);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 6);
  v(0, 0) = 1.0;
  v(0, 1) = -0.8;
  v(1, 5) = -0.9;
  const TensorProperty m = apply_mask({TensorKind::Piezoelectric, v}, mask);
  CHECK(m.voigt(0, 0) == Catch::Approx(0.9));
  CHECK(m.voigt(0, 1) == Catch::Approx(-0.9));
  CHECK(m.voigt(1, 5) == Catch::Approx(-0.9));
}

TEST_CASE("independent components round trip") {
  const SymmetryMask cubic = builtin_mask(TensorKind::Dielectric, CrystalSystem::Cubic);
  const TensorProperty c{TensorKind::Dielectric, 2.357 * Eigen::MatrixXd::Identity(3, 3)};
  const Eigen::VectorXd v = independent_components(c, cubic);
  REQUIRE(v.size() == 1);
  CHECK(v(0) == 2.357);
  CHECK(reconstruct_from_independent(v, cubic).voigt == c.voigt);

  const SymmetryMask ortho = builtin_mask(TensorKind::Dielectric, CrystalSystem::Orthorhombic);
  const TensorProperty o{TensorKind::Dielectric, Eigen::MatrixXd(Vec3(1.5, 2.5, 3.5).asDiagonal())};
  CHECK(independent_components(o, ortho) == Eigen::Vector3d(1.5, 2.5, 3.5));

  std::mt19937_64 rng(43);
  const SymmetryMask tri = builtin_mask(TensorKind::Dielectric, CrystalSystem::Triclinic);
  for (int trial = 0; trial < 20; ++trial) {
    const TensorProperty t = random_property(rng, TensorKind::Dielectric);
    const Eigen::VectorXd iv = independent_components(t, tri);
    REQUIRE(iv.size() == 6);
    REQUIRE(reconstruct_from_independent(iv, tri).voigt == t.voigt);
  }
  TensorProperty broken = c;
  broken.voigt(0, 1) = broken.voigt(1, 0) = 1e-6;
  CHECK(oracle::error_code_of([&] { independent_components(broken, cubic); }) ==
        ErrorCode::MaskInconsistent);
}

TEST_CASE("mask JSON") {
  const SymmetryMask m = builtin_mask(TensorKind::Elastic, CrystalSystem::Tetragonal);
  const SymmetryMask back = mask_from_json(mask_to_json(m));
  CHECK(back.pattern() == m.pattern());
  CHECK(back.crystal_system() == CrystalSystem::Tetragonal);

  const auto j = nlohmann::json::parse(R"({"schema":"crystensor-mask/1","kind":"elastic",
    "crystal_system":"hexagonal","pattern":[[1,2,3,0,0,0],[2,1,3,0,0,0],[3,3,4,0,0,0],
    [0,0,0,5,0,0],[0,0,0,0,5,0],[0,0,0,0,0,6]]})");
  CHECK(mask_from_json(j).independent_count() == 6);

  auto bad = j;
  bad["pattern"][0][1] = 7;
  CHECK(oracle::error_code_of([&] { mask_from_json(bad); }) == ErrorCode::InvalidArgument);
  bad = j;
  bad["pattern"].erase(0);
  CHECK(oracle::error_code_of([&] { mask_from_json(bad); }) == ErrorCode::DimMismatch);
}
