#include "crystensor/harness.h"

#include "crystensor/error.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace crystensor {

OrthogonalMatrix random_orthogonal(std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Mat3 a;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        a(i, j) = normal(rng);
      }
    }
    try {
      // Positive diag(R) is exactly the sign correction that makes Q Haar.
      return qr_decompose(a).q;
    } catch (const Error &) {
      // measure-zero singular draw; resample
    }
  }
}

OrthogonalMatrix random_orthogonal(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_orthogonal(rng);
}

Dataset augment_testset(const Dataset &data, const OrthogonalSampler &sample) {
  Dataset out;
  out.reserve(data.size());
  for (const auto &r : data) {
    const OrthogonalMatrix g = sample();
    Record a = r;
    a.crystal = act(g, r.crystal);
    a.target = transform_property(r.target, g);
    out.push_back(std::move(a));
  }
  return out;
}

Dataset augment_testset(const Dataset &data, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return augment_testset(data, [&rng] { return random_orthogonal(rng); });
}

Mat3 random_lattice(std::mt19937_64 &rng, double lo, double hi) {
  std::uniform_real_distribution<double> sv(lo, hi);
  const Mat3 u = random_orthogonal(rng).matrix();
  const Mat3 v = random_orthogonal(rng).matrix();
  const Vec3 s(sv(rng), sv(rng), sv(rng));
  return u * s.asDiagonal() * v.transpose();
}

namespace {

constexpr int kSpeciesPool[] = {3, 8, 11, 12, 13, 14, 16, 20, 22, 26, 29, 30};
constexpr double kMinSeparation = 1.2;

double mean_species(const Crystal &c) {
  double s = 0.0;
  for (int z : c.species) {
    s += z;
  }
  return s / static_cast<double>(c.size());
}

// Shortest distance between atom a and any image of atom b (b may equal a,
// in which case the zero offset is skipped). Offsets in [-1,1]^3 suffice for
// the well-conditioned cells generated here.
double min_image_distance(const Crystal &c, const CoordMatrix &cart, int a,
                          int b) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      for (int k = -1; k <= 1; ++k) {
        if (a == b && i == 0 && j == 0 && k == 0) {
          continue;
        }
        const Vec3 d = cart.row(b).transpose() +
                       c.lattice * Vec3(i, j, k) - cart.row(a).transpose();
        best = std::min(best, d.norm());
      }
    }
  }
  return best;
}

// With `mixed`, at least two distinct species: the synthetic piezoelectric
// label is built from species differences and vanishes otherwise.
Crystal random_crystal(std::mt19937_64 &rng, const std::string &id,
                       int max_atoms, bool mixed) {
  std::uniform_int_distribution<int> count(mixed ? 2 : 1,
                                          mixed ? std::max(max_atoms, 2) : max_atoms);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kSpeciesPool) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    const int n = count(rng);
    const Mat3 lattice = random_lattice(rng);
    std::vector<int> species(static_cast<std::size_t>(n));
    CoordMatrix frac(n, 3);
    for (int a = 0; a < n; ++a) {
      species[static_cast<std::size_t>(a)] = kSpeciesPool[pick(rng)];
      for (int d = 0; d < 3; ++d) {
        frac(a, d) = unit(rng);
      }
    }
    if (mixed && std::adjacent_find(species.begin(), species.end(),
                                    std::not_equal_to<>()) == species.end()) {
      continue;
    }
    Crystal c = Crystal::make(id, std::move(species), frac, lattice);
    const CoordMatrix cart = frac_to_cart(c);
    bool ok = true;
    for (int a = 0; a < n && ok; ++a) {
      for (int b = a; b < n && ok; ++b) {
        ok = min_image_distance(c, cart, a, b) >= kMinSeparation;
      }
    }
    if (ok) {
      return c;
    }
  }
}

Crystal cubic_prototype(std::mt19937_64 &rng, const std::string &id) {
  std::uniform_int_distribution<int> which(0, 2);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kSpeciesPool) - 1);
  const int a_species = kSpeciesPool[pick(rng)];
  int b_species = kSpeciesPool[pick(rng)];
  switch (which(rng)) {
  case 0: {
    std::uniform_real_distribution<double> a(2.6, 4.0);
    return Crystal::make(id, {a_species}, CoordMatrix::Zero(1, 3),
                         a(rng) * Mat3::Identity());
  }
  case 1: {
    std::uniform_real_distribution<double> a(3.0, 4.5);
    CoordMatrix f(2, 3);
    f << 0, 0, 0, 0.5, 0.5, 0.5;
    return Crystal::make(id, {a_species, b_species}, f,
                         a(rng) * Mat3::Identity());
  }
  default: {
    std::uniform_real_distribution<double> a(4.2, 6.0);
    CoordMatrix f(8, 3);
    f << 0, 0, 0, 0, 0.5, 0.5, 0.5, 0, 0.5, 0.5, 0.5, 0,
        0.5, 0, 0, 0, 0.5, 0, 0, 0, 0.5, 0.5, 0.5, 0.5;
    std::vector<int> species{a_species, a_species, a_species, a_species,
                             b_species, b_species, b_species, b_species};
    return Crystal::make(id, std::move(species), f, a(rng) * Mat3::Identity());
  }
  }
}

} // namespace

TensorProperty synth_label(const Crystal &crystal, TensorKind kind,
                           const GraphOptions &graph) {
  const CanonicalForm cf = canonical_form(crystal);
  const CrystalGraph g = build_graph(cf.crystal, graph);
  const double zbar = mean_species(crystal) / 20.0;
  const double inv_e = 1.0 / static_cast<double>(g.edges.size());

  FullTensor t(tensor_rank(kind));
  switch (kind) {
  case TensorKind::Dielectric: {
    Mat3 a = Mat3::Zero();
    for (const auto &e : g.edges) {
      const Vec3 u = e.vec / e.length;
      a += u * u.transpose();
    }
    t = FullTensor::from_matrix((1.0 + zbar) * Mat3::Identity() + 4.0 * inv_e * a);
    break;
  }
  case TensorKind::Piezoelectric:
    for (const auto &e : g.edges) {
      const Vec3 u = e.vec / e.length;
      const double w =
          2.0 * inv_e *
          std::tanh((crystal.species[static_cast<std::size_t>(e.i)] -
                     crystal.species[static_cast<std::size_t>(e.j)]) /
                    10.0);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          for (int k = 0; k < 3; ++k) {
            t(i, j, k) += w * u(i) * u(j) * u(k);
          }
        }
      }
    }
    break;
  case TensorKind::Elastic: {
    const double lambda = 50.0 + 20.0 * zbar;
    const double mu = 30.0 + 10.0 * zbar;
    auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          for (int l = 0; l < 3; ++l) {
            t(i, j, k, l) = lambda * delta(i, j) * delta(k, l) +
                            mu * (delta(i, k) * delta(j, l) +
                                  delta(i, l) * delta(j, k));
          }
        }
      }
    }
    for (const auto &e : g.edges) {
      const Vec3 u = e.vec / e.length;
      const double w = 150.0 * inv_e;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          for (int k = 0; k < 3; ++k) {
            for (int l = 0; l < 3; ++l) {
              t(i, j, k, l) += w * u(i) * u(j) * u(k) * u(l);
            }
          }
        }
      }
    }
    break;
  }
  }
  return transform_property(voigt_encode(t), cf.q);
}

Dataset synth_dataset(int n, TensorKind kind, std::uint64_t seed,
                      const SynthOptions &opts) {
  if (n < 0) {
    throw Error(ErrorCode::InvalidArgument, "sample count must be non-negative");
  }
  if (opts.max_atoms < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_atoms must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool cubic_allowed = has_builtin_mask(kind, CrystalSystem::Cubic);
  Dataset out;
  out.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const std::string id = fmt::format("synth-{:05d}", s);
    const bool cubic = cubic_allowed && unit(rng) < opts.cubic_fraction;
    Record r{cubic ? cubic_prototype(rng, id)
                   : random_crystal(rng, id, opts.max_atoms,
                                    kind == TensorKind::Piezoelectric),
             TensorProperty::zero(kind), std::string(default_units(kind)),
             cubic ? CrystalSystem::Cubic : CrystalSystem::Triclinic};
    r.target = synth_label(r.crystal, kind, opts.graph);
    if (cubic) {
      // Clean rounding noise so the label sits exactly on the mask.
      r.target = apply_mask(r.target, builtin_mask(kind, CrystalSystem::Cubic));
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

double relative_deviation(const TensorProperty &a, const TensorProperty &b) {
  const double diff = (a.voigt - b.voigt).norm();
  const double ref = b.voigt.norm();
  return ref > 0.0 ? diff / ref : diff;
}

} // namespace

EquivarianceReport verify_equivariance(const Pipeline &p, const Dataset &data,
                                       std::uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  std::vector<OrthogonalMatrix> gs;
  gs.reserve(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    gs.push_back(random_orthogonal(rng));
  }
  std::size_t next = 0;
  const Dataset augmented =
      augment_testset(data, [&] { return gs[next++]; });

  EquivarianceReport rep;
  rep.seed = seed;
  rep.tolerance = tolerance;
  std::vector<TensorProperty> wrapped_ori, wrapped_aug, raw_ori, raw_aug;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Record &r = data[k];
    const Record &a = augmented[k];
    wrapped_ori.push_back(goectp_predict(p, r.crystal, r.crystal_system));
    wrapped_aug.push_back(goectp_predict(p, a.crystal, a.crystal_system));
    raw_ori.push_back(raw_predict(p, r.crystal));
    raw_aug.push_back(raw_predict(p, a.crystal));

    rep.ids.push_back(r.crystal.id);
    rep.deviations.push_back(relative_deviation(
        wrapped_aug.back(), transform_property(wrapped_ori.back(), gs[k])));
    rep.raw_deviations.push_back(relative_deviation(
        raw_aug.back(), transform_property(raw_ori.back(), gs[k])));
    rep.max_deviation = std::max(rep.max_deviation, rep.deviations.back());
    rep.max_raw_deviation =
        std::max(rep.max_raw_deviation, rep.raw_deviations.back());
  }
  const auto labels_ori = targets(data);
  const auto labels_aug = targets(augmented);
  rep.wrapped = {summarize(wrapped_ori, labels_ori),
                 summarize(wrapped_aug, labels_aug)};
  rep.raw = {summarize(raw_ori, labels_ori), summarize(raw_aug, labels_aug)};
  rep.pass = rep.max_deviation <= tolerance;
  return rep;
}

nlohmann::json to_json(const MetricSummary &m) {
  return {{"count", m.count},
          {"fnorm_mean", m.fnorm_mean},
          {"ewt25", m.ewt25},
          {"ewt10", m.ewt10},
          {"ewt5", m.ewt5}};
}

nlohmann::json to_json(const EquivarianceReport &r) {
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t k = 0; k < r.ids.size(); ++k) {
    samples.push_back({{"id", r.ids[k]},
                       {"deviation", r.deviations[k]},
                       {"raw_deviation", r.raw_deviations[k]}});
  }
  return {{"schema", "crystensor-equivariance/1"},
          {"seed", r.seed},
          {"tolerance", r.tolerance},
          {"pass", r.pass},
          {"max_deviation", r.max_deviation},
          {"max_raw_deviation", r.max_raw_deviation},
          {"metrics",
           {{"wrapped",
             {{"original", to_json(r.wrapped.original)},
              {"augmented", to_json(r.wrapped.augmented)}}},
            {"raw",
             {{"original", to_json(r.raw.original)},
              {"augmented", to_json(r.raw.augmented)}}}}},
          {"samples", samples}};
}

PerturbationReport perturbation_study(const Pipeline &p, const Crystal &crystal,
                                      std::vector<double> ratios) {
  if (ratios.empty() || ratios.front() != 0.0) {
    ratios.insert(ratios.begin(), 0.0);
  }
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    if (ratios[k] < 0.0 || ratios[k] >= 1.0 ||
        (k > 0 && ratios[k] <= ratios[k - 1])) {
      throw Error(ErrorCode::InvalidArgument,
                  "perturbation ratios must be strictly increasing in [0, 1)");
    }
  }
  PerturbationReport rep;
  rep.id = crystal.id;
  rep.ratios = ratios;
  for (Canonicalization c : {Canonicalization::Polar, Canonicalization::QR}) {
    std::vector<double> &var = rep.variation[c];
    TensorProperty base;
    for (double r : ratios) {
      Crystal m = crystal;
      m.lattice.col(0) *= 1.0 - r;
      check_full_rank(m.lattice);
      const TensorProperty h = predict_with(p, m, c);
      if (r == 0.0) {
        base = h;
      }
      var.push_back(100.0 * relative_deviation(h, base));
    }
  }
  return rep;
}

nlohmann::json to_json(const PerturbationReport &r) {
  nlohmann::json variation = nlohmann::json::object();
  for (const auto &[c, v] : r.variation) {
    variation[std::string(to_string(c))] = v;
  }
  return {{"schema", "crystensor-perturbation/1"},
          {"id", r.id},
          {"ratios", r.ratios},
          {"variation_percent", variation}};
}

ZeroSlotStats ZeroElementReport::total() const {
  ZeroSlotStats t;
  for (const auto &[system, s] : by_system) {
    t.slots += s.slots;
    t.successes += s.successes;
  }
  return t;
}

ZeroElementReport zero_element_success(
    const std::vector<TensorProperty> &preds, const Dataset &labels,
    const std::map<CrystalSystem, SymmetryMask> &extra_masks) {
  if (preds.size() != labels.size()) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("{} predictions for {} labels", preds.size(),
                            labels.size()));
  }
  ZeroElementReport rep;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const Record &r = labels[k];
    if (!r.crystal_system) {
      continue;
    }
    const TensorKind kind = r.target.kind;
    std::optional<SymmetryMask> mask;
    if (auto it = extra_masks.find(*r.crystal_system);
        it != extra_masks.end() && it->second.kind() == kind) {
      mask = it->second;
    } else if (has_builtin_mask(kind, *r.crystal_system)) {
      mask = builtin_mask(kind, *r.crystal_system);
    } else {
      continue;
    }
    double sum = 0.0;
    int nonzero = 0;
    for (Eigen::Index i = 0; i < r.target.voigt.size(); ++i) {
      const double v = std::abs(r.target.voigt.data()[i]);
      if (v > 0.0) {
        sum += v;
        ++nonzero;
      }
    }
    if (nonzero == 0) {
      rep.warnings.push_back(
          fmt::format("record '{}' has an all-zero label; skipped", r.crystal.id));
      continue;
    }
    const double threshold = 0.01 * sum / nonzero;
    ZeroSlotStats &stats = rep.by_system[*r.crystal_system];
    for (int i = 0; i < mask->rows(); ++i) {
      for (int j = 0; j < mask->cols(); ++j) {
        if (mask->slot(i, j).is_zero()) {
          ++stats.slots;
          if (std::abs(preds[k].voigt(i, j)) <= threshold) {
            ++stats.successes;
          }
        }
      }
    }
  }
  return rep;
}

nlohmann::json to_json(const ZeroElementReport &r) {
  nlohmann::json systems = nlohmann::json::object();
  for (const auto &[system, s] : r.by_system) {
    systems[std::string(to_string(system))] = {
        {"zero_slots", s.slots}, {"successes", s.successes}, {"rate", s.rate()}};
  }
  const ZeroSlotStats t = r.total();
  return {{"by_system", systems},
          {"total",
           {{"zero_slots", t.slots}, {"successes", t.successes}, {"rate", t.rate()}}},
          {"warnings", r.warnings}};
}

double time_predictions(const Pipeline &p, const Dataset &data, bool wrapped,
                        int repeats) {
  const auto start = std::chrono::steady_clock::now();
  double sink = 0.0;
  for (int rep = 0; rep < repeats; ++rep) {
    for (const auto &r : data) {
      const TensorProperty t =
          wrapped ? goectp_predict(p, r.crystal, r.crystal_system)
                  : raw_predict(p, r.crystal);
      sink += t.voigt(0, 0);
    }
  }
  const auto stop = std::chrono::steady_clock::now();
  // Keep the predictions observable so the loop is not optimized away.
  volatile double keep = sink;
  (void)keep;
  return std::chrono::duration<double>(stop - start).count();
}

} // namespace crystensor
