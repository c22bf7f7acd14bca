#pragma once

#include "crystensor/pipeline.h"

#include <cstdint>
#include <functional>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <random>
#include <string>
#include <vector>

namespace crystensor {

/// Haar-distributed element of O(3): QR of a standard-normal 3x3 matrix with
/// the signs of diag(R) moved into Q.
OrthogonalMatrix random_orthogonal(std::mt19937_64 &rng);
OrthogonalMatrix random_orthogonal(std::uint64_t seed);

using OrthogonalSampler = std::function<OrthogonalMatrix()>;

/// Each crystal's lattice is left-multiplied by a fresh sample and its label
/// transformed accordingly. Record order and ids are preserved.
Dataset augment_testset(const Dataset &data, std::uint64_t seed);
Dataset augment_testset(const Dataset &data, const OrthogonalSampler &sample);

/// Random full-rank lattice with singular values in [lo, hi] and a random
/// O(3) orientation.
Mat3 random_lattice(std::mt19937_64 &rng, double lo = 3.0, double hi = 6.0);

struct SynthOptions {
  // Fraction of records drawn from cubic prototypes (simple cubic, CsCl,
  // rocksalt) in their standard setting and tagged "cubic". Piezoelectric
  // datasets never contain cubic records.
  double cubic_fraction = 0.2;
  int max_atoms = 6;
  GraphOptions graph;
};

/// Labels are closed-form functions of the canonical graph's edge
/// directions, rotated out to the crystal's frame, so label(g M) = g label(M)
/// exactly up to rounding.
Dataset synth_dataset(int n, TensorKind kind, std::uint64_t seed,
                      const SynthOptions &opts = {});

/// The closed-form target for one crystal.
TensorProperty synth_label(const Crystal &crystal, TensorKind kind,
                           const GraphOptions &graph = {});

struct MetricPair {
  MetricSummary original;
  MetricSummary augmented;
};

struct EquivarianceReport {
  std::uint64_t seed = 0;
  std::vector<std::string> ids;
  std::vector<double> deviations;     // wrapped, per sample
  std::vector<double> raw_deviations; // backbone alone, per sample
  double max_deviation = 0.0;
  double max_raw_deviation = 0.0;
  MetricPair wrapped;
  MetricPair raw;
  double tolerance = 1e-9;
  bool pass = false;
};

/// ||h(gM) - g h(M)||_F / ||h(M)||_F for one fresh g per record, plus
/// metrics of the wrapped pipeline and the bare backbone on the original and
/// augmented sets. Masking is applied as configured in the pipeline.
EquivarianceReport verify_equivariance(const Pipeline &p, const Dataset &data,
                                       std::uint64_t seed,
                                       double tolerance = 1e-9);
nlohmann::json to_json(const EquivarianceReport &r);

struct PerturbationReport {
  std::string id;
  std::vector<double> ratios; // starts with 0
  std::map<Canonicalization, std::vector<double>> variation; // percent
};

/// Scales the first lattice vector by (1 - r) and reports
/// 100 ||h_r - h_0||_F / ||h_0||_F with polar and QR canonicalization of the
/// same backbone. `ratios` must be strictly increasing and in [0, 1); a
/// leading 0 is added when absent.
PerturbationReport perturbation_study(const Pipeline &p, const Crystal &crystal,
                                      std::vector<double> ratios);
nlohmann::json to_json(const PerturbationReport &r);

struct ZeroSlotStats {
  std::size_t slots = 0;
  std::size_t successes = 0;
  double rate() const {
    return slots == 0 ? 1.0 : static_cast<double>(successes) / slots;
  }
};

struct ZeroElementReport {
  std::map<CrystalSystem, ZeroSlotStats> by_system;
  std::vector<std::string> warnings;
  ZeroSlotStats total() const;
};

/// A mask-zero slot succeeds when |pred| <= 1% of the mean |label| over the
/// label's nonzero entries. Records without a crystal system or mask are
/// skipped; all-zero labels are skipped with a warning.
ZeroElementReport zero_element_success(
    const std::vector<TensorProperty> &preds, const Dataset &labels,
    const std::map<CrystalSystem, SymmetryMask> &extra_masks = {});
nlohmann::json to_json(const ZeroElementReport &r);

nlohmann::json to_json(const MetricSummary &m);

/// Wall-clock seconds for `repeats` passes over the dataset, either through
/// goectp_predict or through raw_predict.
double time_predictions(const Pipeline &p, const Dataset &data, bool wrapped,
                        int repeats = 1);

} // namespace crystensor
