#pragma once

#include "crystensor/pipeline.h"

#include <array>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

namespace crystensor {

/// Everything a `train` run needs. Read from a JSON object with flat keys:
///   kind, split ([train, val, test]), seed, canonicalization,
///   k_neighbors, max_offset_shells, rbf_count, rbf_c,
///   hidden, edge_dim, layers, clamp, mask_mode,
///   lr0, epochs, batch_size, weight_decay, lr_power, huber_delta, threads,
///   embedding (path, optional), mask_files (paths, optional).
/// Missing keys take the defaults for the task kind; unknown keys are a
/// ValidationError.
struct RunConfig {
  TensorKind kind = TensorKind::Dielectric;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
  PipelineOptions pipeline;
  PredictorConfig predictor;
  TrainConfig train;
  std::string embedding_path;
  std::vector<std::string> mask_files;

  static RunConfig defaults(TensorKind kind);
};

/// Applies the keys present in `j` on top of `base`.
RunConfig apply_config(RunConfig base, const nlohmann::json &j);
RunConfig run_config_from_json(const nlohmann::json &j);
nlohmann::json to_json(const RunConfig &c);
RunConfig load_run_config(const std::string &path);

/// Fresh, untrained pipeline described by the configuration.
Pipeline make_pipeline(const RunConfig &c);

} // namespace crystensor
