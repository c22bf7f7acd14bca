#pragma once

#include "crystensor/pipeline.h"

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>

namespace crystensor {

inline constexpr const char *kCheckpointSchema = "crystensor-checkpoint/1";

struct Checkpoint {
  Pipeline pipeline;
  std::optional<TrainHistory> history;
};

/// Versioned checkpoint: schema id, task kind, model dimensions, seed,
/// pipeline options, the atom embedding (omitted for the one-hot default),
/// user masks, and one flat row-major array per parameter block in declared
/// order. Keys are emitted sorted, floats in shortest round-trip form, so
/// load -> save reproduces the file byte for byte.
nlohmann::json checkpoint_to_json(const Checkpoint &c);
Checkpoint checkpoint_from_json(const nlohmann::json &j);

void save_checkpoint(const std::string &path, const Checkpoint &c);
Checkpoint load_checkpoint(const std::string &path);

} // namespace crystensor
