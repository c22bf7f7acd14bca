#include "crystensor/config.h"

#include "crystensor/error.h"

#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

namespace crystensor {

using json = nlohmann::json;

RunConfig RunConfig::defaults(TensorKind kind) {
  RunConfig c;
  c.kind = kind;
  c.predictor = PredictorConfig::for_kind(kind);
  return c;
}

namespace {

const std::set<std::string> &known_keys() {
  static const std::set<std::string> keys{
      "kind",      "split",        "seed",          "canonicalization",
      "k_neighbors", "max_offset_shells", "rbf_count", "rbf_c",
      "hidden",    "edge_dim",     "layers",        "clamp",
      "mask_mode", "lr0",          "epochs",        "batch_size",
      "weight_decay", "lr_power",  "huber_delta",   "threads",
      "embedding", "mask_files"};
  return keys;
}

template <typename T>
void read(const json &j, const char *key, T &into) {
  if (j.contains(key)) {
    into = j.at(key).get<T>();
  }
}

} // namespace

RunConfig apply_config(RunConfig c, const json &j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::ValidationError, "configuration must be a JSON object");
  }
  for (const auto &[key, value] : j.items()) {
    if (!known_keys().contains(key)) {
      throw Error(ErrorCode::ValidationError,
                  fmt::format("unknown configuration key '{}'", key));
    }
  }
  try {
    if (j.contains("kind")) {
      const TensorKind kind =
          tensor_kind_from_string(j.at("kind").get<std::string>());
      if (kind != c.kind) {
        // Switching task resets the dimension defaults before other keys.
        const PredictorConfig fresh = PredictorConfig::for_kind(kind);
        c.kind = kind;
        c.predictor.kind = kind;
        c.predictor.edge_dim = fresh.edge_dim;
        c.predictor.layers = fresh.layers;
      }
    }
    read(j, "split", c.split);
    read(j, "seed", c.seed);
    if (j.contains("canonicalization")) {
      c.pipeline.canonicalization = canonicalization_from_string(
          j.at("canonicalization").get<std::string>());
    }
    read(j, "k_neighbors", c.pipeline.graph.k_neighbors);
    read(j, "max_offset_shells", c.pipeline.graph.max_offset_shells);
    read(j, "rbf_count", c.pipeline.rbf.count);
    read(j, "rbf_c", c.pipeline.rbf.c);
    read(j, "hidden", c.predictor.hidden);
    read(j, "edge_dim", c.predictor.edge_dim);
    read(j, "layers", c.predictor.layers);
    if (j.contains("clamp")) {
      c.predictor.clamp = output_clamp_from_string(j.at("clamp").get<std::string>());
    }
    if (j.contains("mask_mode")) {
      c.predictor.mask_mode =
          mask_mode_from_string(j.at("mask_mode").get<std::string>());
    }
    read(j, "lr0", c.train.lr0);
    read(j, "epochs", c.train.epochs);
    read(j, "batch_size", c.train.batch_size);
    read(j, "weight_decay", c.train.weight_decay);
    read(j, "lr_power", c.train.lr_power);
    read(j, "huber_delta", c.train.huber_delta);
    read(j, "threads", c.train.threads);
    read(j, "embedding", c.embedding_path);
    read(j, "mask_files", c.mask_files);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::ValidationError,
                fmt::format("bad configuration value: {}", e.what()));
  }
  c.predictor.rbf_dim = c.pipeline.rbf.count;
  c.predictor.seed = c.seed;
  c.train.seed = c.seed;

  const double sum = c.split[0] + c.split[1] + c.split[2];
  if (std::abs(sum - 1.0) > 1e-9 || c.split[0] < 0 || c.split[1] < 0 ||
      c.split[2] < 0) {
    throw Error(ErrorCode::ValidationError,
                "split ratios must be non-negative and sum to 1");
  }
  if (c.pipeline.graph.k_neighbors < 1 || c.pipeline.rbf.count < 2 ||
      c.predictor.hidden < 1 || c.predictor.edge_dim < 1 ||
      c.predictor.layers < 0 || c.train.epochs < 0 || c.train.batch_size < 1 ||
      !(c.train.lr0 > 0.0) || c.train.weight_decay < 0.0 ||
      !(c.train.huber_delta > 0.0) || c.train.threads < 1) {
    throw Error(ErrorCode::ValidationError,
                "configuration sizes and rates must be positive");
  }
  return c;
}

RunConfig run_config_from_json(const json &j) {
  TensorKind kind = TensorKind::Dielectric;
  if (j.is_object() && j.contains("kind") && j.at("kind").is_string()) {
    kind = tensor_kind_from_string(j.at("kind").get<std::string>());
  }
  return apply_config(RunConfig::defaults(kind), j);
}

json to_json(const RunConfig &c) {
  return {{"kind", to_string(c.kind)},
          {"split", c.split},
          {"seed", c.seed},
          {"canonicalization", to_string(c.pipeline.canonicalization)},
          {"k_neighbors", c.pipeline.graph.k_neighbors},
          {"max_offset_shells", c.pipeline.graph.max_offset_shells},
          {"rbf_count", c.pipeline.rbf.count},
          {"rbf_c", c.pipeline.rbf.c},
          {"hidden", c.predictor.hidden},
          {"edge_dim", c.predictor.edge_dim},
          {"layers", c.predictor.layers},
          {"clamp", to_string(c.predictor.clamp)},
          {"mask_mode", to_string(c.predictor.mask_mode)},
          {"lr0", c.train.lr0},
          {"epochs", c.train.epochs},
          {"batch_size", c.train.batch_size},
          {"weight_decay", c.train.weight_decay},
          {"lr_power", c.train.lr_power},
          {"huber_delta", c.train.huber_delta},
          {"threads", c.train.threads},
          {"embedding", c.embedding_path},
          {"mask_files", c.mask_files}};
}

RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, fmt::format("cannot open config {}", path));
  }
  try {
    return run_config_from_json(json::parse(in));
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path, e.what()));
  }
}

Pipeline make_pipeline(const RunConfig &c) {
  Pipeline p;
  p.options = c.pipeline;
  PredictorConfig pc = c.predictor;
  pc.kind = c.kind;
  if (!c.embedding_path.empty()) {
    p.embedding = AtomEmbeddingTable::load_json(c.embedding_path);
  }
  pc.node_in = p.embedding.dim();
  pc.rbf_dim = c.pipeline.rbf.count;
  p.model = PredictorModel(pc);
  for (const auto &path : c.mask_files) {
    SymmetryMask m = load_mask_file(path);
    if (m.kind() != c.kind) {
      throw Error(ErrorCode::KindMismatch,
                  fmt::format("mask file {} is for {}, run is {}", path,
                              to_string(m.kind()), to_string(c.kind)));
    }
    p.extra_masks.insert_or_assign(m.crystal_system(), m);
  }
  return p;
}

} // namespace crystensor
