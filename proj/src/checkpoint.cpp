#include "crystensor/checkpoint.h"

#include "crystensor/error.h"

#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>

namespace crystensor {

using json = nlohmann::json;

namespace {

json flat(const Eigen::MatrixXd &m) {
  json values = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      values.push_back(m(r, c));
    }
  }
  return values;
}

} // namespace

json checkpoint_to_json(const Checkpoint &ck) {
  const Pipeline &p = ck.pipeline;
  const PredictorConfig &c = p.model.config();
  json j;
  j["schema"] = kCheckpointSchema;
  j["kind"] = to_string(c.kind);
  j["model"] = {{"node_in", c.node_in},     {"hidden", c.hidden},
                {"rbf_dim", c.rbf_dim},     {"edge_dim", c.edge_dim},
                {"layers", c.layers},       {"clamp", to_string(c.clamp)},
                {"mask_mode", to_string(c.mask_mode)}, {"seed", c.seed}};
  j["pipeline"] = {
      {"canonicalization", to_string(p.options.canonicalization)},
      {"k_neighbors", p.options.graph.k_neighbors},
      {"max_offset_shells", p.options.graph.max_offset_shells},
      {"tie_tolerance", p.options.graph.tie_tolerance},
      {"rbf_c", p.options.rbf.c},
      {"rbf_count", p.options.rbf.count},
      {"rbf_lo", p.options.rbf.lo},
      {"rbf_hi", p.options.rbf.hi}};
  if (p.embedding.is_one_hot()) {
    j["embedding"] = {{"one_hot", p.embedding.dim()}};
  } else {
    json rows = json::object();
    for (const auto &[z, v] : p.embedding.rows()) {
      rows[std::to_string(z)] = std::vector<double>(v.data(), v.data() + v.size());
    }
    j["embedding"] = {{"dim", p.embedding.dim()}, {"rows", rows}};
  }
  json masks = json::array();
  for (const auto &[system, m] : p.extra_masks) {
    masks.push_back(mask_to_json(m));
  }
  j["masks"] = masks;
  json params = json::array();
  for (const auto &param : p.model.parameters()) {
    params.push_back({{"name", param.name},
                      {"rows", param.value.rows()},
                      {"cols", param.value.cols()},
                      {"values", flat(param.value)}});
  }
  j["parameters"] = params;
  if (ck.history) {
    j["history"] = {{"train_loss", ck.history->train_loss},
                    {"val_loss", ck.history->val_loss}};
  }
  return j;
}

Checkpoint checkpoint_from_json(const json &j) {
  try {
    if (j.at("schema").get<std::string>() != kCheckpointSchema) {
      throw Error(ErrorCode::ValidationError,
                  fmt::format("unsupported checkpoint schema '{}'",
                              j.at("schema").get<std::string>()));
    }
    PredictorConfig c;
    c.kind = tensor_kind_from_string(j.at("kind").get<std::string>());
    const json &m = j.at("model");
    c.node_in = m.at("node_in").get<int>();
    c.hidden = m.at("hidden").get<int>();
    c.rbf_dim = m.at("rbf_dim").get<int>();
    c.edge_dim = m.at("edge_dim").get<int>();
    c.layers = m.at("layers").get<int>();
    c.clamp = output_clamp_from_string(m.at("clamp").get<std::string>());
    c.mask_mode = mask_mode_from_string(m.at("mask_mode").get<std::string>());
    c.seed = m.at("seed").get<std::uint64_t>();

    std::vector<Parameter> params = parameter_layout(c);
    const json &jp = j.at("parameters");
    if (jp.size() != params.size()) {
      throw Error(ErrorCode::DimMismatch,
                  fmt::format("checkpoint has {} parameter blocks, expected {}",
                              jp.size(), params.size()));
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
      Parameter &param = params[b];
      const json &block = jp[b];
      const auto name = block.at("name").get<std::string>();
      const auto values = block.at("values").get<std::vector<double>>();
      if (name != param.name || block.at("rows").get<Eigen::Index>() != param.value.rows() ||
          block.at("cols").get<Eigen::Index>() != param.value.cols() ||
          static_cast<Eigen::Index>(values.size()) != param.value.size()) {
        throw Error(ErrorCode::DimMismatch,
                    fmt::format("parameter block {} ('{}') does not match the "
                                "configured layout ('{}')",
                                b, name, param.name));
      }
      for (Eigen::Index r = 0; r < param.value.rows(); ++r) {
        for (Eigen::Index col = 0; col < param.value.cols(); ++col) {
          param.value(r, col) =
              values[static_cast<std::size_t>(r * param.value.cols() + col)];
        }
      }
    }

    Checkpoint ck;
    Pipeline &p = ck.pipeline;
    p.model = PredictorModel(c, std::move(params));
    const json &po = j.at("pipeline");
    p.options.canonicalization =
        canonicalization_from_string(po.at("canonicalization").get<std::string>());
    p.options.graph.k_neighbors = po.at("k_neighbors").get<int>();
    p.options.graph.max_offset_shells = po.at("max_offset_shells").get<int>();
    p.options.graph.tie_tolerance = po.at("tie_tolerance").get<double>();
    p.options.rbf.c = po.at("rbf_c").get<double>();
    p.options.rbf.count = po.at("rbf_count").get<int>();
    p.options.rbf.lo = po.at("rbf_lo").get<double>();
    p.options.rbf.hi = po.at("rbf_hi").get<double>();

    const json &e = j.at("embedding");
    if (e.contains("one_hot")) {
      p.embedding = AtomEmbeddingTable::one_hot(e.at("one_hot").get<int>());
    } else {
      std::map<int, Eigen::VectorXd> rows;
      for (const auto &[key, value] : e.at("rows").items()) {
        const auto v = value.get<std::vector<double>>();
        rows[std::stoi(key)] =
            Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      p.embedding = AtomEmbeddingTable(e.at("dim").get<int>(), std::move(rows));
    }
    for (const auto &jm : j.at("masks")) {
      SymmetryMask mask = mask_from_json(jm);
      p.extra_masks.insert_or_assign(mask.crystal_system(), mask);
    }
    if (j.contains("history")) {
      ck.history = TrainHistory{
          j.at("history").at("train_loss").get<std::vector<double>>(),
          j.at("history").at("val_loss").get<std::vector<double>>()};
    }
    return ck;
  } catch (const json::exception &e) {
    throw Error(ErrorCode::ParseError,
                fmt::format("malformed checkpoint: {}", e.what()));
  }
}

void save_checkpoint(const std::string &path, const Checkpoint &c) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, fmt::format("cannot write checkpoint {}", path));
  }
  out << checkpoint_to_json(c).dump() << '\n';
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, fmt::format("cannot open checkpoint {}", path));
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path, e.what()));
  }
  return checkpoint_from_json(j);
}

} // namespace crystensor
