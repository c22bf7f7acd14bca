// Command-line front end: train, predict, evaluate, verify-equivariance,
// augment, perturb, synth, canon.
//
// Exit codes: 0 ok, 1 user error (bad input, bad flags), 2 internal error.
// Errors are printed to stderr as {"error": {"code": ..., "message": ...}}.

#include "crystensor/checkpoint.h"
#include "crystensor/config.h"
#include "crystensor/dataset.h"
#include "crystensor/error.h"
#include "crystensor/harness.h"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>

using namespace crystensor;
using json = nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd &m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(row);
  }
  return rows;
}

void write_text(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path));
  }
  out << text;
}

Dataset load_with_warnings(const std::string &path) {
  LoadResult r = load_dataset(path);
  for (const auto &w : r.warnings) {
    std::cerr << json{{"warning", w}}.dump() << '\n';
  }
  return std::move(r.records);
}

std::vector<double> parse_ratios(const std::string &spec) {
  // "a..b" expands with step 0.05; otherwise a comma-separated list.
  std::vector<double> out;
  if (const auto dots = spec.find(".."); dots != std::string::npos) {
    const double lo = std::stod(spec.substr(0, dots));
    const double hi = std::stod(spec.substr(dots + 2));
    for (int k = 0;; ++k) {
      const double r = lo + 0.05 * k;
      if (r > hi + 1e-12) {
        break;
      }
      out.push_back(std::round(r * 1e12) / 1e12);
    }
    return out;
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    out.push_back(std::stod(spec.substr(start, comma - start)));
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

// Replaces the model's mask mode while keeping its parameters.
void override_mask_mode(Pipeline &p, const std::string &mode) {
  if (mode.empty()) {
    return;
  }
  PredictorConfig c = p.model.config();
  c.mask_mode = mask_mode_from_string(mode);
  p.model = PredictorModel(c, p.model.parameters());
}

Pipeline load_pipeline(const std::string &path, const std::string &canon,
                       const std::string &mask_mode,
                       const std::vector<std::string> &mask_files) {
  Pipeline p = load_checkpoint(path).pipeline;
  if (!canon.empty()) {
    p.options.canonicalization = canonicalization_from_string(canon);
  }
  override_mask_mode(p, mask_mode);
  for (const auto &f : mask_files) {
    SymmetryMask m = load_mask_file(f);
    p.extra_masks.insert_or_assign(m.crystal_system(), m);
  }
  return p;
}

json evaluation_json(const Pipeline &p, const Dataset &data, bool raw) {
  std::vector<TensorProperty> preds;
  preds.reserve(data.size());
  for (const auto &r : data) {
    preds.push_back(raw ? raw_predict(p, r.crystal)
                        : goectp_predict(p, r.crystal, r.crystal_system));
  }
  const auto labels = targets(data);
  const LabelStatistics stats = label_statistics(labels);
  return {{"schema", "crystensor-evaluation/1"},
          {"kind", to_string(p.kind())},
          {"mode", raw ? "raw" : std::string(to_string(p.options.canonicalization))},
          {"metrics", to_json(summarize(preds, labels))},
          {"label_statistics",
           {{"fnorm_mean", stats.fnorm_mean}, {"fnorm_std", stats.fnorm_std}}},
          {"zero_elements", to_json(zero_element_success(preds, data, p.extra_masks))}};
}

std::string metrics_csv(const json &report) {
  const json &m = report.at("metrics");
  return fmt::format("mode,count,fnorm_mean,ewt25,ewt10,ewt5\n{},{},{},{},{},{}\n",
                     report.at("mode").get<std::string>(),
                     m.at("count").get<std::size_t>(),
                     m.at("fnorm_mean").get<double>(), m.at("ewt25").get<double>(),
                     m.at("ewt10").get<double>(), m.at("ewt5").get<double>());
}

[[noreturn]] void fail(int code, std::string_view kind, const std::string &msg) {
  std::cerr << json{{"error", {{"code", kind}, {"message", msg}}}}.dump() << '\n';
  std::exit(code);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Equivariant crystal tensor prediction toolkit"};
  app.require_subcommand(1);

  // train
  std::string config_path, data_path, out_path, model_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs, batch_size, hidden, layers, edge_dim, threads;
  std::optional<double> lr0;
  std::string kind_name, canon_name, mask_mode, clamp_name;
  std::vector<std::string> mask_files;
  auto *train_cmd = app.add_subcommand("train", "Train a model on a dataset");
  train_cmd->add_option("--config", config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--data", data_path, "JSONL dataset")->required();
  train_cmd->add_option("--out", out_path, "Checkpoint path")->required();
  train_cmd->add_option("--seed", seed, "Seed for init, split and shuffling");
  train_cmd->add_option("--kind", kind_name);
  train_cmd->add_option("--epochs", epochs);
  train_cmd->add_option("--batch-size", batch_size);
  train_cmd->add_option("--lr0", lr0);
  train_cmd->add_option("--hidden", hidden);
  train_cmd->add_option("--layers", layers);
  train_cmd->add_option("--edge-dim", edge_dim);
  train_cmd->add_option("--threads", threads);
  train_cmd->add_option("--canonicalization", canon_name, "polar, qr or none");
  train_cmd->add_option("--mask-mode", mask_mode, "off, weighted or independent");
  train_cmd->add_option("--clamp", clamp_name, "none or nonnegative");
  train_cmd->add_option("--mask-file", mask_files, "Extra symmetry masks");

  // predict
  auto *predict_cmd = app.add_subcommand("predict", "Predict tensors for a dataset");
  predict_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--data", data_path)->required();
  predict_cmd->add_option("--out", out_path, "Output JSONL (default stdout)");
  predict_cmd->add_option("--canonicalization", canon_name);
  predict_cmd->add_option("--mask-mode", mask_mode);
  predict_cmd->add_option("--mask-file", mask_files);

  // evaluate
  bool raw = false;
  std::string csv_path;
  auto *eval_cmd = app.add_subcommand("evaluate", "Fnorm and EwT metrics");
  eval_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", data_path)->required();
  eval_cmd->add_option("--out", out_path, "Report JSON (default stdout)");
  eval_cmd->add_option("--csv", csv_path, "Also write a metric table as CSV");
  eval_cmd->add_flag("--raw", raw, "Bypass canonicalization and rotation");
  eval_cmd->add_option("--canonicalization", canon_name);
  eval_cmd->add_option("--mask-mode", mask_mode);
  eval_cmd->add_option("--mask-file", mask_files);

  // verify-equivariance
  double tolerance = 1e-9;
  auto *verify_cmd =
      app.add_subcommand("verify-equivariance", "Augmented-set equivariance check");
  verify_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--data", data_path)->required();
  verify_cmd->add_option("--seed", seed)->required();
  verify_cmd->add_option("--out", out_path);
  verify_cmd->add_option("--tolerance", tolerance);
  verify_cmd->add_option("--canonicalization", canon_name);

  // augment
  auto *augment_cmd = app.add_subcommand("augment", "Apply random O(3) elements");
  augment_cmd->add_option("--data", data_path)->required();
  augment_cmd->add_option("--seed", seed)->required();
  augment_cmd->add_option("--out", out_path)->required();

  // perturb
  std::string record_id, ratio_spec = "0.05..0.40";
  auto *perturb_cmd = app.add_subcommand("perturb", "Lattice perturbation study");
  perturb_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  perturb_cmd->add_option("--data", data_path)->required();
  perturb_cmd->add_option("--id", record_id)->required();
  perturb_cmd->add_option("--ratios", ratio_spec, "a..b (step 0.05) or a,b,c");
  perturb_cmd->add_option("--out", out_path);

  // synth
  int n_samples = 0;
  double cubic_fraction = SynthOptions{}.cubic_fraction;
  auto *synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--kind", kind_name)->required();
  synth_cmd->add_option("--n", n_samples)->required()->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", seed)->required();
  synth_cmd->add_option("--out", out_path)->required();
  synth_cmd->add_option("--cubic-fraction", cubic_fraction)->check(CLI::Range(0.0, 1.0));

  // canon
  std::string method_name = "polar";
  auto *canon_cmd = app.add_subcommand("canon", "Canonical forms and Q matrices");
  canon_cmd->add_option("--data", data_path)->required();
  canon_cmd->add_option("--out", out_path);
  canon_cmd->add_option("--method", method_name, "polar or qr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    fail(1, "InvalidArgument", e.what());
  }

  try {
    if (train_cmd->parsed()) {
      RunConfig cfg = config_path.empty() ? RunConfig::defaults(TensorKind::Dielectric)
                                          : load_run_config(config_path);
      json overrides = json::object();
      if (!kind_name.empty()) overrides["kind"] = kind_name;
      if (seed) overrides["seed"] = *seed;
      if (epochs) overrides["epochs"] = *epochs;
      if (batch_size) overrides["batch_size"] = *batch_size;
      if (lr0) overrides["lr0"] = *lr0;
      if (hidden) overrides["hidden"] = *hidden;
      if (layers) overrides["layers"] = *layers;
      if (edge_dim) overrides["edge_dim"] = *edge_dim;
      if (!canon_name.empty()) overrides["canonicalization"] = canon_name;
      if (!mask_mode.empty()) overrides["mask_mode"] = mask_mode;
      if (!clamp_name.empty()) overrides["clamp"] = clamp_name;
      if (!mask_files.empty()) overrides["mask_files"] = mask_files;
      overrides["threads"] = threads ? *threads : threads_from_env();
      cfg = apply_config(cfg, overrides);

      const Dataset data = load_with_warnings(data_path);
      if (data.empty()) {
        throw Error(ErrorCode::EmptyDataset, "dataset is empty");
      }
      const Split s = split(data, cfg.split, cfg.seed);
      Checkpoint ck{make_pipeline(cfg), std::nullopt};
      ck.history = train_pipeline(ck.pipeline, s.train, s.val, cfg.train);
      save_checkpoint(out_path, ck);

      json summary = {{"config", to_json(cfg)},
                      {"sizes", {s.train.size(), s.val.size(), s.test.size()}},
                      {"history",
                       {{"train_loss", ck.history->train_loss},
                        {"val_loss", ck.history->val_loss}}}};
      if (!s.test.empty()) {
        summary["test"] = evaluation_json(ck.pipeline, s.test, false);
      }
      std::cout << summary.dump(2) << '\n';
    } else if (predict_cmd->parsed()) {
      const Pipeline p = load_pipeline(model_path, canon_name, mask_mode, mask_files);
      std::string text;
      for (const auto &r : load_with_warnings(data_path)) {
        const TensorProperty t = goectp_predict(p, r.crystal, r.crystal_system);
        text += json{{"id", r.crystal.id},
                     {"kind", to_string(t.kind)},
                     {"voigt", matrix_json(t.voigt)},
                     {"units", default_units(t.kind)}}
                    .dump() +
                '\n';
      }
      write_text(out_path, text);
    } else if (eval_cmd->parsed()) {
      const Pipeline p = load_pipeline(model_path, canon_name, mask_mode, mask_files);
      const json report = evaluation_json(p, load_with_warnings(data_path), raw);
      write_text(out_path, report.dump(2) + '\n');
      if (!csv_path.empty()) {
        write_text(csv_path, metrics_csv(report));
      }
    } else if (verify_cmd->parsed()) {
      const Pipeline p = load_pipeline(model_path, canon_name, "", {});
      const EquivarianceReport rep =
          verify_equivariance(p, load_with_warnings(data_path), *seed, tolerance);
      write_text(out_path, to_json(rep).dump(2) + '\n');
    } else if (augment_cmd->parsed()) {
      save_dataset(out_path, augment_testset(load_with_warnings(data_path), *seed));
    } else if (perturb_cmd->parsed()) {
      const Pipeline p = load_checkpoint(model_path).pipeline;
      const Dataset data = load_with_warnings(data_path);
      const auto it = std::find_if(data.begin(), data.end(), [&](const Record &r) {
        return r.crystal.id == record_id;
      });
      if (it == data.end()) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("no record with id '{}'", record_id));
      }
      std::vector<double> ratios;
      try {
        ratios = parse_ratios(ratio_spec);
      } catch (const std::logic_error &) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("cannot parse ratios '{}'", ratio_spec));
      }
      write_text(out_path,
                 to_json(perturbation_study(p, it->crystal, ratios)).dump(2) + '\n');
    } else if (synth_cmd->parsed()) {
      SynthOptions opts;
      opts.cubic_fraction = cubic_fraction;
      save_dataset(out_path, synth_dataset(n_samples, tensor_kind_from_string(kind_name),
                                           *seed, opts));
    } else if (canon_cmd->parsed()) {
      const CanonicalMethod method = method_name == "qr" ? CanonicalMethod::QR
                                     : method_name == "polar"
                                         ? CanonicalMethod::Polar
                                         : throw Error(ErrorCode::InvalidArgument,
                                                       fmt::format("unknown method '{}'",
                                                                   method_name));
      std::string text;
      for (const auto &r : load_with_warnings(data_path)) {
        const CanonicalDecomposition d = decompose(r.crystal.lattice, method);
        // h is written with lattice vectors as rows, like dataset files.
        text += json{{"id", r.crystal.id},
                     {"method", method_name},
                     {"q", matrix_json(d.q.matrix())},
                     {"h", matrix_json(d.h.transpose())}}
                    .dump() +
                '\n';
      }
      write_text(out_path, text);
    }
  } catch (const Error &e) {
    fail(1, to_string(e.code()), e.what());
  } catch (const std::exception &e) {
    fail(2, "InternalError", e.what());
  }
  return 0;
}
