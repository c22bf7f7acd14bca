#include "crystensor/pipeline.h"

#include "crystensor/error.h"

#include <fmt/format.h>

namespace crystensor {

std::string_view to_string(Canonicalization c) {
  switch (c) {
  case Canonicalization::Polar:
    return "polar";
  case Canonicalization::QR:
    return "qr";
  case Canonicalization::None:
    return "none";
  }
  return "polar";
}

Canonicalization canonicalization_from_string(std::string_view name) {
  if (name == "polar") {
    return Canonicalization::Polar;
  }
  if (name == "qr") {
    return Canonicalization::QR;
  }
  if (name == "none") {
    return Canonicalization::None;
  }
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown canonicalization '{}'", name));
}

PreparedInput prepare(const Pipeline &p, const Crystal &crystal,
                      Canonicalization c) {
  PreparedInput out;
  if (c == Canonicalization::None) {
    out.graph = build_graph(crystal, p.options.graph);
    featurize(out.graph, crystal, p.embedding, p.options.rbf);
    out.q = OrthogonalMatrix::identity();
    return out;
  }
  const CanonicalForm cf = canonical_form(
      crystal, c == Canonicalization::Polar ? CanonicalMethod::Polar
                                            : CanonicalMethod::QR);
  out.graph = build_graph(cf.crystal, p.options.graph);
  featurize(out.graph, cf.crystal, p.embedding, p.options.rbf);
  out.q = cf.q;
  return out;
}

TensorProperty head_to_property(TensorKind kind, const Eigen::VectorXd &head) {
  const int rows = voigt_rows(kind);
  const int cols = voigt_cols(kind);
  const int expected = kind == TensorKind::Dielectric ? 6 : rows * cols;
  if (head.size() != expected) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("{} head needs {} outputs, got {}", to_string(kind),
                            expected, head.size()));
  }
  Eigen::MatrixXd v(rows, cols);
  if (kind == TensorKind::Dielectric) {
    v << head(0), head(5), head(4),
         head(5), head(1), head(3),
         head(4), head(3), head(2);
    return TensorProperty{kind, v};
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      v(r, c) = head(r * cols + c);
    }
  }
  if (kind == TensorKind::Elastic) {
    v = (0.5 * (v + v.transpose())).eval();
  }
  return TensorProperty{kind, v};
}

std::optional<SymmetryMask> resolve_mask(const Pipeline &p,
                                         std::optional<CrystalSystem> system) {
  if (p.model.config().mask_mode == MaskMode::Off || !system) {
    return std::nullopt;
  }
  if (auto it = p.extra_masks.find(*system); it != p.extra_masks.end()) {
    return it->second;
  }
  return builtin_mask(p.kind(), *system);
}

namespace {

// Reads each independent component from the first slot of its group and
// rebuilds the full matrix from those values alone.
TensorProperty from_first_slots(const TensorProperty &t,
                                const SymmetryMask &mask) {
  Eigen::VectorXd values =
      Eigen::VectorXd::Zero(mask.independent_count());
  std::vector<bool> seen(static_cast<std::size_t>(mask.independent_count()));
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      const MaskSlot &s = mask.slot(r, c);
      if (s.is_zero() || seen[static_cast<std::size_t>(s.component)]) {
        continue;
      }
      seen[static_cast<std::size_t>(s.component)] = true;
      values(s.component) = s.sign * t.voigt(r, c);
    }
  }
  return reconstruct_from_independent(values, mask);
}

} // namespace

TensorProperty finalize(const Pipeline &p, const Eigen::VectorXd &head,
                        const OrthogonalMatrix &q,
                        const std::optional<SymmetryMask> &mask) {
  TensorProperty t = transform_property(head_to_property(p.kind(), head), q);
  if (!mask) {
    return t;
  }
  if (p.model.config().mask_mode == MaskMode::IndependentOnly) {
    return from_first_slots(t, *mask);
  }
  return apply_mask(t, *mask);
}

Eigen::VectorXd flatten(const TensorProperty &t) {
  Eigen::VectorXd out(t.voigt.size());
  for (Eigen::Index r = 0; r < t.voigt.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.voigt.cols(); ++c) {
      out(r * t.voigt.cols() + c) = t.voigt(r, c);
    }
  }
  return out;
}

Eigen::MatrixXd readout_matrix(const Pipeline &p, const OrthogonalMatrix &q,
                               const std::optional<SymmetryMask> &mask) {
  const int out_dim = p.model.config().output_dim();
  const int size = voigt_rows(p.kind()) * voigt_cols(p.kind());
  Eigen::MatrixXd m(size, out_dim);
  for (int k = 0; k < out_dim; ++k) {
    m.col(k) = flatten(finalize(p, Eigen::VectorXd::Unit(out_dim, k), q, mask));
  }
  return m;
}

TensorProperty predict_with(const Pipeline &p, const Crystal &crystal,
                            Canonicalization c,
                            std::optional<CrystalSystem> system) {
  const PreparedInput in = prepare(p, crystal, c);
  return finalize(p, forward(p.model, in.graph), in.q, resolve_mask(p, system));
}

TensorProperty goectp_predict(const Pipeline &p, const Crystal &crystal,
                              std::optional<CrystalSystem> system) {
  return predict_with(p, crystal, p.options.canonicalization, system);
}

TensorProperty raw_predict(const Pipeline &p, const Crystal &crystal) {
  const PreparedInput in = prepare(p, crystal, Canonicalization::None);
  return head_to_property(p.kind(), forward(p.model, in.graph));
}

std::vector<TensorProperty> predict_all(const Pipeline &p, const Dataset &data,
                                        Canonicalization c) {
  std::vector<TensorProperty> out;
  out.reserve(data.size());
  for (const auto &r : data) {
    out.push_back(predict_with(p, r.crystal, c, r.crystal_system));
  }
  return out;
}

TrainingSample make_training_sample(const Pipeline &p, const Record &r) {
  if (r.target.kind != p.kind()) {
    throw Error(ErrorCode::KindMismatch,
                fmt::format("record '{}' has a {} target, model predicts {}",
                            r.crystal.id, to_string(r.target.kind),
                            to_string(p.kind())));
  }
  PreparedInput in = prepare(p, r.crystal, p.options.canonicalization);
  TrainingSample s;
  s.readout = readout_matrix(p, in.q, resolve_mask(p, r.crystal_system));
  s.graph = std::move(in.graph);
  s.target = flatten(r.target);
  return s;
}

std::vector<TrainingSample> make_training_samples(const Pipeline &p,
                                                  const Dataset &data) {
  std::vector<TrainingSample> out;
  out.reserve(data.size());
  for (const auto &r : data) {
    out.push_back(make_training_sample(p, r));
  }
  return out;
}

TrainHistory train_pipeline(Pipeline &p, const Dataset &train_set,
                            const Dataset &val_set, const TrainConfig &cfg) {
  const auto train_samples = make_training_samples(p, train_set);
  const auto val_samples = make_training_samples(p, val_set);
  return train(p.model, train_samples, val_samples, cfg);
}

} // namespace crystensor
