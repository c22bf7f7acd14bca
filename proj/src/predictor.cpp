#include "crystensor/predictor.h"

#include "crystensor/error.h"

#include <cmath>
#include <fmt/format.h>
#include <random>

namespace crystensor {

std::string_view to_string(OutputClamp clamp) {
  return clamp == OutputClamp::None ? "none" : "nonnegative";
}

std::string_view to_string(MaskMode mode) {
  switch (mode) {
  case MaskMode::Off:
    return "off";
  case MaskMode::Weighted:
    return "weighted";
  case MaskMode::IndependentOnly:
    return "independent";
  }
  return "off";
}

OutputClamp output_clamp_from_string(std::string_view name) {
  if (name == "none") {
    return OutputClamp::None;
  }
  if (name == "nonnegative" || name == "relu") {
    return OutputClamp::NonNegative;
  }
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown output clamp '{}'", name));
}

MaskMode mask_mode_from_string(std::string_view name) {
  if (name == "off") {
    return MaskMode::Off;
  }
  if (name == "weighted") {
    return MaskMode::Weighted;
  }
  if (name == "independent") {
    return MaskMode::IndependentOnly;
  }
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown mask mode '{}'", name));
}

PredictorConfig PredictorConfig::for_kind(TensorKind kind) {
  PredictorConfig c;
  c.kind = kind;
  if (kind == TensorKind::Elastic) {
    c.edge_dim = 256;
    c.layers = 2;
  }
  return c;
}

int PredictorConfig::output_dim() const {
  switch (kind) {
  case TensorKind::Dielectric:
    return 6;
  case TensorKind::Piezoelectric:
    return 18;
  case TensorKind::Elastic:
    return 36;
  }
  return 0;
}

namespace {

constexpr int kBlocksPerLayer = 20;
constexpr double kNormEps = 1e-5;

// Offsets inside a transformer layer's parameter run.
enum LayerBlock {
  kQW, kQB, kKW, kKB, kVW, kVB, kEW, kEB,
  kKey1W, kKey1B, kKey2W, kKey2B,
  kVal1W, kVal1B, kVal2W, kVal2B,
  kAttGain, kAttBias, kMsgGain, kMsgBias,
};

constexpr int kAtomW = 0;
constexpr int kAtomB = 1;
constexpr int kEdgeW = 2;
constexpr int kEdgeB = 3;
constexpr int kFirstLayer = 4;

int layer_base(int layer) { return kFirstLayer + layer * kBlocksPerLayer; }
int head_base(const PredictorConfig &c) { return layer_base(c.layers); }

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::MatrixXd softplus(const Eigen::MatrixXd &x) {
  return x.unaryExpr([](double v) { return softplus(v); });
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd &x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Eigen::MatrixXd affine(const Eigen::MatrixXd &x, const Eigen::MatrixXd &w,
                       const Eigen::MatrixXd &b) {
  Eigen::MatrixXd y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

// Backward of y = x w + b; accumulates parameter gradients and returns dx.
Eigen::MatrixXd affine_backward(const Eigen::MatrixXd &x,
                                const Eigen::MatrixXd &w,
                                const Eigen::MatrixXd &dy, Eigen::MatrixXd &dw,
                                Eigen::MatrixXd &db) {
  dw.noalias() += x.transpose() * dy;
  db += dy.colwise().sum();
  return dy * w.transpose();
}

struct NormCache {
  Eigen::MatrixXd xhat;
  Eigen::VectorXd inv_std;
};

// Row-wise layer normalization with learned gain and bias.
Eigen::MatrixXd layer_norm(const Eigen::MatrixXd &x, const Eigen::MatrixXd &gain,
                           const Eigen::MatrixXd &bias, NormCache &cache) {
  const Eigen::Index d = x.cols();
  cache.xhat.resize(x.rows(), d);
  cache.inv_std.resize(x.rows());
  Eigen::MatrixXd y(x.rows(), d);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var =
        (x.row(r).array() - mean).square().sum() / static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    cache.inv_std(r) = inv;
    cache.xhat.row(r) = (x.row(r).array() - mean) * inv;
    y.row(r) = cache.xhat.row(r).array() * gain.row(0).array() +
               bias.row(0).array();
  }
  return y;
}

Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd &dy,
                                    const Eigen::MatrixXd &gain,
                                    const NormCache &cache,
                                    Eigen::MatrixXd &dgain,
                                    Eigen::MatrixXd &dbias) {
  const Eigen::Index d = dy.cols();
  dgain += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  Eigen::MatrixXd dx(dy.rows(), d);
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const Eigen::RowVectorXd dxhat = dy.row(r).cwiseProduct(gain.row(0));
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(cache.xhat.row(r)).mean();
    dx.row(r) = cache.inv_std(r) *
                (dxhat.array() - m1 - cache.xhat.row(r).array() * m2).matrix();
  }
  return dx;
}

struct LayerCache {
  Eigen::MatrixXd f_in;             // n x d
  Eigen::MatrixXd qn, kn, vn;       // n x d
  Eigen::MatrixXd ee;               // E x de
  Eigen::MatrixXd q_e;              // E x d
  Eigen::MatrixXd kcat;             // E x 2d
  Eigen::MatrixXd vcat;             // E x (2d + de)
  Eigen::MatrixXd key_h, key_a, key_o;
  Eigen::MatrixXd val_h, val_a, val_o;
  Eigen::MatrixXd gate;
  NormCache att_norm;
  Eigen::MatrixXd agg;
  NormCache msg_norm;
  Eigen::MatrixXd pre;              // n x d, before the output softplus
};

} // namespace

struct ForwardCache {
  Eigen::MatrixXd node_in;    // n x node_in
  Eigen::MatrixXd edge_in;    // E x (rbf + 3)
  Eigen::MatrixXd edge_h;     // pre-activation of the edge projection
  Eigen::MatrixXd edge_feat;  // E x de
  std::vector<LayerCache> layers;
  Eigen::MatrixXd f_final;    // n x d
  Eigen::MatrixXd pooled;     // 1 x d
  Eigen::MatrixXd head_h;     // 1 x d
  Eigen::MatrixXd head_a;     // 1 x d
  Eigen::MatrixXd out_raw;    // 1 x out
};

std::vector<Parameter> parameter_layout(const PredictorConfig &c) {
  const int d = c.hidden;
  const int de = c.edge_dim;
  std::vector<Parameter> p;
  auto add = [&](std::string name, int rows, int cols) {
    p.push_back(Parameter{std::move(name), Eigen::MatrixXd::Zero(rows, cols)});
  };
  add("atom_embed.weight", c.node_in, d);
  add("atom_embed.bias", 1, d);
  add("edge_proj.weight", c.edge_in(), de);
  add("edge_proj.bias", 1, de);
  for (int l = 0; l < c.layers; ++l) {
    const std::string pre = fmt::format("layer{}.", l);
    add(pre + "query.weight", d, d);
    add(pre + "query.bias", 1, d);
    add(pre + "key.weight", d, d);
    add(pre + "key.bias", 1, d);
    add(pre + "value.weight", d, d);
    add(pre + "value.bias", 1, d);
    add(pre + "edge.weight", de, de);
    add(pre + "edge.bias", 1, de);
    add(pre + "key_mlp1.weight", 2 * d, d);
    add(pre + "key_mlp1.bias", 1, d);
    add(pre + "key_mlp2.weight", d, d);
    add(pre + "key_mlp2.bias", 1, d);
    add(pre + "value_mlp1.weight", 2 * d + de, d);
    add(pre + "value_mlp1.bias", 1, d);
    add(pre + "value_mlp2.weight", d, d);
    add(pre + "value_mlp2.bias", 1, d);
    add(pre + "attn_norm.gain", 1, d);
    add(pre + "attn_norm.bias", 1, d);
    add(pre + "msg_norm.gain", 1, d);
    add(pre + "msg_norm.bias", 1, d);
  }
  add("head1.weight", d, d);
  add("head1.bias", 1, d);
  add("head2.weight", d, c.output_dim());
  add("head2.bias", 1, c.output_dim());
  return p;
}

PredictorModel::PredictorModel(const PredictorConfig &config)
    : config_(config), params_(parameter_layout(config)) {
  if (config.hidden < 1 || config.edge_dim < 1 || config.layers < 0 ||
      config.node_in < 1 || config.rbf_dim < 1) {
    throw Error(ErrorCode::InvalidArgument, "predictor dimensions must be positive");
  }
  std::mt19937_64 rng(config.seed);
  auto uniform = [&rng](double bound) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * bound;
  };
  // Linear layers use U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weight and bias;
  // normalization gains start at one.
  for (std::size_t b = 0; b < params_.size(); ++b) {
    auto &p = params_[b];
    const bool is_gain = p.name.ends_with(".gain");
    const bool is_norm_bias =
        p.name.ends_with("norm.bias");
    if (is_gain) {
      p.value.setOnes();
      continue;
    }
    if (is_norm_bias) {
      continue;
    }
    const bool is_bias = p.name.ends_with(".bias");
    const Eigen::Index fan_in =
        is_bias ? params_[b - 1].value.rows() : p.value.rows();
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        p.value(r, c) = uniform(bound);
      }
    }
  }
}

PredictorModel::PredictorModel(const PredictorConfig &config,
                               std::vector<Parameter> params)
    : config_(config), params_(std::move(params)) {
  const auto layout = parameter_layout(config);
  if (layout.size() != params_.size()) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("expected {} parameter blocks, got {}",
                            layout.size(), params_.size()));
  }
  for (std::size_t b = 0; b < layout.size(); ++b) {
    if (layout[b].value.rows() != params_[b].value.rows() ||
        layout[b].value.cols() != params_[b].value.cols()) {
      throw Error(ErrorCode::DimMismatch,
                  fmt::format("parameter {} has shape {}x{}, expected {}x{}",
                              layout[b].name, params_[b].value.rows(),
                              params_[b].value.cols(), layout[b].value.rows(),
                              layout[b].value.cols()));
    }
    params_[b].name = layout[b].name;
  }
}

std::size_t PredictorModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto &p : params_) {
    n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

Gradients PredictorModel::zero_gradients() const {
  Gradients g;
  g.reserve(params_.size());
  for (const auto &p : params_) {
    g.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
  return g;
}

namespace {

void check_dims(const PredictorModel &model, const CrystalGraph &graph) {
  const auto &c = model.config();
  if (graph.num_nodes < 1 || graph.node_feats.rows() != graph.num_nodes ||
      graph.node_feats.cols() != c.node_in) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("graph node features are {}x{}, model expects "
                            "{} nodes x {}",
                            graph.node_feats.rows(), graph.node_feats.cols(),
                            graph.num_nodes, c.node_in));
  }
  if (graph.edge_feats.rows() != static_cast<Eigen::Index>(graph.edges.size()) ||
      graph.edge_feats.cols() != c.rbf_dim) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("graph edge features are {}x{}, model expects "
                            "{} edges x {}",
                            graph.edge_feats.rows(), graph.edge_feats.cols(),
                            graph.edges.size(), c.rbf_dim));
  }
}

Eigen::VectorXd run_forward(const PredictorModel &model,
                            const CrystalGraph &graph, ForwardCache &fc) {
  check_dims(model, graph);
  const auto &c = model.config();
  const auto &P = model.parameters();
  const int n = graph.num_nodes;
  const auto num_edges = static_cast<Eigen::Index>(graph.edges.size());
  const int d = c.hidden;
  const int de = c.edge_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  fc.node_in = graph.node_feats;
  fc.edge_in.resize(num_edges, c.edge_in());
  fc.edge_in.leftCols(c.rbf_dim) = graph.edge_feats;
  for (Eigen::Index e = 0; e < num_edges; ++e) {
    const auto &edge = graph.edges[static_cast<std::size_t>(e)];
    fc.edge_in.block(e, c.rbf_dim, 1, 3) = (edge.vec / edge.length).transpose();
  }
  fc.edge_h = affine(fc.edge_in, P[kEdgeW].value, P[kEdgeB].value);
  fc.edge_feat = softplus(fc.edge_h);

  Eigen::MatrixXd f = affine(fc.node_in, P[kAtomW].value, P[kAtomB].value);
  fc.layers.assign(c.layers, LayerCache{});
  for (int l = 0; l < c.layers; ++l) {
    LayerCache &lc = fc.layers[l];
    const int base = layer_base(l);
    auto W = [&](int block) -> const Eigen::MatrixXd & {
      return P[base + block].value;
    };
    lc.f_in = f;
    lc.qn = affine(f, W(kQW), W(kQB));
    lc.kn = affine(f, W(kKW), W(kKB));
    lc.vn = affine(f, W(kVW), W(kVB));
    lc.ee = affine(fc.edge_feat, W(kEW), W(kEB));
    lc.q_e.resize(num_edges, d);
    lc.kcat.resize(num_edges, 2 * d);
    lc.vcat.resize(num_edges, 2 * d + de);
    for (Eigen::Index e = 0; e < num_edges; ++e) {
      const auto &edge = graph.edges[static_cast<std::size_t>(e)];
      lc.q_e.row(e) = lc.qn.row(edge.i);
      lc.kcat.block(e, 0, 1, d) = lc.kn.row(edge.i);
      lc.kcat.block(e, d, 1, d) = lc.kn.row(edge.j);
      lc.vcat.block(e, 0, 1, d) = lc.vn.row(edge.i);
      lc.vcat.block(e, d, 1, d) = lc.vn.row(edge.j);
    }
    lc.vcat.rightCols(de) = lc.ee;

    lc.key_h = affine(lc.kcat, W(kKey1W), W(kKey1B));
    lc.key_a = softplus(lc.key_h);
    lc.key_o = affine(lc.key_a, W(kKey2W), W(kKey2B));
    const Eigen::MatrixXd alpha =
        (lc.q_e.array() * lc.key_o.array() * scale).matrix();
    const Eigen::MatrixXd alpha_n =
        layer_norm(alpha, W(kAttGain), W(kAttBias), lc.att_norm);
    lc.gate = sigmoid(alpha_n);

    lc.val_h = affine(lc.vcat, W(kVal1W), W(kVal1B));
    lc.val_a = softplus(lc.val_h);
    lc.val_o = affine(lc.val_a, W(kVal2W), W(kVal2B));

    lc.agg = Eigen::MatrixXd::Zero(n, d);
    for (Eigen::Index e = 0; e < num_edges; ++e) {
      const auto &edge = graph.edges[static_cast<std::size_t>(e)];
      lc.agg.row(edge.i) += lc.gate.row(e).cwiseProduct(lc.val_o.row(e));
    }
    const Eigen::MatrixXd agg_n =
        layer_norm(lc.agg, W(kMsgGain), W(kMsgBias), lc.msg_norm);
    lc.pre = f + agg_n;
    f = softplus(lc.pre);
  }
  fc.f_final = f;
  fc.pooled = f.colwise().mean();
  const int hb = head_base(c);
  fc.head_h = affine(fc.pooled, P[hb].value, P[hb + 1].value);
  fc.head_a = softplus(fc.head_h);
  fc.out_raw = affine(fc.head_a, P[hb + 2].value, P[hb + 3].value);
  Eigen::VectorXd out = fc.out_raw.row(0).transpose();
  if (c.clamp == OutputClamp::NonNegative) {
    out = out.cwiseMax(0.0);
  }
  return out;
}

Gradients run_backward(const PredictorModel &model, const CrystalGraph &graph,
                       const ForwardCache &fc, const Eigen::VectorXd &d_out) {
  const auto &c = model.config();
  const auto &P = model.parameters();
  Gradients G = model.zero_gradients();
  const int n = graph.num_nodes;
  const auto num_edges = static_cast<Eigen::Index>(graph.edges.size());
  const int d = c.hidden;
  const int de = c.edge_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Eigen::MatrixXd d_raw = d_out.transpose();
  if (c.clamp == OutputClamp::NonNegative) {
    for (Eigen::Index k = 0; k < d_raw.cols(); ++k) {
      if (fc.out_raw(0, k) <= 0.0) {
        d_raw(0, k) = 0.0;
      }
    }
  }
  const int hb = head_base(c);
  Eigen::MatrixXd d_head_a =
      affine_backward(fc.head_a, P[hb + 2].value, d_raw, G[hb + 2], G[hb + 3]);
  Eigen::MatrixXd d_head_h =
      (d_head_a.array() * sigmoid(fc.head_h).array()).matrix();
  Eigen::MatrixXd d_pooled =
      affine_backward(fc.pooled, P[hb].value, d_head_h, G[hb], G[hb + 1]);

  Eigen::MatrixXd df(n, d);
  df.rowwise() = d_pooled.row(0) / static_cast<double>(n);
  Eigen::MatrixXd d_edge_feat = Eigen::MatrixXd::Zero(num_edges, de);

  for (int l = c.layers - 1; l >= 0; --l) {
    const LayerCache &lc = fc.layers[l];
    const int base = layer_base(l);
    auto W = [&](int block) -> const Eigen::MatrixXd & {
      return P[base + block].value;
    };
    auto dW = [&](int block) -> Eigen::MatrixXd & { return G[base + block]; };

    const Eigen::MatrixXd d_pre =
        (df.array() * sigmoid(lc.pre).array()).matrix();
    Eigen::MatrixXd d_f_in = d_pre;
    const Eigen::MatrixXd d_agg = layer_norm_backward(
        d_pre, W(kMsgGain), lc.msg_norm, dW(kMsgGain), dW(kMsgBias));

    Eigen::MatrixXd d_msg(num_edges, d);
    for (Eigen::Index e = 0; e < num_edges; ++e) {
      d_msg.row(e) = d_agg.row(graph.edges[static_cast<std::size_t>(e)].i);
    }
    const Eigen::MatrixXd d_gate = (d_msg.array() * lc.val_o.array()).matrix();
    const Eigen::MatrixXd d_val_o = (d_msg.array() * lc.gate.array()).matrix();

    Eigen::MatrixXd d_val_a =
        affine_backward(lc.val_a, W(kVal2W), d_val_o, dW(kVal2W), dW(kVal2B));
    Eigen::MatrixXd d_val_h =
        (d_val_a.array() * sigmoid(lc.val_h).array()).matrix();
    const Eigen::MatrixXd d_vcat =
        affine_backward(lc.vcat, W(kVal1W), d_val_h, dW(kVal1W), dW(kVal1B));

    const Eigen::MatrixXd d_alpha_n =
        (d_gate.array() * lc.gate.array() * (1.0 - lc.gate.array())).matrix();
    const Eigen::MatrixXd d_alpha = layer_norm_backward(
        d_alpha_n, W(kAttGain), lc.att_norm, dW(kAttGain), dW(kAttBias));
    const Eigen::MatrixXd d_q_e =
        (d_alpha.array() * lc.key_o.array() * scale).matrix();
    const Eigen::MatrixXd d_key_o =
        (d_alpha.array() * lc.q_e.array() * scale).matrix();
    Eigen::MatrixXd d_key_a =
        affine_backward(lc.key_a, W(kKey2W), d_key_o, dW(kKey2W), dW(kKey2B));
    Eigen::MatrixXd d_key_h =
        (d_key_a.array() * sigmoid(lc.key_h).array()).matrix();
    const Eigen::MatrixXd d_kcat =
        affine_backward(lc.kcat, W(kKey1W), d_key_h, dW(kKey1W), dW(kKey1B));

    Eigen::MatrixXd d_qn = Eigen::MatrixXd::Zero(n, d);
    Eigen::MatrixXd d_kn = Eigen::MatrixXd::Zero(n, d);
    Eigen::MatrixXd d_vn = Eigen::MatrixXd::Zero(n, d);
    for (Eigen::Index e = 0; e < num_edges; ++e) {
      const auto &edge = graph.edges[static_cast<std::size_t>(e)];
      d_qn.row(edge.i) += d_q_e.row(e);
      d_kn.row(edge.i) += d_kcat.block(e, 0, 1, d);
      d_kn.row(edge.j) += d_kcat.block(e, d, 1, d);
      d_vn.row(edge.i) += d_vcat.block(e, 0, 1, d);
      d_vn.row(edge.j) += d_vcat.block(e, d, 1, d);
    }
    const Eigen::MatrixXd d_ee = d_vcat.rightCols(de);
    d_edge_feat += affine_backward(fc.edge_feat, W(kEW), d_ee, dW(kEW), dW(kEB));
    d_f_in += affine_backward(lc.f_in, W(kQW), d_qn, dW(kQW), dW(kQB));
    d_f_in += affine_backward(lc.f_in, W(kKW), d_kn, dW(kKW), dW(kKB));
    d_f_in += affine_backward(lc.f_in, W(kVW), d_vn, dW(kVW), dW(kVB));
    df = d_f_in;
  }

  affine_backward(fc.node_in, P[kAtomW].value, df, G[kAtomW], G[kAtomB]);
  const Eigen::MatrixXd d_edge_h =
      (d_edge_feat.array() * sigmoid(fc.edge_h).array()).matrix();
  affine_backward(fc.edge_in, P[kEdgeW].value, d_edge_h, G[kEdgeW], G[kEdgeB]);
  return G;
}

} // namespace

Eigen::VectorXd forward(const PredictorModel &model, const CrystalGraph &graph) {
  ForwardCache fc;
  return run_forward(model, graph, fc);
}

double huber_loss(const Eigen::VectorXd &pred, const Eigen::VectorXd &label,
                  double delta) {
  if (pred.size() != label.size()) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("Huber loss on vectors of length {} and {}",
                            pred.size(), label.size()));
  }
  if (pred.size() == 0) {
    return 0.0;
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k < pred.size(); ++k) {
    const double r = std::abs(pred(k) - label(k));
    total += r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
  }
  return total / static_cast<double>(pred.size());
}

Eigen::VectorXd huber_gradient(const Eigen::VectorXd &pred,
                               const Eigen::VectorXd &label, double delta) {
  if (pred.size() != label.size()) {
    throw Error(ErrorCode::DimMismatch, "Huber gradient length mismatch");
  }
  Eigen::VectorXd g(pred.size());
  const double inv_n = pred.size() > 0 ? 1.0 / static_cast<double>(pred.size()) : 0.0;
  for (Eigen::Index k = 0; k < pred.size(); ++k) {
    const double r = pred(k) - label(k);
    g(k) = (std::abs(r) <= delta ? r : std::copysign(delta, r)) * inv_n;
  }
  return g;
}

Gradients backward_from_output(const PredictorModel &model,
                               const CrystalGraph &graph,
                               const Eigen::VectorXd &d_output) {
  ForwardCache fc;
  run_forward(model, graph, fc);
  if (d_output.size() != model.config().output_dim()) {
    throw Error(ErrorCode::DimMismatch, "output gradient has the wrong length");
  }
  return run_backward(model, graph, fc, d_output);
}

namespace {

void check_sample(const PredictorModel &model, const TrainingSample &s) {
  if (s.readout.cols() != model.config().output_dim() ||
      s.readout.rows() != s.target.size()) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("readout is {}x{} for {} targets and {} outputs",
                            s.readout.rows(), s.readout.cols(), s.target.size(),
                            model.config().output_dim()));
  }
}

} // namespace

LossAndGradient backward(const PredictorModel &model,
                         const TrainingSample &sample, double delta) {
  check_sample(model, sample);
  ForwardCache fc;
  const Eigen::VectorXd out = run_forward(model, sample.graph, fc);
  const Eigen::VectorXd y = sample.readout * out;
  LossAndGradient r;
  r.loss = huber_loss(y, sample.target, delta);
  const Eigen::VectorXd dy = huber_gradient(y, sample.target, delta);
  r.grads = run_backward(model, sample.graph, fc, sample.readout.transpose() * dy);
  return r;
}

double sample_loss(const PredictorModel &model, const TrainingSample &sample,
                   double delta) {
  check_sample(model, sample);
  return huber_loss(sample.readout * forward(model, sample.graph), sample.target,
                    delta);
}

} // namespace crystensor
