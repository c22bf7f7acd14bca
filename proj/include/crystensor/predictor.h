#pragma once

#include "crystensor/graph.h"
#include "crystensor/tensor.h"

#include <cstdint>
#include <string>
#include <vector>

namespace crystensor {

enum class OutputClamp { None, NonNegative };
enum class MaskMode { Off, Weighted, IndependentOnly };

std::string_view to_string(OutputClamp clamp);
std::string_view to_string(MaskMode mode);
OutputClamp output_clamp_from_string(std::string_view name);
MaskMode mask_mode_from_string(std::string_view name);

struct PredictorConfig {
  TensorKind kind = TensorKind::Dielectric;
  int node_in = 92;
  int hidden = 64;
  int rbf_dim = 512;
  int edge_dim = 128;
  int layers = 4;
  OutputClamp clamp = OutputClamp::None;
  MaskMode mask_mode = MaskMode::Off;
  std::uint64_t seed = 0;

  /// Desk-scale defaults: hidden 64, edge width 128 (256 for elastic), four
  /// transformer layers (two for elastic).
  static PredictorConfig for_kind(TensorKind kind);
  /// Head width: 6 (upper triangle of the dielectric matrix), 18 or 36.
  int output_dim() const;
  /// Edge projection input: RBF expansion plus the unit edge direction.
  int edge_in() const { return rbf_dim + 3; }
};

struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
};

using Gradients = std::vector<Eigen::MatrixXd>;

/// Simplified node-wise transformer backbone with mean pooling and an MLP
/// head. Parameters are stored as a flat list of named blocks in a fixed
/// declaration order (see parameter names for the layout).
class PredictorModel {
public:
  PredictorModel() = default;
  /// Deterministic initialization from config.seed.
  explicit PredictorModel(const PredictorConfig &config);
  /// Adopts existing parameter values; throws DimMismatch if any block
  /// disagrees with the configured shapes.
  PredictorModel(const PredictorConfig &config, std::vector<Parameter> params);

  const PredictorConfig &config() const { return config_; }
  const std::vector<Parameter> &parameters() const { return params_; }
  std::vector<Parameter> &parameters() { return params_; }
  std::size_t parameter_count() const;
  Gradients zero_gradients() const;

private:
  PredictorConfig config_;
  std::vector<Parameter> params_;
};

/// Names and shapes of every parameter block for a configuration.
std::vector<Parameter> parameter_layout(const PredictorConfig &config);

/// Head output (output_dim entries), clamped when configured. Throws
/// DimMismatch if the graph features do not match the model.
Eigen::VectorXd forward(const PredictorModel &model, const CrystalGraph &graph);

/// Huber loss averaged over entries.
double huber_loss(const Eigen::VectorXd &pred, const Eigen::VectorXd &label,
                  double delta = 1.0);
Eigen::VectorXd huber_gradient(const Eigen::VectorXd &pred,
                               const Eigen::VectorXd &label,
                               double delta = 1.0);

/// A graph together with the linear readout that maps head outputs to the
/// flattened (row-major) Voigt target in the frame where the loss is taken.
struct TrainingSample {
  CrystalGraph graph;
  Eigen::MatrixXd readout; // voigt_size x output_dim
  Eigen::VectorXd target;  // voigt_size
};

struct LossAndGradient {
  double loss = 0.0;
  Gradients grads;
};

/// Analytic reverse-mode gradient of huber(readout * forward(graph), target).
LossAndGradient backward(const PredictorModel &model,
                         const TrainingSample &sample, double delta = 1.0);

/// Gradient of an arbitrary scalar with respect to the parameters, given
/// dL/d(head output).
Gradients backward_from_output(const PredictorModel &model,
                               const CrystalGraph &graph,
                               const Eigen::VectorXd &d_output);

double sample_loss(const PredictorModel &model, const TrainingSample &sample,
                   double delta = 1.0);

} // namespace crystensor
