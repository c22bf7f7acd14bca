#pragma once

#include "crystensor/predictor.h"

#include <cstdint>
#include <vector>

namespace crystensor {

struct TrainConfig {
  double lr0 = 1e-3;
  int epochs = 50; // 200 at paper scale
  int batch_size = 64;
  double weight_decay = 1e-5;
  double lr_power = 1.0; // lr(t) = lr0 (1 - t/T)^p
  double huber_delta = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct TrainHistory {
  std::vector<double> train_loss; // mean batch loss per epoch
  std::vector<double> val_loss;   // mean sample loss after each epoch
};

/// Decoupled-weight-decay Adam with bias correction.
class AdamW {
public:
  AdamW(const PredictorModel &model, const TrainConfig &cfg);
  void step(PredictorModel &model, const Gradients &grads, double lr);
  long steps() const { return t_; }

private:
  TrainConfig cfg_;
  Gradients m_;
  Gradients v_;
  long t_ = 0;
};

double learning_rate(const TrainConfig &cfg, long step, long total_steps);

/// Thread count from CRYSTENSOR_THREADS, default 1.
int threads_from_env();

/// Mean gradient and loss over a batch. Per-thread partial sums are reduced
/// in a fixed order so results only depend on the thread count.
LossAndGradient batch_gradient(const PredictorModel &model,
                               const std::vector<TrainingSample> &samples,
                               const std::vector<std::size_t> &indices,
                               double delta, int threads);

double mean_loss(const PredictorModel &model,
                 const std::vector<TrainingSample> &samples, double delta);

/// Shuffles with a generator seeded from cfg.seed each epoch, so identical
/// inputs give bitwise-identical parameters. Throws EmptyDataset.
TrainHistory train(PredictorModel &model,
                   const std::vector<TrainingSample> &train_set,
                   const std::vector<TrainingSample> &val_set,
                   const TrainConfig &cfg);

} // namespace crystensor
