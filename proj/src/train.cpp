#include "crystensor/train.h"

#include "crystensor/error.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <thread>

namespace crystensor {

AdamW::AdamW(const PredictorModel &model, const TrainConfig &cfg)
    : cfg_(cfg), m_(model.zero_gradients()), v_(model.zero_gradients()) {}

void AdamW::step(PredictorModel &model, const Gradients &grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto &params = model.parameters();
  for (std::size_t b = 0; b < params.size(); ++b) {
    m_[b] = cfg_.beta1 * m_[b] + (1.0 - cfg_.beta1) * grads[b];
    v_[b] = cfg_.beta2 * v_[b] +
            (1.0 - cfg_.beta2) * grads[b].cwiseProduct(grads[b]);
    auto &w = params[b].value;
    w -= lr * cfg_.weight_decay * w;
    w.array() -= lr * (m_[b].array() / bc1) /
                 ((v_[b].array() / bc2).sqrt() + cfg_.adam_eps);
  }
}

double learning_rate(const TrainConfig &cfg, long step, long total_steps) {
  if (total_steps <= 0) {
    return cfg.lr0;
  }
  const double frac = 1.0 - static_cast<double>(step) /
                                static_cast<double>(total_steps);
  return cfg.lr0 * std::pow(std::max(frac, 0.0), cfg.lr_power);
}

int threads_from_env() {
  if (const char *v = std::getenv("CRYSTENSOR_THREADS")) {
    const int n = std::atoi(v);
    if (n > 0) {
      return n;
    }
  }
  return 1;
}

namespace {

void accumulate(Gradients &into, const Gradients &g) {
  for (std::size_t b = 0; b < into.size(); ++b) {
    into[b] += g[b];
  }
}

} // namespace

LossAndGradient batch_gradient(const PredictorModel &model,
                               const std::vector<TrainingSample> &samples,
                               const std::vector<std::size_t> &indices,
                               double delta, int threads) {
  LossAndGradient total{0.0, model.zero_gradients()};
  if (indices.empty()) {
    return total;
  }
  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(indices.size())));
  std::vector<LossAndGradient> partial(workers);
  auto run_chunk = [&](int w) {
    const std::size_t lo = indices.size() * w / workers;
    const std::size_t hi = indices.size() * (w + 1) / workers;
    LossAndGradient acc{0.0, model.zero_gradients()};
    for (std::size_t k = lo; k < hi; ++k) {
      LossAndGradient r = backward(model, samples[indices[k]], delta);
      acc.loss += r.loss;
      accumulate(acc.grads, r.grads);
    }
    partial[w] = std::move(acc);
  };
  if (workers == 1) {
    run_chunk(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back(run_chunk, w);
    }
  }
  for (const auto &p : partial) {
    total.loss += p.loss;
    accumulate(total.grads, p.grads);
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  total.loss *= inv;
  for (auto &g : total.grads) {
    g *= inv;
  }
  return total;
}

double mean_loss(const PredictorModel &model,
                 const std::vector<TrainingSample> &samples, double delta) {
  if (samples.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (const auto &s : samples) {
    total += sample_loss(model, s, delta);
  }
  return total / static_cast<double>(samples.size());
}

TrainHistory train(PredictorModel &model,
                   const std::vector<TrainingSample> &train_set,
                   const std::vector<TrainingSample> &val_set,
                   const TrainConfig &cfg) {
  if (train_set.empty()) {
    throw Error(ErrorCode::EmptyDataset, "training set is empty");
  }
  if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.lr0 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "epochs, batch size and learning rate must be positive");
  }
  const std::size_t n = train_set.size();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const long batches_per_epoch = static_cast<long>((n + batch - 1) / batch);
  const long total_steps = batches_per_epoch * cfg.epochs;

  AdamW opt(model, cfg);
  std::mt19937_64 shuffle_rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::vector<std::size_t> idx(
          order.begin() + static_cast<std::ptrdiff_t>(start),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch)));
      const LossAndGradient g =
          batch_gradient(model, train_set, idx, cfg.huber_delta, cfg.threads);
      epoch_loss += g.loss;
      opt.step(model, g.grads, learning_rate(cfg, opt.steps(), total_steps));
    }
    history.train_loss.push_back(epoch_loss /
                                 static_cast<double>(batches_per_epoch));
    history.val_loss.push_back(mean_loss(model, val_set, cfg.huber_delta));
  }
  return history;
}

} // namespace crystensor
