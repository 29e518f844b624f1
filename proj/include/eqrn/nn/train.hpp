#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "eqrn/error.hpp"
#include "eqrn/nn/adam.hpp"
#include "eqrn/types.hpp"

namespace eqrn::nn {

struct TrainConfig {
  int max_epochs = 100;
  Index batch_size = 256;
  double learning_rate = 1e-3;
  int patience = 10;
  double lr_decay_factor = 0.4;
  int n_restarts = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_losses;
  std::vector<double> valid_losses;
  int best_epoch = -1;
  double best_valid_loss = std::numeric_limits<double>::quiet_NaN();
  int restart = 0;
  int nan_restarts = 0;
  bool stopped_early = false;
  // Selection score of every restart (NaN when the restart diverged).
  std::vector<double> restart_scores;
};

// Everything the loop needs to know about a network and its data.
// `batch_loss_grad` returns the mean batch objective (including penalties)
// and writes the gradient into `grad`, whose blocks() must line up with
// Net::parameters().
template <class Net>
struct TrainTask {
  Index n_train = 0;
  std::function<Net(Rng&)> initialize;
  std::function<double(const Net&, std::span<const Index>, typename Net::Gradient&, Rng&)> batch_loss_grad;
  std::function<double(const Net&)> validation_loss;  // empty: no validation set
};

template <class Net>
struct TrainResult {
  Net model;
  TrainReport report;
};

// Mini-batch order for one epoch; a pure function of (seed, restart, epoch).
std::vector<Index> epoch_permutation(Index n, std::uint64_t seed, int restart, int epoch);

// Mini-batch Adam with validation tracking, early stopping, learning-rate
// decay on plateaus and random restarts. Returns the weights of the best
// validation epoch of the best restart.
template <class Net>
TrainResult<Net> train_loop(const TrainTask<Net>& task, const TrainConfig& config) {
  config.validate();
  if (task.n_train <= 0) throw TrainingError("train_loop: empty training set");
  const bool has_validation = static_cast<bool>(task.validation_loss);
  const int decay_after = std::max(1, config.patience / 2);

  std::optional<TrainResult<Net>> best;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<double> scores;
  int nan_restarts = 0;

  for (int restart = 0; restart < config.n_restarts; ++restart) {
    Rng init_rng(mix_seed(config.seed, static_cast<std::uint64_t>(restart), 0x1417));
    Rng noise_rng(mix_seed(config.seed, static_cast<std::uint64_t>(restart), 0xd209));
    Net net = task.initialize(init_rng);
    Net best_net = net;
    Adam adam(net.parameters());
    typename Net::Gradient grad;
    TrainReport report;
    report.restart = restart;
    double lr = config.learning_rate;
    double best_valid = std::numeric_limits<double>::infinity();
    int since_improvement = 0;
    int since_decay = 0;
    bool diverged = false;

    for (int epoch = 0; epoch < config.max_epochs && !diverged; ++epoch) {
      const std::vector<Index> order = epoch_permutation(task.n_train, config.seed, restart, epoch);
      double loss_sum = 0.0;
      for (Index start = 0; start < task.n_train; start += config.batch_size) {
        const Index len = std::min(config.batch_size, task.n_train - start);
        const std::span<const Index> batch(order.data() + start, static_cast<std::size_t>(len));
        const double loss = task.batch_loss_grad(net, batch, grad, noise_rng);
        if (!std::isfinite(loss)) {
          diverged = true;
          break;
        }
        adam.step(net.parameters(), grad.blocks(), lr);
        loss_sum += loss * static_cast<double>(len);
      }
      if (diverged) break;
      report.train_losses.push_back(loss_sum / static_cast<double>(task.n_train));

      if (!has_validation) {
        best_net = net;
        report.best_epoch = epoch;
        continue;
      }
      const double valid = task.validation_loss(net);
      if (!std::isfinite(valid)) {
        diverged = true;
        break;
      }
      report.valid_losses.push_back(valid);
      if (valid < best_valid) {
        best_valid = valid;
        best_net = net;
        report.best_epoch = epoch;
        since_improvement = 0;
        since_decay = 0;
      } else {
        ++since_improvement;
        ++since_decay;
        if (since_improvement >= config.patience) {
          report.stopped_early = true;
          break;
        }
        if (since_decay >= decay_after) {
          lr *= config.lr_decay_factor;
          since_decay = 0;
        }
      }
    }

    if (diverged) {
      ++nan_restarts;
      scores.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    report.best_valid_loss = has_validation ? best_valid : std::numeric_limits<double>::quiet_NaN();
    const double score = has_validation ? best_valid : report.train_losses.back();
    scores.push_back(score);
    if (!best || score < best_score) {
      best_score = score;
      best = TrainResult<Net>{std::move(best_net), std::move(report)};
    }
  }

  if (!best) {
    throw TrainingError("train_loop: every restart produced a non-finite loss (" + std::to_string(nan_restarts) +
                        " restarts)");
  }
  best->report.nan_restarts = nan_restarts;
  best->report.restart_scores = std::move(scores);
  return std::move(*best);
}

}  // namespace eqrn::nn
