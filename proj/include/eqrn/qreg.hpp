#pragma once

// Intermediate quantile regression at level tau0: feed-forward and recurrent
// quantile regression networks trained on the pinball loss, the empirical
// quantile, and out-of-sample (cross-fitted) predictions.

#include <span>
#include <variant>
#include <vector>

#include "eqrn/nn/mlp.hpp"
#include "eqrn/nn/scaler.hpp"
#include "eqrn/nn/train.hpp"
#include "eqrn/rnn/lstm.hpp"
#include "eqrn/types.hpp"

namespace eqrn::qreg {

// rho_tau(y - q) = (y - q)(tau - 1{y - q < 0})
double pinball_loss(double y, double q, double tau);

// ceil(n tau)-th order statistic (clamped to 1..n).
double empirical_quantile(std::span<const double> sample, double tau);

enum class ModelKind { independent, sequential };

// Network architecture and regularisation. For recurrent models `hidden`
// lists the LSTM layer widths; for feed-forward models the dense widths.
struct NetworkHyper {
  std::vector<Index> hidden{32};
  nn::Activation activation = nn::Activation::tanh;
  double l2 = 0.0;
  double dropout = 0.0;
  bool constant_shape = true;  // only read by GPD heads
};

struct FitOptions {
  nn::TrainConfig train;
  NetworkHyper hyper;
  double valid_fraction = 0.25;
};

using Network = std::variant<nn::Mlp, rnn::LstmStack>;

struct QuantileModel {
  ModelKind kind = ModelKind::independent;
  double tau0 = 0.8;
  Index horizon = 0;  // sequential only
  Network network;
  nn::FeatureScaler scaler;  // covariates (i.i.d.) or step features (x_t, y_t)
  double response_center = 0.0;
  double response_scale = 1.0;

  // i.i.d. predictions at covariates x (p x n).
  Vector predict(const Matrix& x) const;
  // One-step-ahead predictions for every t with a full window (t >= horizon);
  // other entries are NaN.
  Vector predict(const Series& series) const;
  Vector predict(const Series& series, std::span<const Index> targets) const;
};

struct QuantileFit {
  QuantileModel model;
  nn::TrainReport report;
};

QuantileFit qrn_fit(const Dataset& data, double tau0, const FitOptions& options);
QuantileFit qrn_fit(const Dataset& data, std::span<const Index> rows, double tau0, const FitOptions& options);

QuantileFit rqrn_fit(const Series& series, double tau0, Index horizon, const FitOptions& options);
// Trains on the windows ending before each t in `targets` (sorted, >= horizon).
QuantileFit rqrn_fit(const Series& series, std::span<const Index> targets, double tau0, Index horizon,
                     const FitOptions& options);

struct CrossFit {
  Vector predictions;                           // NaN where no prediction is possible
  std::vector<int> fold_of;                     // fold of every point (-1: not predicted)
  std::vector<std::vector<int>> trained_on;     // folds whose data trained fold k's model
  std::vector<nn::TrainReport> reports;
};

// i.i.d.: random balanced folds; every point is predicted by the model fitted
// on the other folds.
CrossFit cross_fit_predict(const Dataset& data, double tau0, int k_folds, const FitOptions& options);
// Sequential: contiguous blocks of targets t >= horizon; block j > 0 is
// predicted by a model trained on blocks 0..j-1, block 0 by one trained on the
// later blocks.
CrossFit cross_fit_predict(const Series& series, double tau0, Index horizon, int k_folds, const FitOptions& options);

// Chronological / random splits of an index list into (train, valid).
std::pair<std::vector<Index>, std::vector<Index>> sequential_split(std::span<const Index> items, double valid_fraction);
std::pair<std::vector<Index>, std::vector<Index>> random_split(std::span<const Index> items, double valid_fraction,
                                                               std::uint64_t seed);

// Step features (x_t, y_t) stacked as (p + 1) x T.
Matrix series_step_features(const Series& series);

}  // namespace eqrn::qreg
