#pragma once

// Extreme quantile regression networks: a network maps covariates (and the
// out-of-sample intermediate quantile) to conditional GPD parameters
// (nu, xi) of the exceedances over the intermediate quantile; extreme
// quantiles follow by extrapolation. Includes the i.i.d. (feed-forward) and
// sequential (LSTM) pipelines, constant-parameter baselines and grid search.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eqrn/evt.hpp"
#include "eqrn/qreg.hpp"

namespace eqrn {

using qreg::ModelKind;
using qreg::NetworkHyper;

inline constexpr double kDefaultTau0 = 0.8;
inline constexpr Index kDefaultHorizon = 10;
inline constexpr double kDefaultWarningRatio = 100.0;

struct EqrnOptions {
  nn::TrainConfig train;
  NetworkHyper hyper;
  // Unset: 1/4 random split for i.i.d. data, last 2/7 for sequential data.
  std::optional<double> valid_fraction;
};

// Conditional tail at one point.
struct GpdTailFit {
  double intermediate_quantile = 0.0;
  double nu = 1.0;
  double xi = 0.0;
  double sigma = 1.0;

  evt::TailSpec spec(double tau0) const { return {tau0, intermediate_quantile, {sigma, xi}}; }
};

struct EqrnModel {
  ModelKind kind = ModelKind::independent;
  double tau0 = kDefaultTau0;
  Index horizon = 0;  // sequential only
  qreg::Network network;
  nn::FeatureScaler scaler;
  double response_scale = 1.0;  // the network models exceedances divided by this
  std::optional<qreg::QuantileModel> intermediate;
  std::string training_end;  // last training timestamp, empty when unknown

  // i.i.d.: tails at covariates x (p x n) given intermediate quantiles q.
  std::vector<GpdTailFit> tails(const Matrix& x, const Vector& q) const;
  // Sequential: q holds the intermediate quantile at every time of `series`
  // (NaN where unavailable); one tail per target time.
  std::vector<GpdTailFit> tails(const Series& series, const Vector& q, std::span<const Index> targets) const;
};

struct Exceedances {
  std::vector<Index> index;
  std::vector<double> z;
};

// I = {i : y_i > q_i}, z_i = y_i - q_i; entries with NaN q are skipped.
// Throws DataError when I is empty.
Exceedances extract_exceedances(const Vector& y, const Vector& q);

// (x, q) as a (p + 1)-vector.
Vector augment_features_iid(const Vector& x, double q);
Matrix augment_features_iid(const Matrix& x, const Vector& q);
// Window of (x_j, y_j) steps extended to (x_j, y_j, q_j).
rnn::SequenceWindow augment_features_seq(const rnn::SequenceWindow& window, std::span<const double> q);
// Step features (x_t, y_t, q_t) over a whole series, (p + 2) x T.
Matrix augment_step_features(const Series& series, const Vector& q);

// Targets t whose window t-s..t-1 and own intermediate quantile are available.
std::vector<Index> sequential_targets(const Vector& q, Index horizon);

struct EqrnFit {
  EqrnModel model;
  nn::TrainReport report;
  double valid_deviance = 0.0;     // mean deviance on validation exceedances (response units)
  std::vector<Index> train_index;  // observation / time index of training exceedances
  std::vector<Index> valid_index;
};

EqrnFit eqrn_fit_iid(const Dataset& data, const Vector& q_oos, double tau0, const EqrnOptions& options);
EqrnFit eqrn_fit_seq(const Series& series, const Vector& q_oos, double tau0, Index horizon,
                     const EqrnOptions& options);

// Mean deviance of exceedances z at fitted tails (response units).
double mean_deviance(std::span<const double> z, std::span<const GpdTailFit> tails);

struct ForecastRecord {
  Index time_index = 0;
  std::vector<std::pair<double, double>> quantiles;  // (level, value)
  double nu = 0.0;
  double xi = 0.0;
  double sigma = 0.0;
  double intermediate_quantile = 0.0;
  std::optional<double> exceed_prob;
  std::optional<double> prob_ratio;
  bool warning = false;
  bool in_training = false;
};

struct PredictOptions {
  std::vector<double> levels;
  std::optional<double> threshold;
  std::optional<double> baseline_prob;
  double warning_ratio = kDefaultWarningRatio;
};

ForecastRecord eqrn_predict(const GpdTailFit& tail, double tau0, const PredictOptions& options);
// Uses the stored intermediate model for the thresholds.
std::vector<ForecastRecord> eqrn_predict(const EqrnModel& model, const Matrix& x, const PredictOptions& options);
std::vector<ForecastRecord> eqrn_predict(const EqrnModel& model, const Series& series,
                                         const PredictOptions& options);

// Constant GPD parameters over a threshold. Semi-conditional: the threshold is
// a covariate-dependent intermediate quantile. Unconditional: the empirical
// tau0-quantile of the responses (stored in `threshold`).
struct StaticTailModel {
  double tau0 = kDefaultTau0;
  evt::GpdParams gpd;
  std::optional<double> threshold;

  GpdTailFit tail(double intermediate_quantile) const;
  GpdTailFit tail() const;
};

StaticTailModel semi_conditional_fit(const Vector& y, const Vector& q, double tau0);
StaticTailModel unconditional_fit(const Vector& y, double tau0);

struct ProbRatio {
  double ratio = 0.0;
  bool warning = false;
};

// ratio = p / baseline; warning when ratio >= warn_threshold.
ProbRatio prob_ratio(double exceed_prob, double baseline_prob, double warn_threshold = kDefaultWarningRatio);

struct GridCell {
  NetworkHyper hyper;
  double valid_deviance = 0.0;
  bool ok = false;
  std::string error;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::size_t best = 0;
  std::optional<EqrnFit> best_fit;
};

// Cartesian product of the hyperparameter options.
std::vector<NetworkHyper> make_grid(const std::vector<std::vector<Index>>& architectures,
                                    const std::vector<double>& l2_values, const std::vector<bool>& constant_shape,
                                    nn::Activation activation = nn::Activation::tanh);

// Fits every cell (concurrently when cores are available) and keeps the one
// with the lowest validation deviance. Failed cells are reported, not thrown.
GridResult grid_search_iid(const Dataset& data, const Vector& q_oos, double tau0, const EqrnOptions& base,
                           const std::vector<NetworkHyper>& grid);
GridResult grid_search_seq(const Series& series, const Vector& q_oos, double tau0, Index horizon,
                           const EqrnOptions& base, const std::vector<NetworkHyper>& grid);

}  // namespace eqrn
