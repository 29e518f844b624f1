#include "eqrn/qreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "eqrn/error.hpp"

namespace eqrn::qreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr Index kPredictChunk = 4096;

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("quantile level must lie in (0,1), got " + std::to_string(tau));
}

void check_fraction(double f) {
  if (!(f >= 0.0 && f < 1.0)) throw DomainError("validation fraction must lie in [0,1)");
}

// Mean pinball loss and its gradient w.r.t. the (standardised) predictions.
double pinball_batch(const Matrix& pred, const Vector& y, double tau, Matrix& upstream) {
  const Index n = pred.cols();
  upstream.resize(1, n);
  double total = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double u = y[j] - pred(0, j);
    const double w = u < 0.0 ? tau - 1.0 : tau;
    total += u * w;
    upstream(0, j) = -w / static_cast<double>(n);
  }
  return total / static_cast<double>(n);
}

double mean_pinball(const Vector& pred, const Vector& y, double tau) {
  double total = 0.0;
  for (Index j = 0; j < y.size(); ++j) total += pinball_loss(y[j], pred[j], tau);
  return total / static_cast<double>(y.size());
}

Vector gather(const Vector& v, std::span<const Index> idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = v[idx[k]];
  return out;
}

Matrix gather_cols(const Matrix& m, std::span<const Index> idx) {
  Matrix out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = m.col(idx[k]);
  return out;
}

std::pair<double, double> center_scale(const Vector& y) {
  const double mean = y.mean();
  const double sd = std::sqrt((y.array() - mean).square().mean());
  return {mean, sd > 1e-12 ? sd : 1.0};
}

}  // namespace

double pinball_loss(double y, double q, double tau) {
  check_tau(tau);
  const double u = y - q;
  return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

double empirical_quantile(std::span<const double> sample, double tau) {
  if (sample.empty()) throw DomainError("empirical_quantile: empty sample");
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("empirical_quantile: tau must lie in [0,1]");
  const auto n = static_cast<double>(sample.size());
  auto k = static_cast<std::size_t>(std::ceil(n * tau - 1e-9));
  k = std::clamp<std::size_t>(k, 1, sample.size());
  std::vector<double> sorted(sample.begin(), sample.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

std::pair<std::vector<Index>, std::vector<Index>> sequential_split(std::span<const Index> items,
                                                                   double valid_fraction) {
  check_fraction(valid_fraction);
  const auto n = items.size();
  const auto n_valid = static_cast<std::size_t>(std::floor(static_cast<double>(n) * valid_fraction));
  std::vector<Index> train(items.begin(), items.end() - static_cast<std::ptrdiff_t>(n_valid));
  std::vector<Index> valid(items.end() - static_cast<std::ptrdiff_t>(n_valid), items.end());
  return {std::move(train), std::move(valid)};
}

std::pair<std::vector<Index>, std::vector<Index>> random_split(std::span<const Index> items, double valid_fraction,
                                                               std::uint64_t seed) {
  check_fraction(valid_fraction);
  std::vector<Index> shuffled(items.begin(), items.end());
  Rng rng(mix_seed(seed, 0x5b11));
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto n_valid = static_cast<std::size_t>(std::floor(static_cast<double>(shuffled.size()) * valid_fraction));
  std::vector<Index> valid(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_valid));
  std::vector<Index> train(shuffled.begin() + static_cast<std::ptrdiff_t>(n_valid), shuffled.end());
  std::sort(valid.begin(), valid.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(valid)};
}

Matrix series_step_features(const Series& series) {
  if (series.x.cols() != series.y.size()) throw DataError("series: covariate and response lengths differ");
  Matrix f(series.dim() + 1, series.length());
  f.topRows(series.dim()) = series.x;
  f.bottomRows(1) = series.y.transpose();
  return f;
}

Vector QuantileModel::predict(const Matrix& x) const {
  const auto* mlp = std::get_if<nn::Mlp>(&network);
  if (!mlp) throw DomainError("QuantileModel: recurrent model needs a series");
  const Matrix out = mlp->forward(scaler.apply(x));
  return (response_center + response_scale * out.row(0).array()).matrix().transpose();
}

Vector QuantileModel::predict(const Series& series, std::span<const Index> targets) const {
  const auto* lstm = std::get_if<rnn::LstmStack>(&network);
  if (!lstm) throw DomainError("QuantileModel: feed-forward model needs covariates, not a series");
  const Matrix features = scaler.apply(series_step_features(series));
  Vector out(static_cast<Index>(targets.size()));
  for (std::size_t start = 0; start < targets.size(); start += kPredictChunk) {
    const std::size_t len = std::min<std::size_t>(kPredictChunk, targets.size() - start);
    const auto chunk = targets.subspan(start, len);
    const Matrix pred = lstm->forward(rnn::gather_windows(features, chunk, horizon));
    out.segment(static_cast<Index>(start), static_cast<Index>(len)) =
        (response_center + response_scale * pred.row(0).array()).matrix().transpose();
  }
  return out;
}

Vector QuantileModel::predict(const Series& series) const {
  Vector out = Vector::Constant(series.length(), kNaN);
  if (series.length() <= horizon) return out;
  std::vector<Index> targets(static_cast<std::size_t>(series.length() - horizon));
  std::iota(targets.begin(), targets.end(), horizon);
  out.tail(series.length() - horizon) = predict(series, targets);
  return out;
}

QuantileFit qrn_fit(const Dataset& data, std::span<const Index> rows, double tau0, const FitOptions& options) {
  check_tau(tau0);
  if (rows.empty()) throw DataError("qrn_fit: no training data");
  if (data.x.cols() != data.y.size()) throw DataError("qrn_fit: covariate and response counts differ");
  auto [train_rows, valid_rows] = random_split(rows, options.valid_fraction, options.train.seed);
  if (train_rows.empty()) throw DataError("qrn_fit: training split is empty");

  QuantileModel model;
  model.kind = ModelKind::independent;
  model.tau0 = tau0;
  model.scaler = nn::FeatureScaler::fit(gather_cols(data.x, train_rows));
  std::tie(model.response_center, model.response_scale) = center_scale(gather(data.y, train_rows));

  const Matrix features = model.scaler.apply(data.x);
  const Vector ys = (data.y.array() - model.response_center) / model.response_scale;
  const Matrix train_x = gather_cols(features, train_rows);
  const Vector train_y = gather(ys, train_rows);
  const Matrix valid_x = gather_cols(features, valid_rows);
  const Vector valid_y = gather(ys, valid_rows);
  const double scale = model.response_scale;

  nn::MlpSpec spec;
  spec.input_dim = data.dim();
  spec.hidden = options.hyper.hidden;
  spec.hidden_activation = options.hyper.activation;
  spec.output_activations = {nn::Activation::identity};
  spec.l2 = options.hyper.l2;
  spec.dropout = options.hyper.dropout;

  nn::TrainTask<nn::Mlp> task;
  task.n_train = static_cast<Index>(train_rows.size());
  task.initialize = [&](Rng& rng) { return nn::Mlp::initialized(spec, rng); };
  task.batch_loss_grad = [&](const nn::Mlp& net, std::span<const Index> batch, nn::MlpGradient& grad, Rng& rng) {
    const Matrix xb = gather_cols(train_x, batch);
    const Vector yb = gather(train_y, batch);
    nn::Mlp::Cache cache;
    const Matrix pred = net.forward(xb, cache, &rng);
    Matrix upstream;
    const double loss = pinball_batch(pred, yb, tau0, upstream);
    grad = net.backward(cache, upstream);
    return loss + net.l2_penalty();
  };
  if (!valid_rows.empty()) {
    task.validation_loss = [&](const nn::Mlp& net) {
      return scale * mean_pinball(net.forward(valid_x).row(0).transpose(), valid_y, tau0);
    };
  }
  auto result = nn::train_loop(task, options.train);
  model.network = std::move(result.model);
  return {std::move(model), std::move(result.report)};
}

QuantileFit qrn_fit(const Dataset& data, double tau0, const FitOptions& options) {
  std::vector<Index> rows(static_cast<std::size_t>(data.size()));
  std::iota(rows.begin(), rows.end(), Index{0});
  return qrn_fit(data, rows, tau0, options);
}

QuantileFit rqrn_fit(const Series& series, std::span<const Index> targets, double tau0, Index horizon,
                     const FitOptions& options) {
  check_tau(tau0);
  if (horizon < 1) throw DomainError("rqrn_fit: horizon must be >= 1");
  if (targets.empty()) throw DataError("rqrn_fit: no training windows");
  if (!std::is_sorted(targets.begin(), targets.end()) || targets.front() < horizon ||
      targets.back() >= series.length()) {
    throw DomainError("rqrn_fit: targets must be sorted and have a full window of history");
  }
  auto [train_t, valid_t] = sequential_split(targets, options.valid_fraction);
  if (train_t.empty()) throw DataError("rqrn_fit: training split is empty");

  QuantileModel model;
  model.kind = ModelKind::sequential;
  model.tau0 = tau0;
  model.horizon = horizon;
  const Matrix raw = series_step_features(series);
  const Index first = train_t.front() - horizon;
  const Index last = train_t.back();  // exclusive upper column of the training windows
  model.scaler = nn::FeatureScaler::fit(raw.middleCols(first, last - first));
  std::tie(model.response_center, model.response_scale) = center_scale(gather(series.y, train_t));

  const Matrix features = model.scaler.apply(raw);
  const Vector ys = (series.y.array() - model.response_center) / model.response_scale;
  const Vector train_y = gather(ys, train_t);
  const double scale = model.response_scale;
  std::vector<Matrix> valid_steps;
  Vector valid_y;
  if (!valid_t.empty()) {
    valid_steps = rnn::gather_windows(features, valid_t, horizon);
    valid_y = gather(ys, valid_t);
  }

  rnn::LstmSpec spec;
  spec.input_dim = features.rows();
  spec.hidden = options.hyper.hidden;
  spec.output_activations = {nn::Activation::identity};
  spec.l2 = options.hyper.l2;

  nn::TrainTask<rnn::LstmStack> task;
  task.n_train = static_cast<Index>(train_t.size());
  task.initialize = [&](Rng& rng) { return rnn::LstmStack::initialized(spec, rng); };
  task.batch_loss_grad = [&](const rnn::LstmStack& net, std::span<const Index> batch, rnn::LstmGradient& grad,
                             Rng&) {
    std::vector<Index> times(batch.size());
    Vector yb(static_cast<Index>(batch.size()));
    for (std::size_t k = 0; k < batch.size(); ++k) {
      times[k] = train_t[static_cast<std::size_t>(batch[k])];
      yb[static_cast<Index>(k)] = train_y[batch[k]];
    }
    rnn::LstmStack::Cache cache;
    const Matrix pred = net.forward(rnn::gather_windows(features, times, horizon), cache);
    Matrix upstream;
    const double loss = pinball_batch(pred, yb, tau0, upstream);
    grad = net.backward(cache, upstream);
    return loss + net.l2_penalty();
  };
  if (!valid_t.empty()) {
    task.validation_loss = [&](const rnn::LstmStack& net) {
      return scale * mean_pinball(net.forward(valid_steps).row(0).transpose(), valid_y, tau0);
    };
  }
  auto result = nn::train_loop(task, options.train);
  model.network = std::move(result.model);
  return {std::move(model), std::move(result.report)};
}

QuantileFit rqrn_fit(const Series& series, double tau0, Index horizon, const FitOptions& options) {
  if (series.length() <= horizon) throw DataError("rqrn_fit: series shorter than the horizon");
  std::vector<Index> targets(static_cast<std::size_t>(series.length() - horizon));
  std::iota(targets.begin(), targets.end(), horizon);
  return rqrn_fit(series, targets, tau0, horizon, options);
}

CrossFit cross_fit_predict(const Dataset& data, double tau0, int k_folds, const FitOptions& options) {
  if (k_folds < 2) throw DomainError("cross_fit_predict: need at least 2 folds");
  const Index n = data.size();
  if (n < 2 * k_folds) throw DataError("cross_fit_predict: fold too small to train");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(mix_seed(options.train.seed, 0xf01d));
  std::shuffle(order.begin(), order.end(), rng);

  CrossFit out;
  out.predictions = Vector::Constant(n, kNaN);
  out.fold_of.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < order.size(); ++k) out.fold_of[static_cast<std::size_t>(order[k])] = static_cast<int>(k % static_cast<std::size_t>(k_folds));

  for (int fold = 0; fold < k_folds; ++fold) {
    std::vector<Index> train_rows, test_rows;
    for (Index i = 0; i < n; ++i) {
      (out.fold_of[static_cast<std::size_t>(i)] == fold ? test_rows : train_rows).push_back(i);
    }
    FitOptions fold_options = options;
    fold_options.train.seed = mix_seed(options.train.seed, 0xc0f, static_cast<std::uint64_t>(fold));
    QuantileFit fit = qrn_fit(data, train_rows, tau0, fold_options);
    const Vector pred = fit.model.predict(gather_cols(data.x, test_rows));
    for (std::size_t k = 0; k < test_rows.size(); ++k) out.predictions[test_rows[k]] = pred[static_cast<Index>(k)];
    std::vector<int> used;
    for (int other = 0; other < k_folds; ++other)
      if (other != fold) used.push_back(other);
    out.trained_on.push_back(std::move(used));
    out.reports.push_back(std::move(fit.report));
  }
  return out;
}

CrossFit cross_fit_predict(const Series& series, double tau0, Index horizon, int k_folds, const FitOptions& options) {
  if (k_folds < 2) throw DomainError("cross_fit_predict: need at least 2 folds");
  const Index n_targets = series.length() - horizon;
  if (n_targets < 10 * k_folds) throw DataError("cross_fit_predict: fold too small to train");

  CrossFit out;
  out.predictions = Vector::Constant(series.length(), kNaN);
  out.fold_of.assign(static_cast<std::size_t>(series.length()), -1);
  std::vector<std::vector<Index>> blocks(static_cast<std::size_t>(k_folds));
  for (Index j = 0; j < n_targets; ++j) {
    const auto fold = static_cast<std::size_t>(j * k_folds / n_targets);
    blocks[fold].push_back(horizon + j);
    out.fold_of[static_cast<std::size_t>(horizon + j)] = static_cast<int>(fold);
  }

  for (int fold = 0; fold < k_folds; ++fold) {
    std::vector<int> used;
    if (fold == 0) {
      for (int other = 1; other < k_folds; ++other) used.push_back(other);
    } else {
      for (int other = 0; other < fold; ++other) used.push_back(other);
    }
    std::vector<Index> train_targets;
    for (int b : used) {
      const auto& block = blocks[static_cast<std::size_t>(b)];
      train_targets.insert(train_targets.end(), block.begin(), block.end());
    }
    FitOptions fold_options = options;
    fold_options.train.seed = mix_seed(options.train.seed, 0xc0f, static_cast<std::uint64_t>(fold));
    QuantileFit fit = rqrn_fit(series, train_targets, tau0, horizon, fold_options);
    const auto& test_targets = blocks[static_cast<std::size_t>(fold)];
    const Vector pred = fit.model.predict(series, test_targets);
    for (std::size_t k = 0; k < test_targets.size(); ++k) out.predictions[test_targets[k]] = pred[static_cast<Index>(k)];
    out.trained_on.push_back(std::move(used));
    out.reports.push_back(std::move(fit.report));
  }
  return out;
}

}  // namespace eqrn::qreg
