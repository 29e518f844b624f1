#include "eqrn/eqrn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "eqrn/error.hpp"

namespace eqrn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr Index kPredictChunk = 4096;
// Below this value of 1 + xi (xi + 1) z / nu the log term is continued linearly.
constexpr double kSupportFloor = 1e-3;

void check_tau0(double tau0) {
  if (!(tau0 > 0.0 && tau0 < 1.0)) throw DomainError("tau0 must lie in (0,1), got " + std::to_string(tau0));
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

struct LossTerm {
  double value = 0.0;
  double d_nu = 0.0;
  double d_xi = 0.0;
};

// Orthogonal GPD deviance, extended past the upper endpoint of a negative
// shape fit so that a single badly placed exceedance gives a large finite loss.
LossTerm training_deviance(double z, double nu, double xi) {
  const double a = (xi + 1.0) * z / nu;
  const double w = 1.0 + xi * a;
  if (w >= kSupportFloor) {
    const auto g = evt::ogpd_deviance_grad(z, nu, xi);
    return {evt::ogpd_deviance(z, nu, xi), g.d_nu, g.d_xi};
  }
  const double log_w = std::log(kSupportFloor) + (w - kSupportFloor) / kSupportFloor;
  const double coef = 1.0 + 1.0 / xi;
  const double dw_dnu = -xi * a / nu;
  const double dw_dxi = (2.0 * xi + 1.0) * z / nu;
  LossTerm t;
  t.value = coef * log_w + std::log(nu) - std::log1p(xi);
  t.d_nu = coef * dw_dnu / kSupportFloor + 1.0 / nu;
  t.d_xi = -log_w / (xi * xi) + coef * dw_dxi / kSupportFloor - 1.0 / (1.0 + xi);
  return t;
}

// Mean deviance of a batch of network outputs (2 x B) and its gradient.
double deviance_batch(const Matrix& out, const Vector& z, Matrix& upstream) {
  const Index n = out.cols();
  upstream.resize(2, n);
  double total = 0.0;
  for (Index j = 0; j < n; ++j) {
    const LossTerm t = training_deviance(z[j], out(0, j), out(1, j));
    total += t.value;
    upstream(0, j) = t.d_nu / static_cast<double>(n);
    upstream(1, j) = t.d_xi / static_cast<double>(n);
  }
  return total / static_cast<double>(n);
}

double mean_training_deviance(const Matrix& out, const Vector& z) {
  double total = 0.0;
  for (Index j = 0; j < out.cols(); ++j) total += training_deviance(z[j], out(0, j), out(1, j)).value;
  return total / static_cast<double>(out.cols());
}

std::vector<nn::Activation> gpd_head() {
  return {nn::Activation::softplus_shifted, nn::Activation::shape_bounded};
}

// Start every network at nu = 1 (in units of the mean exceedance) and xi = 0.1.
template <class Head>
void set_head_bias(Head& last_layer) {
  last_layer.bias[0] = nn::activation_inverse(nn::Activation::softplus_shifted, 1.0);
  last_layer.bias[1] = nn::activation_inverse(nn::Activation::shape_bounded, 0.1);
}

double response_scale_of(const Vector& z) {
  const double c = z.mean();
  return (std::isfinite(c) && c > 0.0) ? c : 1.0;
}

GpdTailFit make_tail(double q, double nu, double xi) {
  return {q, nu, xi, nu / (1.0 + xi)};
}

}  // namespace

Exceedances extract_exceedances(const Vector& y, const Vector& q) {
  if (y.size() != q.size()) throw DataError("extract_exceedances: response and quantile lengths differ");
  Exceedances e;
  for (Index i = 0; i < y.size(); ++i) {
    if (std::isfinite(q[i]) && y[i] > q[i]) {
      e.index.push_back(i);
      e.z.push_back(y[i] - q[i]);
    }
  }
  if (e.index.empty()) throw DataError("no response exceeds its intermediate quantile");
  return e;
}

Vector augment_features_iid(const Vector& x, double q) {
  Vector out(x.size() + 1);
  out.head(x.size()) = x;
  out[x.size()] = q;
  return out;
}

Matrix augment_features_iid(const Matrix& x, const Vector& q) {
  if (x.cols() != q.size()) throw DataError("augment_features_iid: covariate and quantile counts differ");
  Matrix out(x.rows() + 1, x.cols());
  out.topRows(x.rows()) = x;
  out.bottomRows(1) = q.transpose();
  return out;
}

rnn::SequenceWindow augment_features_seq(const rnn::SequenceWindow& window, std::span<const double> q) {
  if (window.steps.size() != q.size()) throw DataError("augment_features_seq: window and quantile lengths differ");
  rnn::SequenceWindow out;
  out.steps.reserve(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) out.steps.push_back(augment_features_iid(window.steps[k], q[k]));
  return out;
}

Matrix augment_step_features(const Series& series, const Vector& q) {
  if (q.size() != series.length()) throw DataError("augment_step_features: quantile length differs from series");
  return augment_features_iid(qreg::series_step_features(series), q);
}

std::vector<Index> sequential_targets(const Vector& q, Index horizon) {
  if (horizon < 1) throw DomainError("horizon must be >= 1");
  std::vector<Index> out;
  Index run = 0;  // consecutive finite entries ending just before t
  for (Index t = 0; t < q.size(); ++t) {
    if (run >= horizon && std::isfinite(q[t])) out.push_back(t);
    run = std::isfinite(q[t]) ? run + 1 : 0;
  }
  return out;
}

std::vector<GpdTailFit> EqrnModel::tails(const Matrix& x, const Vector& q) const {
  const auto* mlp = std::get_if<nn::Mlp>(&network);
  if (!mlp) throw DomainError("EqrnModel: sequential model needs a series");
  const Matrix out = mlp->forward(scaler.apply(augment_features_iid(x, q)));
  std::vector<GpdTailFit> tails;
  tails.reserve(static_cast<std::size_t>(out.cols()));
  for (Index j = 0; j < out.cols(); ++j) tails.push_back(make_tail(q[j], out(0, j) * response_scale, out(1, j)));
  return tails;
}

std::vector<GpdTailFit> EqrnModel::tails(const Series& series, const Vector& q, std::span<const Index> targets) const {
  const auto* lstm = std::get_if<rnn::LstmStack>(&network);
  if (!lstm) throw DomainError("EqrnModel: i.i.d. model needs covariates, not a series");
  for (Index t : targets) {
    if (t < horizon || t >= series.length()) throw DomainError("EqrnModel: target without a full window");
    if (!std::isfinite(q[t]) || !q.segment(t - horizon, horizon).allFinite()) {
      throw DomainError("EqrnModel: intermediate quantile unavailable in the window of t=" + std::to_string(t));
    }
  }
  const Matrix features = scaler.apply(augment_step_features(series, q));
  std::vector<GpdTailFit> tails;
  tails.reserve(targets.size());
  for (std::size_t start = 0; start < targets.size(); start += kPredictChunk) {
    const std::size_t len = std::min<std::size_t>(kPredictChunk, targets.size() - start);
    const auto chunk = targets.subspan(start, len);
    const Matrix out = lstm->forward(rnn::gather_windows(features, chunk, horizon));
    for (std::size_t k = 0; k < len; ++k) {
      const auto j = static_cast<Index>(k);
      tails.push_back(make_tail(q[chunk[k]], out(0, j) * response_scale, out(1, j)));
    }
  }
  return tails;
}

double mean_deviance(std::span<const double> z, std::span<const GpdTailFit> tails) {
  if (z.size() != tails.size() || z.empty()) throw DomainError("mean_deviance: size mismatch or empty");
  double total = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) total += training_deviance(z[k], tails[k].nu, tails[k].xi).value;
  return total / static_cast<double>(z.size());
}

EqrnFit eqrn_fit_iid(const Dataset& data, const Vector& q_oos, double tau0, const EqrnOptions& options) {
  check_tau0(tau0);
  if (data.x.cols() != data.y.size()) throw DataError("eqrn_fit: covariate and response counts differ");
  const Exceedances exc = extract_exceedances(data.y, q_oos);
  if (exc.index.size() < 10) throw DataError("eqrn_fit: fewer than 10 exceedances");
  const double frac = options.valid_fraction.value_or(0.25);

  std::vector<Index> positions(exc.index.size());
  std::iota(positions.begin(), positions.end(), Index{0});
  auto [train_pos, valid_pos] = qreg::random_split(positions, frac, options.train.seed);
  if (train_pos.empty()) throw DataError("eqrn_fit: training split is empty");

  const Matrix all_features = augment_features_iid(gather_cols(data.x, exc.index), gather(q_oos, exc.index));
  const Vector z = Eigen::Map<const Vector>(exc.z.data(), static_cast<Index>(exc.z.size()));

  EqrnModel model;
  model.kind = ModelKind::independent;
  model.tau0 = tau0;
  model.scaler = nn::FeatureScaler::fit(gather_cols(all_features, train_pos));
  model.response_scale = response_scale_of(gather(z, train_pos));
  const double c = model.response_scale;

  const Matrix features = model.scaler.apply(all_features);
  const Matrix train_x = gather_cols(features, train_pos);
  const Vector train_z = gather(z, train_pos) / c;
  const Matrix valid_x = gather_cols(features, valid_pos);
  const Vector valid_z = gather(z, valid_pos) / c;

  nn::MlpSpec spec;
  spec.input_dim = features.rows();
  spec.hidden = options.hyper.hidden;
  spec.hidden_activation = options.hyper.activation;
  spec.output_activations = gpd_head();
  spec.l2 = options.hyper.l2;
  spec.dropout = options.hyper.dropout;
  spec.constant_shape = options.hyper.constant_shape;
  spec.shape_unit = 1;

  nn::TrainTask<nn::Mlp> task;
  task.n_train = static_cast<Index>(train_pos.size());
  task.initialize = [&](Rng& rng) {
    nn::Mlp net = nn::Mlp::initialized(spec, rng);
    set_head_bias(net.layers().back());
    return net;
  };
  task.batch_loss_grad = [&](const nn::Mlp& net, std::span<const Index> batch, nn::MlpGradient& grad, Rng& rng) {
    nn::Mlp::Cache cache;
    const Matrix out = net.forward(gather_cols(train_x, batch), cache, &rng);
    Matrix upstream;
    const double loss = deviance_batch(out, gather(train_z, batch), upstream);
    grad = net.backward(cache, upstream);
    return loss + net.l2_penalty();
  };
  if (!valid_pos.empty()) {
    task.validation_loss = [&](const nn::Mlp& net) {
      return mean_training_deviance(net.forward(valid_x), valid_z) + std::log(c);
    };
  }
  auto result = nn::train_loop(task, options.train);
  model.network = std::move(result.model);

  EqrnFit fit;
  for (Index k : train_pos) fit.train_index.push_back(exc.index[static_cast<std::size_t>(k)]);
  for (Index k : valid_pos) fit.valid_index.push_back(exc.index[static_cast<std::size_t>(k)]);
  fit.valid_deviance = result.report.best_valid_loss;
  fit.report = std::move(result.report);
  fit.model = std::move(model);
  return fit;
}

EqrnFit eqrn_fit_seq(const Series& series, const Vector& q_oos, double tau0, Index horizon,
                     const EqrnOptions& options) {
  check_tau0(tau0);
  if (horizon < 1) throw DomainError("eqrn_fit: horizon must be >= 1");
  if (q_oos.size() != series.length()) throw DataError("eqrn_fit: quantile length differs from series");
  std::vector<Index> targets;
  for (Index t : sequential_targets(q_oos, horizon)) {
    if (series.y[t] > q_oos[t]) targets.push_back(t);
  }
  if (targets.size() < 10) throw DataError("eqrn_fit: fewer than 10 exceedances with a full history");
  auto [train_t, valid_t] = qreg::sequential_split(targets, options.valid_fraction.value_or(2.0 / 7.0));
  if (train_t.empty()) throw DataError("eqrn_fit: training split is empty");

  const Matrix raw = augment_step_features(series, q_oos);
  std::vector<bool> used(static_cast<std::size_t>(series.length()), false);
  for (Index t : train_t)
    for (Index j = t - horizon; j < t; ++j) used[static_cast<std::size_t>(j)] = true;
  std::vector<Index> used_cols;
  for (Index j = 0; j < series.length(); ++j)
    if (used[static_cast<std::size_t>(j)]) used_cols.push_back(j);

  EqrnModel model;
  model.kind = ModelKind::sequential;
  model.tau0 = tau0;
  model.horizon = horizon;
  model.scaler = nn::FeatureScaler::fit(gather_cols(raw, used_cols));
  Vector z_all = series.y - q_oos;
  model.response_scale = response_scale_of(gather(z_all, train_t));
  const double c = model.response_scale;

  const Matrix features = model.scaler.apply(raw);
  const Vector train_z = gather(z_all, train_t) / c;
  std::vector<Matrix> valid_steps;
  Vector valid_z;
  if (!valid_t.empty()) {
    valid_steps = rnn::gather_windows(features, valid_t, horizon);
    valid_z = gather(z_all, valid_t) / c;
  }

  rnn::LstmSpec spec;
  spec.input_dim = features.rows();
  spec.hidden = options.hyper.hidden;
  spec.output_activations = gpd_head();
  spec.l2 = options.hyper.l2;
  spec.constant_shape = options.hyper.constant_shape;
  spec.shape_unit = 1;

  nn::TrainTask<rnn::LstmStack> task;
  task.n_train = static_cast<Index>(train_t.size());
  task.initialize = [&](Rng& rng) {
    rnn::LstmStack net = rnn::LstmStack::initialized(spec, rng);
    set_head_bias(net.head().layers().back());
    return net;
  };
  task.batch_loss_grad = [&](const rnn::LstmStack& net, std::span<const Index> batch, rnn::LstmGradient& grad,
                             Rng&) {
    std::vector<Index> times(batch.size());
    Vector zb(static_cast<Index>(batch.size()));
    for (std::size_t k = 0; k < batch.size(); ++k) {
      times[k] = train_t[static_cast<std::size_t>(batch[k])];
      zb[static_cast<Index>(k)] = train_z[batch[k]];
    }
    rnn::LstmStack::Cache cache;
    const Matrix out = net.forward(rnn::gather_windows(features, times, horizon), cache);
    Matrix upstream;
    const double loss = deviance_batch(out, zb, upstream);
    grad = net.backward(cache, upstream);
    return loss + net.l2_penalty();
  };
  if (!valid_t.empty()) {
    task.validation_loss = [&](const rnn::LstmStack& net) {
      return mean_training_deviance(net.forward(valid_steps), valid_z) + std::log(c);
    };
  }
  auto result = nn::train_loop(task, options.train);
  model.network = std::move(result.model);

  EqrnFit fit;
  fit.train_index = std::move(train_t);
  fit.valid_index = std::move(valid_t);
  fit.valid_deviance = result.report.best_valid_loss;
  fit.report = std::move(result.report);
  fit.model = std::move(model);
  return fit;
}

ForecastRecord eqrn_predict(const GpdTailFit& tail, double tau0, const PredictOptions& options) {
  check_tau0(tau0);
  ForecastRecord rec;
  rec.nu = tail.nu;
  rec.xi = tail.xi;
  rec.sigma = tail.sigma;
  rec.intermediate_quantile = tail.intermediate_quantile;
  const evt::TailSpec spec = tail.spec(tau0);
  for (double level : options.levels) {
    if (!(level > tau0 && level < 1.0)) {
      throw DomainError("prediction level " + std::to_string(level) + " must lie in (tau0, 1)");
    }
    rec.quantiles.emplace_back(level, evt::gpd_quantile_extrapolate(spec, level));
  }
  if (options.threshold && *options.threshold >= tail.intermediate_quantile) {
    rec.exceed_prob = evt::gpd_exceedance_prob(*options.threshold, spec);
    if (options.baseline_prob) {
      const ProbRatio r = prob_ratio(*rec.exceed_prob, *options.baseline_prob, options.warning_ratio);
      rec.prob_ratio = r.ratio;
      rec.warning = r.warning;
    }
  }
  return rec;
}

std::vector<ForecastRecord> eqrn_predict(const EqrnModel& model, const Matrix& x, const PredictOptions& options) {
  if (!model.intermediate) throw DomainError("eqrn_predict: model has no intermediate quantile model");
  const Vector q = model.intermediate->predict(x);
  const auto tails = model.tails(x, q);
  std::vector<ForecastRecord> out;
  out.reserve(tails.size());
  for (std::size_t i = 0; i < tails.size(); ++i) {
    out.push_back(eqrn_predict(tails[i], model.tau0, options));
    out.back().time_index = static_cast<Index>(i);
  }
  return out;
}

std::vector<ForecastRecord> eqrn_predict(const EqrnModel& model, const Series& series,
                                         const PredictOptions& options) {
  if (!model.intermediate) throw DomainError("eqrn_predict: model has no intermediate quantile model");
  const Vector q = model.intermediate->predict(series);
  const std::vector<Index> targets = sequential_targets(q, model.horizon);
  const auto tails = model.tails(series, q, targets);
  std::vector<ForecastRecord> out;
  out.reserve(tails.size());
  for (std::size_t k = 0; k < tails.size(); ++k) {
    out.push_back(eqrn_predict(tails[k], model.tau0, options));
    out.back().time_index = targets[k];
  }
  return out;
}

GpdTailFit StaticTailModel::tail(double intermediate_quantile) const {
  return make_tail(intermediate_quantile, gpd.sigma * (1.0 + gpd.xi), gpd.xi);
}

GpdTailFit StaticTailModel::tail() const {
  if (!threshold) throw DomainError("StaticTailModel: no fixed threshold");
  return tail(*threshold);
}

StaticTailModel semi_conditional_fit(const Vector& y, const Vector& q, double tau0) {
  check_tau0(tau0);
  const Exceedances exc = extract_exceedances(y, q);
  StaticTailModel m;
  m.tau0 = tau0;
  m.gpd = evt::gpd_fit_mle(exc.z);
  return m;
}

StaticTailModel unconditional_fit(const Vector& y, double tau0) {
  check_tau0(tau0);
  const double u = qreg::empirical_quantile(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), tau0);
  std::vector<double> z;
  for (Index i = 0; i < y.size(); ++i)
    if (y[i] > u) z.push_back(y[i] - u);
  if (z.empty()) throw DataError("no response exceeds the empirical threshold");
  StaticTailModel m;
  m.tau0 = tau0;
  m.gpd = evt::gpd_fit_mle(z);
  m.threshold = u;
  return m;
}

ProbRatio prob_ratio(double exceed_prob, double baseline_prob, double warn_threshold) {
  if (!(baseline_prob > 0.0 && baseline_prob <= 1.0)) {
    throw DomainError("prob_ratio: baseline probability must lie in (0,1]");
  }
  if (!(exceed_prob >= 0.0 && exceed_prob <= 1.0)) throw DomainError("prob_ratio: probability outside [0,1]");
  const double r = exceed_prob / baseline_prob;
  return {r, r >= warn_threshold};
}

std::vector<NetworkHyper> make_grid(const std::vector<std::vector<Index>>& architectures,
                                    const std::vector<double>& l2_values, const std::vector<bool>& constant_shape,
                                    nn::Activation activation) {
  std::vector<NetworkHyper> grid;
  for (const auto& arch : architectures)
    for (double l2 : l2_values)
      for (bool cs : constant_shape) {
        NetworkHyper h;
        h.hidden = arch;
        h.l2 = l2;
        h.constant_shape = cs;
        h.activation = activation;
        grid.push_back(h);
      }
  return grid;
}

namespace {

template <class FitFn>
GridResult run_grid(const EqrnOptions& base, const std::vector<NetworkHyper>& grid, FitFn fit_one) {
  if (grid.empty()) throw DomainError("grid_search: empty grid");
  GridResult result;
  result.cells.resize(grid.size());
  std::vector<std::optional<EqrnFit>> fits(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      EqrnOptions opts = base;
      opts.hyper = grid[i];
      GridCell& cell = result.cells[i];
      cell.hyper = grid[i];
      try {
        fits[i] = fit_one(opts);
        cell.valid_deviance = fits[i]->valid_deviance;
        cell.ok = std::isfinite(cell.valid_deviance);
        if (!cell.ok) cell.error = "no finite validation deviance";
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  const std::size_t n_workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, grid.size());
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (result.cells[i].ok && result.cells[i].valid_deviance < best) {
      best = result.cells[i].valid_deviance;
      result.best = i;
    }
  }
  if (!std::isfinite(best)) throw TrainingError("grid_search: every configuration failed");
  result.best_fit = std::move(fits[result.best]);
  return result;
}

}  // namespace

GridResult grid_search_iid(const Dataset& data, const Vector& q_oos, double tau0, const EqrnOptions& base,
                           const std::vector<NetworkHyper>& grid) {
  return run_grid(base, grid, [&](const EqrnOptions& o) { return eqrn_fit_iid(data, q_oos, tau0, o); });
}

GridResult grid_search_seq(const Series& series, const Vector& q_oos, double tau0, Index horizon,
                           const EqrnOptions& base, const std::vector<NetworkHyper>& grid) {
  return run_grid(base, grid, [&](const EqrnOptions& o) { return eqrn_fit_seq(series, q_oos, tau0, horizon, o); });
}

}  // namespace eqrn
