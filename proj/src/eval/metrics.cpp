#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/binomial.hpp>

#include "eqrn/error.hpp"
#include "eqrn/eval.hpp"

namespace eqrn::eval {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth) {
  if (pred.empty()) throw DomainError("metric: empty input");
  if (pred.size() != truth.size()) {
    throw DomainError("metric: length mismatch (" + std::to_string(pred.size()) + " vs " +
                      std::to_string(truth.size()) + ")");
  }
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return total / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> truth) { return std::sqrt(mse(pred, truth)); }

double rise(const std::function<double(const Vector&)>& predicted, const std::function<double(const Vector&)>& truth,
            const Matrix& grid) {
  if (grid.cols() == 0) throw DomainError("rise: empty grid");
  std::vector<double> p(static_cast<std::size_t>(grid.cols()));
  std::vector<double> t(p.size());
  for (Index i = 0; i < grid.cols(); ++i) {
    const Vector x = grid.col(i);
    p[static_cast<std::size_t>(i)] = predicted(x);
    t[static_cast<std::size_t>(i)] = truth(x);
  }
  return rmse(p, t);
}

double quantile_r2(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw DomainError("quantile_r2: true quantiles have zero variance");
  return 1.0 - ss_res / ss_tot;
}

BiasResid bias_resid_decomp(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  if (pred.size() < 2) throw DomainError("bias_resid_decomp: need at least two points");
  const double n = static_cast<double>(pred.size());
  double bias = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) bias += pred[i] - truth[i];
  bias /= n;
  double var = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i] - bias;
    var += d * d;
  }
  return {bias, std::sqrt(var / n)};
}

std::pair<Index, Index> binomial_band(Index n, double prob, double level) {
  if (n < 1) throw DomainError("binomial_band: n must be positive");
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("binomial_band: probability must lie in (0,1)");
  const boost::math::binomial_distribution<double> dist(static_cast<double>(n), prob);
  const double alpha = 0.5 * (1.0 - level);
  const double lo = boost::math::quantile(dist, alpha);
  const double hi = boost::math::quantile(boost::math::complement(dist, alpha));
  return {static_cast<Index>(std::floor(lo)), static_cast<Index>(std::ceil(hi))};
}

std::vector<CalibrationRow> calibration_curve(std::span<const double> responses, const std::vector<double>& levels,
                                              const std::vector<std::vector<double>>& predicted, double band_level) {
  if (levels.size() != predicted.size()) throw DomainError("calibration_curve: one prediction vector per level");
  if (responses.empty()) throw DomainError("calibration_curve: empty input");
  for (std::size_t k = 1; k < levels.size(); ++k) {
    if (!(levels[k] > levels[k - 1])) throw DomainError("calibration_curve: levels must be strictly increasing");
  }
  std::vector<CalibrationRow> rows;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (predicted[k].size() != responses.size()) throw DomainError("calibration_curve: length mismatch");
    CalibrationRow row;
    row.tau = levels[k];
    row.n = static_cast<Index>(responses.size());
    row.expected = (1.0 - levels[k]) * static_cast<double>(row.n);
    for (std::size_t t = 0; t < responses.size(); ++t) {
      if (responses[t] > predicted[k][t]) ++row.observed;
    }
    std::tie(row.band_lo, row.band_hi) = binomial_band(row.n, 1.0 - levels[k], band_level);
    rows.push_back(row);
  }
  return rows;
}

LevelMetrics level_metrics(double tau, std::span<const double> pred, std::span<const double> truth) {
  LevelMetrics m;
  m.tau = tau;
  m.rmse = rmse(pred, truth);
  const BiasResid br = bias_resid_decomp(pred, truth);
  m.bias = br.bias;
  m.resid_sd = br.resid_sd;
  m.r2 = quantile_r2(pred, truth);
  return m;
}

}  // namespace eqrn::eval
