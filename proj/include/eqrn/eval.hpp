#pragma once

#include <functional>
#include <span>
#include <vector>

#include "eqrn/types.hpp"

namespace eqrn::eval {

double mse(std::span<const double> pred, std::span<const double> truth);
double rmse(std::span<const double> pred, std::span<const double> truth);

// Root integrated squared error over [grid], estimated by the mean squared
// difference at the grid points (p x n, one point per column).
double rise(const std::function<double(const Vector&)>& predicted, const std::function<double(const Vector&)>& truth,
            const Matrix& grid);

// 1 - sum (truth - pred)^2 / sum (truth - mean(truth))^2
double quantile_r2(std::span<const double> pred, std::span<const double> truth);

struct BiasResid {
  double bias = 0.0;
  double resid_sd = 0.0;  // population standard deviation of pred - truth
};

BiasResid bias_resid_decomp(std::span<const double> pred, std::span<const double> truth);

struct CalibrationRow {
  double tau = 0.0;
  Index n = 0;
  double expected = 0.0;
  Index observed = 0;
  Index band_lo = 0;
  Index band_hi = 0;

  bool within_band() const { return observed >= band_lo && observed <= band_hi; }
};

// Exceedance counts sum 1{y_t > Q_t(tau)} against (1 - tau) n, with the
// two-sided binomial band at `band_level`. `predicted[k]` holds the quantile
// predictions at levels[k]; levels must be strictly increasing.
std::vector<CalibrationRow> calibration_curve(std::span<const double> responses, const std::vector<double>& levels,
                                              const std::vector<std::vector<double>>& predicted,
                                              double band_level = 0.99);

// Central binomial interval [lo, hi] of Binomial(n, prob) with coverage `level`.
std::pair<Index, Index> binomial_band(Index n, double prob, double level);

struct LevelMetrics {
  double tau = 0.0;
  double rmse = 0.0;
  double bias = 0.0;
  double resid_sd = 0.0;
  double r2 = 0.0;
};

struct MetricReport {
  std::vector<LevelMetrics> levels;
  std::vector<CalibrationRow> calibration;
};

LevelMetrics level_metrics(double tau, std::span<const double> pred, std::span<const double> truth);

}  // namespace eqrn::eval
