#pragma once

// Synthetic benchmark generators with exact conditional-quantile oracles:
// heavy-tailed i.i.d. regression models and a conditionally heteroscedastic
// half-normal time series. Also provides Halton test grids.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "eqrn/types.hpp"

namespace eqrn::sim {

struct IidModelSpec {
  int model_id = 1;  // 1, 2 or 3
  Index p = 10;
  Index n = 5000;
  std::uint64_t seed = 1;
};

struct TsModelSpec {
  Index length = 7000;
  Index burn_in = 100;
  std::uint64_t seed = 1;
};

// Scale sigma(x) of Y | X = x ~ sigma(x) * t_{alpha(x)}.
double sigma_iid(int model_id, const Vector& x);
// Degrees of freedom alpha(x) = 7 / (1 + exp(4 x_1 + 1.2)) + 3, in (3, 10).
double alpha_iid(const Vector& x);

Dataset gen_iid(const IidModelSpec& spec);
// Responses at fixed covariates (p x n), e.g. a Halton grid.
Vector draw_iid_responses(int model_id, const Matrix& x, std::uint64_t seed);
double true_quantile_iid(int model_id, const Vector& x, double tau);

struct TsSample {
  Series series;  // x is 1 x T
  Vector sigma;   // conditional scale sigma_t of every emitted step
};

// sigma_t^2 from the five most recent responses and covariates (lag 1 first).
double ts_sigma2(const std::array<double, 5>& y_lags, const std::array<double, 5>& x_lags);

TsSample gen_ts(const TsModelSpec& spec);
// Y_t | past = sigma_t |eps|, so Q(tau) = sigma_t * Phi^{-1}((1 + tau) / 2).
double true_quantile_ts(double sigma_t, double tau);

// Radical inverse of `index` in `base` (van der Corput).
double radical_inverse(std::uint64_t index, unsigned base);
// Points 1..n of the Halton sequence in p <= 10 dimensions, mapped into the
// boxes `ranges` (one (lo, hi) per dimension). Returns p x n.
Matrix halton_grid(Index n_points, Index p, const std::vector<std::pair<double, double>>& ranges);

double normal_quantile(double prob);
double student_t_cdf(double t, double dof);
double student_t_quantile(double prob, double dof);

}  // namespace eqrn::sim
