#include <cmath>
#include <numbers>
#include <string>

#include "eqrn/error.hpp"
#include "eqrn/sim.hpp"

namespace eqrn::sim {

namespace {

constexpr unsigned kPrimes[10] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

double bivariate_normal_density(double x1, double x2, double rho) {
  const double one_minus = 1.0 - rho * rho;
  const double quad = (x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / one_minus;
  return std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(one_minus));
}

void check_model(int model_id) {
  if (model_id < 1 || model_id > 3) throw DomainError("unknown i.i.d. model id " + std::to_string(model_id));
}

}  // namespace

double sigma_iid(int model_id, const Vector& x) {
  check_model(model_id);
  if (x.size() < 2) throw DomainError("sigma_iid: need at least two covariates");
  switch (model_id) {
    case 1: return 1.0 + 6.0 * bivariate_normal_density(x[0], x[1], 0.9);
    case 2: return 4.0 + 3.0 * std::cos(7.0 * std::hypot(x[0], x[1]) + 3.0);
    default: return 4.0 + 3.0 * std::cos(6.0 * x.norm() + 3.5);
  }
}

double alpha_iid(const Vector& x) {
  if (x.size() < 1) throw DomainError("alpha_iid: empty covariate vector");
  return 7.0 / (1.0 + std::exp(4.0 * x[0] + 1.2)) + 3.0;
}

Dataset gen_iid(const IidModelSpec& spec) {
  check_model(spec.model_id);
  if (spec.n < 1 || spec.p < 2) throw DomainError("gen_iid: need n >= 1 and p >= 2");
  Rng rng(mix_seed(spec.seed, 0x11d, static_cast<std::uint64_t>(spec.model_id)));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Dataset data{Matrix(spec.p, spec.n), Vector(spec.n)};
  for (Index i = 0; i < spec.n; ++i) {
    for (Index j = 0; j < spec.p; ++j) data.x(j, i) = unif(rng);
    const Vector x = data.x.col(i);
    std::student_t_distribution<double> t(alpha_iid(x));
    data.y[i] = sigma_iid(spec.model_id, x) * t(rng);
  }
  return data;
}

Vector draw_iid_responses(int model_id, const Matrix& x, std::uint64_t seed) {
  check_model(model_id);
  Rng rng(mix_seed(seed, 0x11e, static_cast<std::uint64_t>(model_id)));
  Vector y(x.cols());
  for (Index i = 0; i < x.cols(); ++i) {
    const Vector xi = x.col(i);
    std::student_t_distribution<double> t(alpha_iid(xi));
    y[i] = sigma_iid(model_id, xi) * t(rng);
  }
  return y;
}

double true_quantile_iid(int model_id, const Vector& x, double tau) {
  return sigma_iid(model_id, x) * student_t_quantile(tau, alpha_iid(x));
}

double ts_sigma2(const std::array<double, 5>& y, const std::array<double, 5>& x) {
  return 1.0 + 0.1 * (2.0 * y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3] + y[4] * y[4]) +
         0.1 * (3.0 * x[0] * x[0] + 2.0 * x[1] * x[1] + x[2] * x[2] + x[3] * x[3] + x[4] * x[4]);
}

TsSample gen_ts(const TsModelSpec& spec) {
  if (spec.length < 100) throw DomainError("gen_ts: series length must be >= 100");
  if (spec.burn_in < 50) throw DomainError("gen_ts: burn-in must be >= 50");
  Rng rng(mix_seed(spec.seed, 0x75));
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index total = spec.burn_in + spec.length;
  std::array<double, 5> y_lags{};
  std::array<double, 5> x_lags{};
  TsSample out;
  out.series.x.resize(1, spec.length);
  out.series.y.resize(spec.length);
  out.sigma.resize(spec.length);
  for (Index t = 0; t < total; ++t) {
    const double sigma = std::sqrt(ts_sigma2(y_lags, x_lags));
    const double eps_y = normal(rng);
    const double eps_x = normal(rng);
    const double y = sigma * std::abs(eps_y);
    const double x = 0.4 * x_lags[0] + std::abs(eps_x);
    for (int k = 4; k > 0; --k) {
      y_lags[k] = y_lags[k - 1];
      x_lags[k] = x_lags[k - 1];
    }
    y_lags[0] = y;
    x_lags[0] = x;
    if (t >= spec.burn_in) {
      const Index e = t - spec.burn_in;
      out.series.y[e] = y;
      out.series.x(0, e) = x;
      out.sigma[e] = sigma;
    }
  }
  return out;
}

double true_quantile_ts(double sigma_t, double tau) {
  if (!(sigma_t > 0.0)) throw DomainError("true_quantile_ts: sigma must be positive");
  return sigma_t * normal_quantile(0.5 * (1.0 + tau));
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double fraction = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += static_cast<double>(index % base) * fraction;
    index /= base;
    fraction /= static_cast<double>(base);
  }
  return result;
}

Matrix halton_grid(Index n_points, Index p, const std::vector<std::pair<double, double>>& ranges) {
  if (p < 1 || p > 10) throw DomainError("halton_grid: dimension must be between 1 and 10");
  if (static_cast<Index>(ranges.size()) != p) throw DomainError("halton_grid: one range per dimension required");
  Matrix grid(p, n_points);
  for (Index i = 0; i < n_points; ++i) {
    for (Index d = 0; d < p; ++d) {
      const auto [lo, hi] = ranges[static_cast<std::size_t>(d)];
      grid(d, i) = lo + (hi - lo) * radical_inverse(static_cast<std::uint64_t>(i + 1), kPrimes[d]);
    }
  }
  return grid;
}

}  // namespace eqrn::sim
