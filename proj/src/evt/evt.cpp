#include "eqrn/evt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "eqrn/error.hpp"
#include "eqrn/optim.hpp"

namespace eqrn::evt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Range of the bounded shape map used by the unconditional fitter; matches
// the network shape activation 0.6 tanh(r) + 0.1.
double bounded_shape(double raw) {
  static const double lo = std::nextafter(kMinShape, 0.0);
  static const double hi = std::nextafter(0.7, 0.0);
  return std::clamp(0.6 * std::tanh(raw) + 0.1, lo, hi);
}
double bounded_shape_derivative(double raw) {
  const double t = std::tanh(raw);
  return 0.6 * (1.0 - t * t);
}
double bounded_shape_inverse(double xi) { return std::atanh(std::clamp((xi - 0.1) / 0.6, -0.999, 0.999)); }

void check_ogpd_domain(double z, double nu, double xi) {
  if (!(nu > 0.0)) throw DomainError("ogpd: nu must be positive, got " + std::to_string(nu));
  if (!(xi > kMinShape)) throw DomainError("ogpd: xi must exceed -0.5, got " + std::to_string(xi));
  if (!(z >= 0.0)) throw DomainError("ogpd: exceedance must be non-negative, got " + std::to_string(z));
  if (!(1.0 + xi * (xi + 1.0) * z / nu > 0.0)) throw DomainError("ogpd: exceedance outside GPD support");
}

}  // namespace

OrthoGpdParams to_orthogonal(const GpdParams& p) { return {p.sigma * (p.xi + 1.0), p.xi}; }

GpdParams from_orthogonal(const OrthoGpdParams& p) { return {p.nu / (p.xi + 1.0), p.xi}; }

void validate(const GpdParams& p) {
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) throw DomainError("GPD scale must be positive and finite");
  if (!(p.xi > kMinShape) || !std::isfinite(p.xi)) throw DomainError("GPD shape must exceed -0.5");
}

void validate(const OrthoGpdParams& p) {
  if (!(p.nu > 0.0) || !std::isfinite(p.nu)) throw DomainError("orthogonal GPD nu must be positive and finite");
  if (!(p.xi > kMinShape) || !std::isfinite(p.xi)) throw DomainError("GPD shape must exceed -0.5");
}

double gpd_log_density(double z, const GpdParams& p) {
  if (!(p.sigma > 0.0)) throw DomainError("GPD scale must be positive");
  if (z < 0.0) return -kInf;
  const double scaled = z / p.sigma;
  if (std::abs(p.xi) < kShapeZeroTolerance) {
    const double d = scaled;
    return -std::log(p.sigma) - (d + p.xi * (d - 0.5 * d * d) + p.xi * p.xi * (d * d * d / 3.0 - 0.5 * d * d));
  }
  const double t = p.xi * scaled;
  if (!(t > -1.0)) return -kInf;
  return -std::log(p.sigma) - (1.0 / p.xi + 1.0) * std::log1p(t);
}

double gpd_density(double z, const GpdParams& p) { return std::exp(gpd_log_density(z, p)); }

double ogpd_deviance(double z, double nu, double xi) {
  check_ogpd_domain(z, nu, xi);
  const double a = (xi + 1.0) * z / nu;
  double tail;
  if (std::abs(xi) < kShapeZeroTolerance) {
    // (1 + 1/xi) log(1 + xi a) = a + xi (a - a^2/2) + xi^2 (a^3/3 - a^2/2) + O(xi^3)
    tail = a + xi * (a - 0.5 * a * a) + xi * xi * (a * a * a / 3.0 - 0.5 * a * a);
  } else {
    tail = (1.0 + 1.0 / xi) * std::log1p(xi * a);
  }
  return tail + std::log(nu) - std::log1p(xi);
}

OgpdGradient ogpd_deviance_grad(double z, double nu, double xi) {
  check_ogpd_domain(z, nu, xi);
  const double a = (xi + 1.0) * z / nu;
  const double da_dnu = -a / nu;
  const double da_dxi = z / nu;
  OgpdGradient g;
  if (std::abs(xi) < kShapeZeroTolerance) {
    const double ds_da = 1.0 + xi * (1.0 - a) + xi * xi * (a * a - a);
    const double ds_dxi = (a - 0.5 * a * a) + 2.0 * xi * (a * a * a / 3.0 - 0.5 * a * a);
    g.d_nu = ds_da * da_dnu + 1.0 / nu;
    g.d_xi = ds_dxi + ds_da * da_dxi - 1.0 / (1.0 + xi);
    return g;
  }
  const double w = 1.0 + xi * a;
  g.d_nu = -(xi + 1.0) * a / (nu * w) + 1.0 / nu;
  g.d_xi = -std::log1p(xi * a) / (xi * xi) + (1.0 + 1.0 / xi) * (a + xi * da_dxi) / w - 1.0 / (1.0 + xi);
  return g;
}

double gpd_quantile_extrapolate(double q_tau0, double sigma, double xi, double tau0, double tau) {
  if (!(sigma > 0.0)) throw DomainError("quantile extrapolation: sigma must be positive");
  if (!(tau0 > 0.0 && tau0 < 1.0)) throw DomainError("quantile extrapolation: tau0 must lie in (0,1)");
  if (!(tau >= tau0)) throw DomainError("quantile extrapolation: tau must be >= tau0");
  if (!(tau < 1.0)) throw DomainError("quantile extrapolation: tau must be < 1");
  const double log_ratio = std::log1p(-tau0) - std::log1p(-tau);
  if (std::abs(xi) < kShapeZeroTolerance) {
    const double l = log_ratio;
    return q_tau0 + sigma * l * (1.0 + xi * l / 2.0 + xi * xi * l * l / 6.0);
  }
  return q_tau0 + sigma / xi * std::expm1(xi * log_ratio);
}

double gpd_quantile_extrapolate(const TailSpec& spec, double tau) {
  return gpd_quantile_extrapolate(spec.intermediate_quantile, spec.gpd.sigma, spec.gpd.xi, spec.tau0, tau);
}

double gpd_exceedance_prob(double y, const TailSpec& spec) {
  if (!(spec.tau0 > 0.0 && spec.tau0 < 1.0)) throw DomainError("exceedance probability: tau0 must lie in (0,1)");
  if (!(spec.gpd.sigma > 0.0)) throw DomainError("exceedance probability: sigma must be positive");
  if (!(y >= spec.intermediate_quantile)) throw DomainError("exceedance probability: y below the threshold");
  const double d = (y - spec.intermediate_quantile) / spec.gpd.sigma;
  const double base = 1.0 - spec.tau0;
  if (std::isinf(d)) return 0.0;
  if (std::abs(spec.gpd.xi) < kShapeZeroTolerance) {
    const double xi = spec.gpd.xi;
    return base * std::exp(-(d - xi * d * d / 2.0 + xi * xi * d * d * d / 3.0));
  }
  const double t = spec.gpd.xi * d;
  if (t <= -1.0) return 0.0;
  return base * std::exp(-std::log1p(t) / spec.gpd.xi);
}

double gpd_mean_deviance(std::span<const double> exceedances, const GpdParams& p) {
  const OrthoGpdParams o = to_orthogonal(p);
  double total = 0.0;
  for (double z : exceedances) total += ogpd_deviance(z, o.nu, o.xi);
  return total / static_cast<double>(exceedances.size());
}

GpdParams gpd_fit_mle(std::span<const double> exceedances) {
  const auto n = exceedances.size();
  if (n < 5) throw DomainError("gpd_fit_mle: need at least 5 exceedances, got " + std::to_string(n));
  double mean = 0.0;
  for (double z : exceedances) {
    if (!(z >= 0.0) || !std::isfinite(z)) throw DomainError("gpd_fit_mle: exceedances must be finite and >= 0");
    mean += z;
  }
  mean /= static_cast<double>(n);
  if (!(mean > 0.0)) throw DomainError("gpd_fit_mle: all exceedances are zero");

  // Optimise on data divided by its mean for conditioning.
  std::vector<double> scaled(exceedances.begin(), exceedances.end());
  double var = 0.0;
  for (double& z : scaled) {
    z /= mean;
    var += (z - 1.0) * (z - 1.0);
  }
  var /= static_cast<double>(n);
  const double zmax = *std::max_element(scaled.begin(), scaled.end());

  // theta = (log nu, raw shape)
  const optim::Objective objective = [&](const Vector& theta, Vector* grad) {
    const double nu = std::exp(theta[0]);
    const double xi = bounded_shape(theta[1]);
    if (!std::isfinite(nu) || !(1.0 + xi * (xi + 1.0) * zmax / nu > 0.0)) return kInf;
    double value = 0.0, d_nu = 0.0, d_xi = 0.0;
    for (double z : scaled) {
      value += ogpd_deviance(z, nu, xi);
      if (grad) {
        const OgpdGradient g = ogpd_deviance_grad(z, nu, xi);
        d_nu += g.d_nu;
        d_xi += g.d_xi;
      }
    }
    const double inv_n = 1.0 / static_cast<double>(scaled.size());
    if (grad) {
      grad->resize(2);
      (*grad)[0] = d_nu * nu * inv_n;
      (*grad)[1] = d_xi * bounded_shape_derivative(theta[1]) * inv_n;
    }
    return value * inv_n;
  };

  const double xi_mom = std::clamp(0.5 * (1.0 - 1.0 / std::max(var, 1e-12)), -0.45, 0.65);
  std::vector<Vector> starts;
  auto add_start = [&](double xi) {
    const double sigma = (1.0 - xi);  // mean of scaled data is 1
    Vector s(2);
    s << std::log(std::max(sigma * (1.0 + xi), 1e-3)), bounded_shape_inverse(xi);
    starts.push_back(s);
  };
  add_start(xi_mom);
  Rng rng(mix_seed(0x6770645f6d6c65ULL, n));
  std::uniform_real_distribution<double> shape_draw(-0.3, 0.6);
  for (int r = 0; r < 4; ++r) add_start(shape_draw(rng));

  optim::MinimizeResult best;
  best.value = kInf;
  best.gradient_norm = kInf;
  for (Vector& start : starts) {
    if (!std::isfinite(objective(start, nullptr))) {
      // Infeasible start for negative shapes: move towards xi = 0.1.
      start[1] = 0.0;
      start[0] = std::log(std::max(zmax, 1.0));
    }
    const optim::MinimizeResult r = optim::minimize_bfgs(objective, start);
    if (std::isfinite(r.value) && (r.value < best.value - 1e-12 ||
                                   (std::abs(r.value - best.value) <= 1e-12 && r.gradient_norm < best.gradient_norm))) {
      best = r;
    }
  }
  if (!std::isfinite(best.value) || best.gradient_norm > 1e-4) {
    throw ConvergenceError("gpd_fit_mle: likelihood optimisation did not converge", best.gradient_norm);
  }
  const double nu = std::exp(best.x[0]) * mean;
  const double xi = bounded_shape(best.x[1]);
  return from_orthogonal({nu, xi});
}

double gev_log_density(double x, const GevParams& p) {
  if (!(p.sigma > 0.0)) return -kInf;
  const double y = (x - p.mu) / p.sigma;
  if (std::abs(p.xi) < kShapeZeroTolerance) return -std::log(p.sigma) - y - std::exp(-y);
  const double t = 1.0 + p.xi * y;
  if (!(t > 0.0)) return -kInf;
  const double log_t = std::log(t);
  return -std::log(p.sigma) - (1.0 + 1.0 / p.xi) * log_t - std::exp(-log_t / p.xi);
}

double gev_cdf(double x, const GevParams& p) {
  if (!(p.sigma > 0.0)) throw DomainError("gev_cdf: scale must be positive");
  const double y = (x - p.mu) / p.sigma;
  if (std::abs(p.xi) < kShapeZeroTolerance) return std::exp(-std::exp(-y));
  const double t = 1.0 + p.xi * y;
  if (!(t > 0.0)) return p.xi > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-std::log(t) / p.xi));
}

double gev_quantile(const GevParams& p, double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("gev_quantile: probability must lie in (0,1)");
  const double log_term = -std::log(prob);
  if (std::abs(p.xi) < kShapeZeroTolerance) return p.mu - p.sigma * std::log(log_term);
  return p.mu + p.sigma / p.xi * std::expm1(-p.xi * std::log(log_term));
}

GevParams gev_fit_mle(std::span<const double> maxima) {
  const auto n = maxima.size();
  if (n < 10) throw DomainError("gev_fit_mle: need at least 10 maxima, got " + std::to_string(n));
  double mean = 0.0;
  for (double m : maxima) {
    if (!std::isfinite(m)) throw DomainError("gev_fit_mle: non-finite maximum");
    mean += m;
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double m : maxima) var += (m - mean) * (m - mean);
  var /= static_cast<double>(n - 1);
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) throw DomainError("gev_fit_mle: maxima have zero spread");

  std::vector<double> scaled(maxima.begin(), maxima.end());
  for (double& m : scaled) m = (m - mean) / sd;

  // theta = (mu, log sigma, xi) on standardised data.
  auto nll = [&](const Vector& theta) {
    const GevParams p{theta[0], std::exp(theta[1]), theta[2]};
    double total = 0.0;
    for (double m : scaled) {
      const double l = gev_log_density(m, p);
      if (!std::isfinite(l)) return kInf;
      total -= l;
    }
    return total / static_cast<double>(scaled.size());
  };
  // The GEV likelihood is cheap; central differences are accurate enough here.
  const optim::Objective objective = [&](const Vector& theta, Vector* grad) {
    const double v = nll(theta);
    if (grad && std::isfinite(v)) *grad = optim::numeric_gradient(nll, theta, 1e-6);
    return v;
  };

  const double gumbel_sigma = std::sqrt(6.0) / M_PI;
  const double gumbel_mu = -0.5772156649015329 * gumbel_sigma;
  optim::MinimizeResult best;
  best.value = kInf;
  best.gradient_norm = kInf;
  for (double xi0 : {0.0, 0.1, -0.1, 0.25, -0.25}) {
    Vector start(3);
    start << gumbel_mu, std::log(gumbel_sigma), xi0;
    if (!std::isfinite(nll(start))) start[2] = 0.0;
    optim::BfgsOptions options;
    options.gradient_tolerance = 1e-7;
    const optim::MinimizeResult r = optim::minimize_bfgs(objective, start, options);
    if (std::isfinite(r.value) && r.value < best.value) best = r;
  }
  if (!std::isfinite(best.value) || best.gradient_norm > 1e-4) {
    throw ConvergenceError("gev_fit_mle: likelihood optimisation did not converge", best.gradient_norm);
  }
  return {mean + sd * best.x[0], sd * std::exp(best.x[1]), best.x[2]};
}

double gev_return_level(const GevParams& p, double t_years) {
  if (!(t_years > 1.0)) throw DomainError("gev_return_level: return period must exceed 1 year");
  return gev_quantile(p, 1.0 - 1.0 / t_years);
}

double return_period_to_tau(double t_years, long n_per_year) {
  if (n_per_year < 1) throw DomainError("return_period_to_tau: observations per year must be positive");
  const double events = static_cast<double>(n_per_year) * t_years;
  if (!(events > 1.0)) throw DomainError("return_period_to_tau: n_per_year * T must exceed 1");
  return 1.0 - 1.0 / events;
}

}  // namespace eqrn::evt
