#pragma once

// Closed-form extreme-value mathematics: generalized Pareto (GPD) and
// generalized extreme value (GEV) laws, the orthogonal GPD deviance used as
// the EQRN training loss, tail extrapolation and unconditional MLE fits.

#include <span>

#include "eqrn/types.hpp"

namespace eqrn::evt {

// Below this |xi| the xi -> 0 limit formulas are used.
inline constexpr double kShapeZeroTolerance = 1e-6;
// Lower bound of the likelihood regularity regime.
inline constexpr double kMinShape = -0.5;

struct GpdParams {
  double sigma = 1.0;
  double xi = 0.0;
};

// Orthogonal parametrisation nu = sigma * (xi + 1).
struct OrthoGpdParams {
  double nu = 1.0;
  double xi = 0.0;
};

struct GevParams {
  double mu = 0.0;
  double sigma = 1.0;
  double xi = 0.0;
};

// Conditional tail above the intermediate quantile u = Q(tau0).
struct TailSpec {
  double tau0 = 0.8;
  double intermediate_quantile = 0.0;
  GpdParams gpd;
};

OrthoGpdParams to_orthogonal(const GpdParams& p);
GpdParams from_orthogonal(const OrthoGpdParams& p);

void validate(const GpdParams& p);
void validate(const OrthoGpdParams& p);

double gpd_density(double z, const GpdParams& p);
double gpd_log_density(double z, const GpdParams& p);

// Negative log-likelihood of one exceedance z under GPD(nu, xi) in the
// orthogonal parametrisation.
double ogpd_deviance(double z, double nu, double xi);

struct OgpdGradient {
  double d_nu = 0.0;
  double d_xi = 0.0;
};

OgpdGradient ogpd_deviance_grad(double z, double nu, double xi);

// Q(tau) = Q(tau0) + sigma/xi * [((1 - tau0)/(1 - tau))^xi - 1].
double gpd_quantile_extrapolate(double q_tau0, double sigma, double xi, double tau0, double tau);
double gpd_quantile_extrapolate(const TailSpec& spec, double tau);

// P(Y > y) = (1 - tau0) * (1 + xi (y - u)/sigma)_+^{-1/xi}, for y >= u.
double gpd_exceedance_prob(double y, const TailSpec& spec);

GpdParams gpd_fit_mle(std::span<const double> exceedances);
// Mean deviance of `exceedances` under the given parameters.
double gpd_mean_deviance(std::span<const double> exceedances, const GpdParams& p);

double gev_log_density(double x, const GevParams& p);
double gev_cdf(double x, const GevParams& p);
double gev_quantile(const GevParams& p, double prob);
GevParams gev_fit_mle(std::span<const double> maxima);
double gev_return_level(const GevParams& p, double t_years);

// tau = 1 - 1/(n_per_year * T).
double return_period_to_tau(double t_years, long n_per_year);

}  // namespace eqrn::evt
