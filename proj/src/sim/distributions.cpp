#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/roots.hpp>

#include "eqrn/error.hpp"
#include "eqrn/sim.hpp"

namespace eqrn::sim {

// Wichura (1988), algorithm AS 241 (PPND16); relative accuracy about 1e-16.
double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("normal_quantile: probability must lie in (0,1)");
  const double q = prob - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = q < 0.0 ? prob : 1.0 - prob;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                 1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                 2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                 7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

namespace {

// P(T > t) for t >= 0 and P(0 < T <= t), each without cancellation.
double t_upper_tail(double t, double dof) { return 0.5 * boost::math::ibeta(0.5 * dof, 0.5, dof / (dof + t * t)); }
double t_central(double t, double dof) { return 0.5 * boost::math::ibeta(0.5, 0.5 * dof, t * t / (dof + t * t)); }

}  // namespace

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw DomainError("student_t_cdf: degrees of freedom must be positive");
  if (t == 0.0) return 0.5;
  const double a = std::abs(t);
  const double upper = a * a < dof ? 0.5 - t_central(a, dof) : t_upper_tail(a, dof);
  return t > 0.0 ? 1.0 - upper : upper;
}

// Root of the CDF: the bracket is widened until it contains the root, then
// Newton steps with bisection fallback inside the bracket. Levels near 1/2
// are matched on P(0 < T <= t), others on the upper tail.
double student_t_quantile(double prob, double dof) {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("student_t_quantile: probability must lie in (0,1)");
  if (!(dof > 0.0)) throw DomainError("student_t_quantile: degrees of freedom must be positive");
  if (prob == 0.5) return 0.0;
  if (prob < 0.5) return -student_t_quantile(1.0 - prob, dof);
  const bool central = prob < 0.75;
  const double target = central ? prob - 0.5 : 1.0 - prob;
  // Increasing in t with derivative equal to the density.
  auto excess = [&](double t) { return central ? t_central(t, dof) - target : target - t_upper_tail(t, dof); };
  // Bracket around a Cornish-Fisher start.
  const double z = normal_quantile(prob);
  const double guess = std::max(z * (1.0 + (z * z + 1.0) / (4.0 * dof)), 1e-300);
  double lo = guess;
  double hi = guess;
  if (excess(guess) < 0.0) {
    do {
      lo = hi;
      hi *= 1.5;
      if (hi > 1e300) return std::numeric_limits<double>::infinity();
    } while (excess(hi) < 0.0);
  } else {
    do {
      hi = lo;
      lo /= 1.5;
      if (lo < 1e-300) {
        lo = 0.0;
        break;
      }
    } while (excess(lo) >= 0.0);
  }
  const double log_norm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                          0.5 * std::log(dof * boost::math::constants::pi<double>());
  auto f = [&](double t) {
    const double density = std::exp(log_norm - 0.5 * (dof + 1.0) * std::log1p(t * t / dof));
    return std::make_pair(excess(t), density);
  };
  std::uintmax_t max_iter = 200;
  return boost::math::tools::newton_raphson_iterate(f, std::clamp(guess, lo, hi), lo, hi,
                                                    std::numeric_limits<double>::digits - 2, max_iter);
}

}  // namespace eqrn::sim
