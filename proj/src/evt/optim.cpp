#include "eqrn/optim.hpp"

#include <cmath>
#include <limits>

namespace eqrn::optim {

namespace {

constexpr double kArmijo = 1e-4;

}  // namespace

MinimizeResult minimize_bfgs(const Objective& objective, Vector x0, const BfgsOptions& options) {
  const Index n = x0.size();
  MinimizeResult result;
  result.x = std::move(x0);

  Vector grad(n);
  double value = objective(result.x, &grad);
  if (!std::isfinite(value) || !grad.allFinite()) {
    result.value = value;
    result.gradient_norm = std::numeric_limits<double>::infinity();
    return result;
  }

  Matrix inv_hessian = Matrix::Identity(n, n);
  Vector next_grad(n);
  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it;
    const double gnorm = grad.norm();
    if (gnorm < options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    Vector direction = -inv_hessian * grad;
    double slope = direction.dot(grad);
    if (slope >= 0.0) {
      inv_hessian.setIdentity();
      direction = -grad;
      slope = -gnorm * gnorm;
    }

    double step = 1.0;
    double next_value = std::numeric_limits<double>::infinity();
    Vector candidate;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      candidate = result.x + step * direction;
      next_value = objective(candidate, &next_grad);
      if (std::isfinite(next_value) && next_grad.allFinite() &&
          next_value <= value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent possible along any direction we can find: stationary to
      // working precision.
      result.converged = gnorm < std::sqrt(options.gradient_tolerance);
      break;
    }

    const Vector s = candidate - result.x;
    const Vector y = next_grad - grad;
    const double sy = s.dot(y);
    const double improvement = value - next_value;
    result.x = std::move(candidate);
    grad = next_grad;
    value = next_value;

    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Matrix identity = Matrix::Identity(n, n);
      inv_hessian = (identity - rho * s * y.transpose()) * inv_hessian * (identity - rho * y * s.transpose()) +
                    rho * s * s.transpose();
    }
    if (improvement <= options.value_tolerance * (1.0 + std::abs(value)) && grad.norm() < 1e-5) {
      result.converged = true;
      break;
    }
  }
  result.value = value;
  result.gradient_norm = grad.norm();
  if (result.gradient_norm < options.gradient_tolerance) result.converged = true;
  return result;
}

Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double step) {
  Vector g(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace eqrn::optim
