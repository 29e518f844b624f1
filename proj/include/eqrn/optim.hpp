#pragma once

#include <functional>

#include "eqrn/types.hpp"

namespace eqrn::optim {

// Objective returning f(x) and, when `grad` is non-null, its gradient.
// Returning a non-finite value marks x as infeasible; the line search backs off.
using Objective = std::function<double(const Vector& x, Vector* grad)>;

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;
  double value_tolerance = 1e-14;
};

struct MinimizeResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

MinimizeResult minimize_bfgs(const Objective& objective, Vector x0, const BfgsOptions& options = {});

// Central-difference gradient, used for objectives without analytic derivatives.
Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double step = 1e-6);

}  // namespace eqrn::optim
