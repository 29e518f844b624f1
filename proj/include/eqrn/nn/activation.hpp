#pragma once

#include <string>
#include <string_view>

namespace eqrn::nn {

enum class Activation {
  identity,
  tanh,
  sigmoid,
  selu,
  softplus_shifted,  // log(1 + e^z) + 1e-4, strictly positive
  exponential,
  shape_bounded,     // 0.6 tanh(z) + 0.1, range (-0.5, 0.7)
};

inline constexpr double kSoftplusFloor = 1e-4;

double activate(Activation act, double z);
// Derivative with respect to the pre-activation z.
double activate_derivative(Activation act, double z);
// Pre-activation producing `value`; throws DomainError outside the range.
double activation_inverse(Activation act, double value);

std::string_view to_string(Activation act);
Activation activation_from_string(std::string_view name);

}  // namespace eqrn::nn
