#include "eqrn/nn/activation.hpp"

#include <algorithm>
#include <cmath>

#include "eqrn/error.hpp"

namespace eqrn::nn {

namespace {

constexpr double kSeluScale = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Saturated tanh would otherwise reach the excluded endpoints -0.5 and 0.7.
double shape_map(double z) {
  static const double lo = std::nextafter(-0.5, 0.0);
  static const double hi = std::nextafter(0.7, 0.0);
  return std::clamp(0.6 * std::tanh(z) + 0.1, lo, hi);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double activate(Activation act, double z) {
  switch (act) {
    case Activation::identity: return z;
    case Activation::tanh: return std::tanh(z);
    case Activation::sigmoid: return sigmoid(z);
    case Activation::selu: return z > 0.0 ? kSeluScale * z : kSeluScale * kSeluAlpha * std::expm1(z);
    case Activation::softplus_shifted: return softplus(z) + kSoftplusFloor;
    case Activation::exponential: return std::exp(z);
    case Activation::shape_bounded: return shape_map(z);
  }
  return z;
}

double activate_derivative(Activation act, double z) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::sigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case Activation::selu: return z > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(z);
    case Activation::softplus_shifted: return sigmoid(z);
    case Activation::exponential: return std::exp(z);
    case Activation::shape_bounded: {
      const double t = std::tanh(z);
      return 0.6 * (1.0 - t * t);
    }
  }
  return 1.0;
}

double activation_inverse(Activation act, double value) {
  switch (act) {
    case Activation::identity: return value;
    case Activation::tanh:
      if (!(std::abs(value) < 1.0)) break;
      return std::atanh(value);
    case Activation::sigmoid:
      if (!(value > 0.0 && value < 1.0)) break;
      return std::log(value / (1.0 - value));
    case Activation::selu:
      if (value > 0.0) return value / kSeluScale;
      if (!(value > -kSeluScale * kSeluAlpha)) break;
      return std::log1p(value / (kSeluScale * kSeluAlpha));
    case Activation::softplus_shifted: {
      const double v = value - kSoftplusFloor;
      if (!(v > 0.0)) break;
      return v > 30.0 ? v + std::log(-std::expm1(-v)) : std::log(std::expm1(v));
    }
    case Activation::exponential:
      if (!(value > 0.0)) break;
      return std::log(value);
    case Activation::shape_bounded: {
      const double t = (value - 0.1) / 0.6;
      if (!(std::abs(t) < 1.0)) break;
      return std::atanh(t);
    }
  }
  throw DomainError("activation_inverse: value outside the range of " + std::string(to_string(act)));
}

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::selu: return "selu";
    case Activation::softplus_shifted: return "softplus_shifted";
    case Activation::exponential: return "exponential";
    case Activation::shape_bounded: return "shape_bounded";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  for (Activation a : {Activation::identity, Activation::tanh, Activation::sigmoid, Activation::selu,
                       Activation::softplus_shifted, Activation::exponential, Activation::shape_bounded}) {
    if (to_string(a) == name) return a;
  }
  throw DataError("unknown activation '" + std::string(name) + "'");
}

}  // namespace eqrn::nn
