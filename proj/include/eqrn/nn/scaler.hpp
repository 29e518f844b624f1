#pragma once

#include "eqrn/types.hpp"

namespace eqrn::nn {

// Per-feature standardisation with training-set mean and standard deviation.
// Features are rows; observations are columns.
struct FeatureScaler {
  Vector mean;
  Vector sd;

  static FeatureScaler fit(const Matrix& features);
  static FeatureScaler identity(Index dim);

  Matrix apply(const Matrix& features) const;
  Vector apply(const Vector& features) const;
  Index dim() const { return mean.size(); }
};

}  // namespace eqrn::nn
