#include "eqrn/nn/scaler.hpp"

#include <cmath>

#include "eqrn/error.hpp"

namespace eqrn::nn {

FeatureScaler FeatureScaler::fit(const Matrix& features) {
  if (features.cols() == 0) throw DomainError("FeatureScaler::fit: no observations");
  FeatureScaler s;
  s.mean = features.rowwise().mean();
  s.sd.resize(features.rows());
  for (Index i = 0; i < features.rows(); ++i) {
    const double var = (features.row(i).array() - s.mean[i]).square().mean();
    const double sd = std::sqrt(var);
    s.sd[i] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

FeatureScaler FeatureScaler::identity(Index dim) { return {Vector::Zero(dim), Vector::Ones(dim)}; }

Matrix FeatureScaler::apply(const Matrix& features) const {
  if (features.rows() != mean.size()) throw DomainError("FeatureScaler::apply: feature dimension mismatch");
  return (features.colwise() - mean).array().colwise() / sd.array();
}

Vector FeatureScaler::apply(const Vector& features) const {
  if (features.size() != mean.size()) throw DomainError("FeatureScaler::apply: feature dimension mismatch");
  return (features - mean).cwiseQuotient(sd);
}

}  // namespace eqrn::nn
