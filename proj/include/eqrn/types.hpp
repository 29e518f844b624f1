#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace eqrn {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Mixes a base seed with stream identifiers so that restarts, folds and
// epochs get independent but reproducible generators.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Covariates are stored one column per observation (p x n).
struct Dataset {
  Matrix x;
  Vector y;

  Index size() const { return y.size(); }
  Index dim() const { return x.rows(); }
};

// A time series of covariates x_t (p x T) and responses y_t.
struct Series {
  Matrix x;
  Vector y;

  Index length() const { return y.size(); }
  Index dim() const { return x.rows(); }
};

}  // namespace eqrn
