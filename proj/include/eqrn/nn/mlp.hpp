#pragma once

#include <span>
#include <vector>

#include "eqrn/nn/activation.hpp"
#include "eqrn/types.hpp"

namespace eqrn::nn {

using ParamBlocks = std::vector<std::span<double>>;
using ConstParamBlocks = std::vector<std::span<const double>>;

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
  std::vector<Activation> activations;  // one per output unit
  double dropout = 0.0;                 // inverted dropout on the layer output while training

  DenseLayer() = default;
  DenseLayer(Index in_dim, Index out_dim, Activation act);
  DenseLayer(Matrix w, Vector b, std::vector<Activation> acts);

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }
};

struct MlpSpec {
  Index input_dim = 1;
  std::vector<Index> hidden;
  Activation hidden_activation = Activation::tanh;
  std::vector<Activation> output_activations{Activation::identity};
  double l2 = 0.0;
  double dropout = 0.0;
  bool constant_shape = false;
  Index shape_unit = 1;
};

struct MlpGradient {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;
  Matrix input;  // d loss / d input, one column per sample

  ParamBlocks blocks();
};

// Fully connected feed-forward network x -> sigma_l(W_l x + b_l).
class Mlp {
 public:
  using Gradient = MlpGradient;

  struct Cache {
    Matrix input;
    std::vector<Matrix> pre;
    std::vector<Matrix> post;
    std::vector<Matrix> masks;  // empty when dropout inactive
  };

  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers, double l2 = 0.0, bool constant_shape = false, Index shape_unit = 1);

  // Glorot-uniform weights, zero biases. The shape unit of a constant-shape
  // network starts (and stays) with zero incoming weights.
  static Mlp initialized(const MlpSpec& spec, Rng& rng);

  Index input_dim() const;
  Index output_dim() const;

  Vector forward(const Vector& x) const;
  Matrix forward(const Matrix& batch) const;
  // Training forward pass; `dropout_rng` enables dropout masks.
  Matrix forward(const Matrix& batch, Cache& cache, Rng* dropout_rng = nullptr) const;

  // Reverse-mode gradients of sum_j <upstream_j, out_j> + l2 * sum ||W||^2.
  MlpGradient backward(const Cache& cache, const Matrix& upstream) const;
  MlpGradient backward(const Vector& x, const Vector& upstream) const;

  double l2_penalty() const;

  ParamBlocks parameters();
  ConstParamBlocks parameters() const;
  Index parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  double l2() const { return l2_; }
  void set_l2(double l2) { l2_ = l2; }
  bool constant_shape() const { return constant_shape_; }
  Index shape_unit() const { return shape_unit_; }

 private:
  void check() const;

  std::vector<DenseLayer> layers_;
  double l2_ = 0.0;
  bool constant_shape_ = false;
  Index shape_unit_ = 1;
};

// Elementwise activation of a pre-activation block, unit-wise activations per row.
Matrix apply_activations(const Matrix& pre, const std::vector<Activation>& acts);
Matrix activation_derivatives(const Matrix& pre, const std::vector<Activation>& acts);

Matrix glorot_uniform(Index rows, Index cols, Rng& rng);

}  // namespace eqrn::nn
