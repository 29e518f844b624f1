#pragma once

// LSTM layers with exact backpropagation through time. A stack of layers
// consumes a fixed-length window; a dense head maps the last hidden state of
// the top layer to the network output.

#include <vector>

#include "eqrn/nn/mlp.hpp"
#include "eqrn/types.hpp"

namespace eqrn::rnn {

using nn::Activation;
using nn::ConstParamBlocks;
using nn::ParamBlocks;

enum class Gate { input = 0, forget = 1, cell = 2, output = 3 };

// Gate weights are stored stacked in the order input, forget, cell, output:
// rows [k*H, (k+1)*H) belong to gate k.
class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(Index input_dim, Index hidden_dim);

  // Glorot-uniform per gate block, zero biases except forget gate bias 1.
  static LstmLayer initialized(Index input_dim, Index hidden_dim, Rng& rng);

  Index input_dim() const { return w_input.cols(); }
  Index hidden_dim() const { return w_hidden.cols(); }

  auto input_weights(Gate g) { return w_input.middleRows(static_cast<Index>(g) * hidden_dim(), hidden_dim()); }
  auto hidden_weights(Gate g) { return w_hidden.middleRows(static_cast<Index>(g) * hidden_dim(), hidden_dim()); }
  auto gate_bias(Gate g) { return bias.segment(static_cast<Index>(g) * hidden_dim(), hidden_dim()); }

  Matrix w_input;   // 4H x in
  Matrix w_hidden;  // 4H x H
  Vector bias;      // 4H
};

struct LstmState {
  Vector h;
  Vector c;
};

LstmState lstm_cell_step(const LstmLayer& layer, const Vector& x, const Vector& h_prev, const Vector& c_prev);

// Fixed-horizon slice of past inputs, oldest first.
struct SequenceWindow {
  std::vector<Vector> steps;
};

struct LstmSpec {
  Index input_dim = 1;
  std::vector<Index> hidden{32};
  std::vector<Activation> output_activations{Activation::identity};
  double l2 = 0.0;
  bool constant_shape = false;
  Index shape_unit = 1;
};

struct LstmGradient {
  std::vector<Matrix> w_input;
  std::vector<Matrix> w_hidden;
  std::vector<Vector> bias;
  nn::MlpGradient head;
  std::vector<Matrix> inputs;  // d loss / d x_t for every step of the bottom layer

  ParamBlocks blocks();
};

class LstmStack {
 public:
  using Gradient = LstmGradient;

  struct LayerCache {
    std::vector<Matrix> x;      // layer input per step
    std::vector<Matrix> gates;  // activated gates (4H x B) per step
    std::vector<Matrix> c;
    std::vector<Matrix> tanh_c;
    std::vector<Matrix> h;
  };
  struct Cache {
    std::vector<LayerCache> layers;
    nn::Mlp::Cache head;
  };

  LstmStack() = default;
  LstmStack(std::vector<LstmLayer> layers, nn::Mlp head, double l2 = 0.0);

  static LstmStack initialized(const LstmSpec& spec, Rng& rng);

  Index input_dim() const { return layers_.front().input_dim(); }
  Index output_dim() const { return head_.output_dim(); }

  Vector forward(const SequenceWindow& window) const;
  // steps[k] holds step k of every window in the batch (in_dim x B).
  Matrix forward(const std::vector<Matrix>& steps) const;
  Matrix forward(const std::vector<Matrix>& steps, Cache& cache) const;
  // Last-step hidden state of the top layer.
  Matrix last_hidden(const std::vector<Matrix>& steps) const;

  LstmGradient backward(const Cache& cache, const Matrix& upstream) const;
  LstmGradient backward(const SequenceWindow& window, const Vector& upstream) const;

  // l2 * (sum of squared weights of every LSTM matrix and head matrix); biases excluded.
  double l2_penalty() const;

  ParamBlocks parameters();
  ConstParamBlocks parameters() const;

  const std::vector<LstmLayer>& layers() const { return layers_; }
  std::vector<LstmLayer>& layers() { return layers_; }
  const nn::Mlp& head() const { return head_; }
  nn::Mlp& head() { return head_; }
  double l2() const { return l2_; }

 private:
  void run_layer(const LstmLayer& layer, const std::vector<Matrix>& inputs, LayerCache& cache) const;

  std::vector<LstmLayer> layers_;
  nn::Mlp head_;
  double l2_ = 0.0;
};

std::vector<Matrix> to_steps(const SequenceWindow& window);

}  // namespace eqrn::rnn

namespace eqrn::rnn {

// Materialises windows from a step-feature matrix (d x T): steps[k] column b
// is features.col(targets[b] - horizon + k), i.e. times t-s .. t-1.
std::vector<Matrix> gather_windows(const Matrix& step_features, std::span<const Index> targets, Index horizon);

}  // namespace eqrn::rnn
