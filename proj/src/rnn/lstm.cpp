#include "eqrn/rnn/lstm.hpp"

#include <cmath>
#include <string>

#include "eqrn/error.hpp"

namespace eqrn::rnn {

namespace {

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> span_of(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> span_of(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> span_of(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

// Activated gates from the stacked pre-activation.
void activate_gates(Matrix& z, Index hidden) {
  z.topRows(2 * hidden) = sigmoid(z.topRows(2 * hidden));
  z.middleRows(2 * hidden, hidden) = z.middleRows(2 * hidden, hidden).array().tanh().matrix();
  z.bottomRows(hidden) = sigmoid(z.bottomRows(hidden));
}

}  // namespace

LstmLayer::LstmLayer(Index input_dim, Index hidden_dim)
    : w_input(Matrix::Zero(4 * hidden_dim, input_dim)),
      w_hidden(Matrix::Zero(4 * hidden_dim, hidden_dim)),
      bias(Vector::Zero(4 * hidden_dim)) {}

LstmLayer LstmLayer::initialized(Index input_dim, Index hidden_dim, Rng& rng) {
  LstmLayer layer(input_dim, hidden_dim);
  for (Gate g : {Gate::input, Gate::forget, Gate::cell, Gate::output}) {
    layer.input_weights(g) = nn::glorot_uniform(hidden_dim, input_dim, rng);
    layer.hidden_weights(g) = nn::glorot_uniform(hidden_dim, hidden_dim, rng);
  }
  layer.gate_bias(Gate::forget).setOnes();
  return layer;
}

LstmState lstm_cell_step(const LstmLayer& layer, const Vector& x, const Vector& h_prev, const Vector& c_prev) {
  const Index hidden = layer.hidden_dim();
  if (x.size() != layer.input_dim() || h_prev.size() != hidden || c_prev.size() != hidden) {
    throw DomainError("lstm_cell_step: dimension mismatch");
  }
  Matrix z = layer.w_input * x + layer.w_hidden * h_prev + layer.bias;
  activate_gates(z, hidden);
  const auto i = z.col(0).segment(0, hidden).array();
  const auto f = z.col(0).segment(hidden, hidden).array();
  const auto g = z.col(0).segment(2 * hidden, hidden).array();
  const auto o = z.col(0).segment(3 * hidden, hidden).array();
  LstmState next;
  next.c = (f * c_prev.array() + i * g).matrix();
  next.h = (o * next.c.array().tanh()).matrix();
  return next;
}

ParamBlocks LstmGradient::blocks() {
  ParamBlocks out;
  for (std::size_t l = 0; l < w_input.size(); ++l) {
    out.push_back(span_of(w_input[l]));
    out.push_back(span_of(w_hidden[l]));
    out.push_back(span_of(bias[l]));
  }
  for (auto b : head.blocks()) out.push_back(b);
  return out;
}

LstmStack::LstmStack(std::vector<LstmLayer> layers, nn::Mlp head, double l2)
    : layers_(std::move(layers)), head_(std::move(head)), l2_(l2) {
  if (layers_.empty()) throw DomainError("LstmStack: at least one LSTM layer required");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LstmLayer& layer = layers_[l];
    const Index hidden = layer.hidden_dim();
    if (layer.w_input.rows() != 4 * hidden || layer.w_hidden.rows() != 4 * hidden || layer.bias.size() != 4 * hidden) {
      throw DomainError("LstmStack: layer " + std::to_string(l) + " has inconsistent gate dimensions");
    }
    if (l > 0 && layer.input_dim() != layers_[l - 1].hidden_dim()) {
      throw DomainError("LstmStack: layer " + std::to_string(l) + " input does not match previous hidden size");
    }
  }
  if (head_.input_dim() != layers_.back().hidden_dim()) {
    throw DomainError("LstmStack: head input does not match the last hidden size");
  }
  if (l2_ < 0.0) throw DomainError("LstmStack: L2 penalty must be non-negative");
  head_.set_l2(l2_);
}

LstmStack LstmStack::initialized(const LstmSpec& spec, Rng& rng) {
  if (spec.hidden.empty()) throw DomainError("LstmStack: at least one LSTM layer required");
  std::vector<LstmLayer> layers;
  Index in = spec.input_dim;
  for (Index width : spec.hidden) {
    layers.push_back(LstmLayer::initialized(in, width, rng));
    in = width;
  }
  nn::MlpSpec head_spec;
  head_spec.input_dim = in;
  head_spec.output_activations = spec.output_activations;
  head_spec.l2 = spec.l2;
  head_spec.constant_shape = spec.constant_shape;
  head_spec.shape_unit = spec.shape_unit;
  nn::Mlp head = nn::Mlp::initialized(head_spec, rng);
  return LstmStack(std::move(layers), std::move(head), spec.l2);
}

std::vector<Matrix> to_steps(const SequenceWindow& window) {
  std::vector<Matrix> steps;
  steps.reserve(window.steps.size());
  for (const Vector& v : window.steps) steps.emplace_back(v);
  return steps;
}

void LstmStack::run_layer(const LstmLayer& layer, const std::vector<Matrix>& inputs, LayerCache& cache) const {
  const Index hidden = layer.hidden_dim();
  const std::size_t steps = inputs.size();
  const Index batch = inputs.front().cols();
  cache.x = inputs;
  cache.gates.resize(steps);
  cache.c.resize(steps);
  cache.tanh_c.resize(steps);
  cache.h.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    if (inputs[t].rows() != layer.input_dim() || inputs[t].cols() != batch) {
      throw DomainError("LstmStack: step " + std::to_string(t) + " has the wrong shape");
    }
    Matrix z = layer.w_input * inputs[t];
    if (t > 0) z.noalias() += layer.w_hidden * cache.h[t - 1];
    z.colwise() += layer.bias;
    activate_gates(z, hidden);
    const auto i = z.topRows(hidden).array();
    const auto f = z.middleRows(hidden, hidden).array();
    const auto g = z.middleRows(2 * hidden, hidden).array();
    const auto o = z.bottomRows(hidden).array();
    if (t > 0) {
      cache.c[t] = (f * cache.c[t - 1].array() + i * g).matrix();
    } else {
      cache.c[t] = (i * g).matrix();
    }
    cache.tanh_c[t] = cache.c[t].array().tanh().matrix();
    cache.h[t] = (o * cache.tanh_c[t].array()).matrix();
    cache.gates[t] = std::move(z);
  }
}

Matrix LstmStack::forward(const std::vector<Matrix>& steps, Cache& cache) const {
  if (steps.empty()) throw DomainError("LstmStack::forward: empty window");
  cache.layers.resize(layers_.size());
  const std::vector<Matrix>* inputs = &steps;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    run_layer(layers_[l], *inputs, cache.layers[l]);
    inputs = &cache.layers[l].h;
  }
  return head_.forward(cache.layers.back().h.back(), cache.head);
}

Matrix LstmStack::last_hidden(const std::vector<Matrix>& steps) const {
  Cache cache;
  forward(steps, cache);
  return cache.layers.back().h.back();
}

Matrix LstmStack::forward(const std::vector<Matrix>& steps) const {
  if (steps.empty()) throw DomainError("LstmStack::forward: empty window");
  // Inference path without caching the full history.
  std::vector<Matrix> current = steps;
  for (const LstmLayer& layer : layers_) {
    const Index hidden = layer.hidden_dim();
    const Index batch = current.front().cols();
    Matrix h = Matrix::Zero(hidden, batch);
    Matrix c = Matrix::Zero(hidden, batch);
    for (Matrix& x : current) {
      if (x.rows() != layer.input_dim() || x.cols() != batch) throw DomainError("LstmStack: step has the wrong shape");
      Matrix z = layer.w_input * x;
      z.noalias() += layer.w_hidden * h;
      z.colwise() += layer.bias;
      activate_gates(z, hidden);
      c = (z.middleRows(hidden, hidden).array() * c.array() +
           z.topRows(hidden).array() * z.middleRows(2 * hidden, hidden).array())
              .matrix();
      h = (z.bottomRows(hidden).array() * c.array().tanh()).matrix();
      x = h;
    }
  }
  return head_.forward(current.back());
}

Vector LstmStack::forward(const SequenceWindow& window) const { return forward(to_steps(window)).col(0); }

LstmGradient LstmStack::backward(const Cache& cache, const Matrix& upstream) const {
  LstmGradient grad;
  grad.head = head_.backward(cache.head, upstream);
  const std::size_t n_layers = layers_.size();
  grad.w_input.resize(n_layers);
  grad.w_hidden.resize(n_layers);
  grad.bias.resize(n_layers);

  // Gradient w.r.t. each step's output h_t of the current layer.
  const std::size_t steps = cache.layers.front().x.size();
  const Index batch = upstream.cols();
  std::vector<Matrix> dh_above(steps);
  for (std::size_t t = 0; t + 1 < steps; ++t) dh_above[t] = Matrix::Zero(layers_.back().hidden_dim(), batch);
  dh_above[steps - 1] = grad.head.input;

  for (std::size_t l = n_layers; l-- > 0;) {
    const LstmLayer& layer = layers_[l];
    const LayerCache& lc = cache.layers[l];
    const Index hidden = layer.hidden_dim();
    Matrix dw_in = Matrix::Zero(layer.w_input.rows(), layer.w_input.cols());
    Matrix dw_h = Matrix::Zero(layer.w_hidden.rows(), layer.w_hidden.cols());
    Vector db = Vector::Zero(layer.bias.size());
    Matrix dh_next = Matrix::Zero(hidden, batch);
    Matrix dc_next = Matrix::Zero(hidden, batch);
    Matrix dz(4 * hidden, batch);
    std::vector<Matrix> dx(steps);

    for (std::size_t t = steps; t-- > 0;) {
      const Matrix& gates = lc.gates[t];
      const auto i = gates.topRows(hidden).array();
      const auto f = gates.middleRows(hidden, hidden).array();
      const auto g = gates.middleRows(2 * hidden, hidden).array();
      const auto o = gates.bottomRows(hidden).array();
      const auto tc = lc.tanh_c[t].array();

      const Matrix dh = dh_above[t] + dh_next;
      const Matrix dc = (dh.array() * o * (1.0 - tc.square()) + dc_next.array()).matrix();
      dz.topRows(hidden) = (dc.array() * g * i * (1.0 - i)).matrix();
      if (t > 0) {
        dz.middleRows(hidden, hidden) = (dc.array() * lc.c[t - 1].array() * f * (1.0 - f)).matrix();
      } else {
        dz.middleRows(hidden, hidden).setZero();
      }
      dz.middleRows(2 * hidden, hidden) = (dc.array() * i * (1.0 - g.square())).matrix();
      dz.bottomRows(hidden) = (dh.array() * tc * o * (1.0 - o)).matrix();
      dc_next = (dc.array() * f).matrix();

      dw_in.noalias() += dz * lc.x[t].transpose();
      if (t > 0) dw_h.noalias() += dz * lc.h[t - 1].transpose();
      db += dz.rowwise().sum();
      dx[t] = layer.w_input.transpose() * dz;
      dh_next = layer.w_hidden.transpose() * dz;
    }
    if (l2_ > 0.0) {
      dw_in += 2.0 * l2_ * layer.w_input;
      dw_h += 2.0 * l2_ * layer.w_hidden;
    }
    grad.w_input[l] = std::move(dw_in);
    grad.w_hidden[l] = std::move(dw_h);
    grad.bias[l] = std::move(db);
    dh_above = std::move(dx);
  }
  grad.inputs = std::move(dh_above);
  return grad;
}

LstmGradient LstmStack::backward(const SequenceWindow& window, const Vector& upstream) const {
  Cache cache;
  forward(to_steps(window), cache);
  return backward(cache, Matrix(upstream));
}

double LstmStack::l2_penalty() const {
  if (l2_ == 0.0) return 0.0;
  double total = 0.0;
  for (const LstmLayer& layer : layers_) total += layer.w_input.squaredNorm() + layer.w_hidden.squaredNorm();
  return l2_ * total + head_.l2_penalty();
}

ParamBlocks LstmStack::parameters() {
  ParamBlocks out;
  for (LstmLayer& layer : layers_) {
    out.push_back(span_of(layer.w_input));
    out.push_back(span_of(layer.w_hidden));
    out.push_back(span_of(layer.bias));
  }
  for (auto b : head_.parameters()) out.push_back(b);
  return out;
}

ConstParamBlocks LstmStack::parameters() const {
  ConstParamBlocks out;
  for (const LstmLayer& layer : layers_) {
    out.push_back(span_of(layer.w_input));
    out.push_back(span_of(layer.w_hidden));
    out.push_back(span_of(layer.bias));
  }
  for (auto b : head_.parameters()) out.push_back(b);
  return out;
}

}  // namespace eqrn::rnn

namespace eqrn::rnn {

std::vector<Matrix> gather_windows(const Matrix& step_features, std::span<const Index> targets, Index horizon) {
  if (horizon < 1) throw DomainError("gather_windows: horizon must be >= 1");
  const auto batch = static_cast<Index>(targets.size());
  std::vector<Matrix> steps(static_cast<std::size_t>(horizon), Matrix(step_features.rows(), batch));
  for (Index b = 0; b < batch; ++b) {
    const Index t = targets[static_cast<std::size_t>(b)];
    if (t < horizon || t > step_features.cols()) throw DomainError("gather_windows: target without full history");
    for (Index k = 0; k < horizon; ++k) steps[static_cast<std::size_t>(k)].col(b) = step_features.col(t - horizon + k);
  }
  return steps;
}

}  // namespace eqrn::rnn
