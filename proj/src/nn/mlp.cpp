#include "eqrn/nn/mlp.hpp"

#include <cmath>
#include <string>

#include "eqrn/error.hpp"

namespace eqrn::nn {

namespace {

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> span_of(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> span_of(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> span_of(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

DenseLayer::DenseLayer(Index in_dim, Index out_dim, Activation act)
    : weights(Matrix::Zero(out_dim, in_dim)),
      bias(Vector::Zero(out_dim)),
      activations(static_cast<std::size_t>(out_dim), act) {}

DenseLayer::DenseLayer(Matrix w, Vector b, std::vector<Activation> acts)
    : weights(std::move(w)), bias(std::move(b)), activations(std::move(acts)) {
  if (bias.size() != weights.rows() || static_cast<Index>(activations.size()) != weights.rows()) {
    throw DomainError("DenseLayer: bias/activation count must equal the number of output units");
  }
}

Matrix glorot_uniform(Index rows, Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) w(i, j) = dist(rng);
  return w;
}

Matrix apply_activations(const Matrix& pre, const std::vector<Activation>& acts) {
  Matrix out(pre.rows(), pre.cols());
  for (Index i = 0; i < pre.rows(); ++i) {
    const Activation a = acts[static_cast<std::size_t>(i)];
    switch (a) {
      case Activation::identity: out.row(i) = pre.row(i); break;
      case Activation::tanh: out.row(i) = pre.row(i).array().tanh(); break;
      default:
        for (Index j = 0; j < pre.cols(); ++j) out(i, j) = activate(a, pre(i, j));
    }
  }
  return out;
}

Matrix activation_derivatives(const Matrix& pre, const std::vector<Activation>& acts) {
  Matrix out(pre.rows(), pre.cols());
  for (Index i = 0; i < pre.rows(); ++i) {
    const Activation a = acts[static_cast<std::size_t>(i)];
    switch (a) {
      case Activation::identity: out.row(i).setOnes(); break;
      case Activation::tanh: out.row(i) = 1.0 - pre.row(i).array().tanh().square(); break;
      default:
        for (Index j = 0; j < pre.cols(); ++j) out(i, j) = activate_derivative(a, pre(i, j));
    }
  }
  return out;
}

ParamBlocks MlpGradient::blocks() {
  ParamBlocks out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(span_of(weights[l]));
    out.push_back(span_of(bias[l]));
  }
  return out;
}

Mlp::Mlp(std::vector<DenseLayer> layers, double l2, bool constant_shape, Index shape_unit)
    : layers_(std::move(layers)), l2_(l2), constant_shape_(constant_shape), shape_unit_(shape_unit) {
  check();
  if (constant_shape_) layers_.back().weights.row(shape_unit_).setZero();
}

void Mlp::check() const {
  if (layers_.empty()) throw DomainError("Mlp: at least one layer required");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.bias.size() != layer.out_dim() || static_cast<Index>(layer.activations.size()) != layer.out_dim()) {
      throw DomainError("Mlp: layer " + std::to_string(l) + " has inconsistent output dimensions");
    }
    if (l > 0 && layer.in_dim() != layers_[l - 1].out_dim()) {
      throw DomainError("Mlp: layer " + std::to_string(l) + " input dimension does not match previous layer");
    }
  }
  if (l2_ < 0.0) throw DomainError("Mlp: L2 penalty must be non-negative");
  if (constant_shape_ && (shape_unit_ < 0 || shape_unit_ >= layers_.back().out_dim())) {
    throw DomainError("Mlp: constant-shape unit outside the output layer");
  }
}

Mlp Mlp::initialized(const MlpSpec& spec, Rng& rng) {
  std::vector<DenseLayer> layers;
  Index in = spec.input_dim;
  for (Index width : spec.hidden) {
    DenseLayer layer(in, width, spec.hidden_activation);
    layer.weights = glorot_uniform(width, in, rng);
    layer.dropout = spec.dropout;
    layers.push_back(std::move(layer));
    in = width;
  }
  const auto out = static_cast<Index>(spec.output_activations.size());
  DenseLayer head(glorot_uniform(out, in, rng), Vector::Zero(out), spec.output_activations);
  layers.push_back(std::move(head));
  return Mlp(std::move(layers), spec.l2, spec.constant_shape, spec.shape_unit);
}

Index Mlp::input_dim() const { return layers_.front().in_dim(); }
Index Mlp::output_dim() const { return layers_.back().out_dim(); }

Vector Mlp::forward(const Vector& x) const {
  const Matrix out = forward(Matrix(x));
  return out.col(0);
}

Matrix Mlp::forward(const Matrix& batch) const {
  if (batch.rows() != input_dim()) {
    throw DomainError("Mlp::forward: input has " + std::to_string(batch.rows()) + " features, expected " +
                      std::to_string(input_dim()));
  }
  Matrix a = batch;
  for (const DenseLayer& layer : layers_) {
    Matrix pre = layer.weights * a;
    pre.colwise() += layer.bias;
    a = apply_activations(pre, layer.activations);
  }
  return a;
}

Matrix Mlp::forward(const Matrix& batch, Cache& cache, Rng* dropout_rng) const {
  if (batch.rows() != input_dim()) {
    throw DomainError("Mlp::forward: input has " + std::to_string(batch.rows()) + " features, expected " +
                      std::to_string(input_dim()));
  }
  cache.input = batch;
  cache.pre.resize(layers_.size());
  cache.post.resize(layers_.size());
  cache.masks.assign(layers_.size(), Matrix());
  const Matrix* a = &cache.input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    cache.pre[l] = layer.weights * *a;
    cache.pre[l].colwise() += layer.bias;
    cache.post[l] = apply_activations(cache.pre[l], layer.activations);
    const bool hidden = l + 1 < layers_.size();
    if (dropout_rng && hidden && layer.dropout > 0.0) {
      const double keep = 1.0 - layer.dropout;
      std::bernoulli_distribution draw(keep);
      Matrix mask(cache.post[l].rows(), cache.post[l].cols());
      for (Index j = 0; j < mask.cols(); ++j)
        for (Index i = 0; i < mask.rows(); ++i) mask(i, j) = draw(*dropout_rng) ? 1.0 / keep : 0.0;
      cache.post[l].array() *= mask.array();
      cache.masks[l] = std::move(mask);
    }
    a = &cache.post[l];
  }
  return cache.post.back();
}

MlpGradient Mlp::backward(const Cache& cache, const Matrix& upstream) const {
  if (upstream.rows() != output_dim() || upstream.cols() != cache.input.cols()) {
    throw DomainError("Mlp::backward: upstream gradient shape does not match the cached forward pass");
  }
  MlpGradient g;
  g.weights.resize(layers_.size());
  g.bias.resize(layers_.size());
  Matrix delta = upstream;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const DenseLayer& layer = layers_[k];
    if (cache.masks[k].size() > 0) delta.array() *= cache.masks[k].array();
    delta.array() *= activation_derivatives(cache.pre[k], layer.activations).array();
    const Matrix& below = k == 0 ? cache.input : cache.post[k - 1];
    g.weights[k] = delta * below.transpose();
    g.bias[k] = delta.rowwise().sum();
    if (l2_ > 0.0) g.weights[k] += 2.0 * l2_ * layer.weights;
    delta = layer.weights.transpose() * delta;
  }
  g.input = std::move(delta);
  if (constant_shape_) g.weights.back().row(shape_unit_).setZero();
  return g;
}

MlpGradient Mlp::backward(const Vector& x, const Vector& upstream) const {
  Cache cache;
  forward(Matrix(x), cache);
  return backward(cache, Matrix(upstream));
}

double Mlp::l2_penalty() const {
  if (l2_ == 0.0) return 0.0;
  double total = 0.0;
  for (const DenseLayer& layer : layers_) total += layer.weights.squaredNorm();
  return l2_ * total;
}

ParamBlocks Mlp::parameters() {
  ParamBlocks out;
  for (DenseLayer& layer : layers_) {
    out.push_back(span_of(layer.weights));
    out.push_back(span_of(layer.bias));
  }
  return out;
}

ConstParamBlocks Mlp::parameters() const {
  ConstParamBlocks out;
  for (const DenseLayer& layer : layers_) {
    out.push_back(span_of(layer.weights));
    out.push_back(span_of(layer.bias));
  }
  return out;
}

Index Mlp::parameter_count() const {
  Index n = 0;
  for (const DenseLayer& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

}  // namespace eqrn::nn
