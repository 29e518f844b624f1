#include <cmath>
#include <vector>

#include "doctest.h"
#include "eqrn/error.hpp"
#include "eqrn/rnn/lstm.hpp"

using namespace eqrn;
using namespace eqrn::rnn;

namespace {

double sigm(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Vector flat(const nn::ParamBlocks& blocks) {
  std::vector<double> v;
  for (auto b : blocks) v.insert(v.end(), b.begin(), b.end());
  return Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

TEST_CASE("lstm cell with zero weights keeps a zero state") {
  LstmLayer layer(3, 4);
  layer.w_input.setZero();
  layer.w_hidden.setZero();
  layer.bias.setZero();
  const auto s = lstm_cell_step(layer, Vector::Ones(3), Vector::Zero(4), Vector::Zero(4));
  CHECK(s.h.isZero());
  CHECK(s.c.isZero());
}

TEST_CASE("saturated gates carry the cell state") {
  LstmLayer layer(1, 2);
  layer.w_input.setZero();
  layer.w_hidden.setZero();
  layer.bias.setZero();
  layer.gate_bias(Gate::input).setConstant(50.0);
  layer.gate_bias(Gate::forget).setConstant(50.0);
  layer.gate_bias(Gate::output).setConstant(50.0);
  Vector c(2);
  c << 0.4, -1.2;
  const auto s = lstm_cell_step(layer, Vector::Ones(1), Vector::Zero(2), c);
  CHECK(s.c[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(s.c[1] == doctest::Approx(-1.2).epsilon(1e-12));
  CHECK(s.h[0] == doctest::Approx(std::tanh(0.4)).epsilon(1e-12));
}

TEST_CASE("scalar cell reference values") {
  LstmLayer layer(1, 1);
  layer.w_input.setOnes();
  layer.w_hidden.setZero();
  layer.bias.setZero();
  const auto s = lstm_cell_step(layer, Vector::Ones(1), Vector::Zero(1), Vector::Zero(1));
  CHECK(s.c[0] == doctest::Approx(sigm(1.0) * std::tanh(1.0)).epsilon(1e-14));
  CHECK(std::abs(s.c[0] - 0.5567699411) < 1e-9);
  CHECK(s.h[0] == doctest::Approx(sigm(1.0) * std::tanh(sigm(1.0) * std::tanh(1.0))).epsilon(1e-14));
  CHECK(std::abs(s.h[0] - 0.3696063529) < 1e-9);
}

TEST_CASE("constant input without recurrence gives identical hidden states") {
  Rng rng(1);
  LstmLayer layer = LstmLayer::initialized(2, 3, rng);
  layer.w_hidden.setZero();
  layer.gate_bias(Gate::forget).setConstant(-1e3);  // drop the carried cell
  Vector x(2);
  x << 0.3, -0.8;
  auto s = lstm_cell_step(layer, x, Vector::Zero(3), Vector::Zero(3));
  for (int t = 0; t < 5; ++t) {
    const auto next = lstm_cell_step(layer, x, s.h, s.c);
    CHECK((next.h - s.h).norm() == 0.0);
    s = next;
  }
}

TEST_CASE("stack output is finite and hidden states stay in range") {
  Rng rng(2);
  LstmSpec spec;
  spec.input_dim = 3;
  spec.hidden = {5, 4};
  LstmStack net = LstmStack::initialized(spec, rng);
  for (auto b : net.parameters())
    for (double& v : b) v *= 8.0;
  std::vector<Matrix> steps;
  for (int t = 0; t < 12; ++t) steps.push_back(Matrix::Random(3, 6) * 20.0);
  const Matrix out = net.forward(steps);
  CHECK(out.allFinite());
  LstmStack::Cache cache;
  net.forward(steps, cache);
  for (const auto& layer : cache.layers)
    for (const auto& h : layer.h) CHECK(h.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("window and batch forward agree") {
  Rng rng(3);
  LstmSpec spec;
  spec.input_dim = 2;
  spec.hidden = {4};
  spec.output_activations = {nn::Activation::softplus_shifted, nn::Activation::shape_bounded};
  LstmStack net = LstmStack::initialized(spec, rng);
  SequenceWindow w;
  for (int t = 0; t < 6; ++t) w.steps.push_back(Vector::Random(2));
  const Vector a = net.forward(w);
  const Matrix b = net.forward(to_steps(w));
  CHECK((a - b.col(0)).norm() < 1e-15);
}

TEST_CASE("bptt gradient matches finite differences") {
  Rng rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    LstmSpec spec;
    spec.input_dim = 2;
    spec.hidden = {3, 2};
    spec.output_activations = {nn::Activation::softplus_shifted, nn::Activation::shape_bounded};
    spec.l2 = rep % 2 ? 0.02 : 0.0;
    LstmStack net = LstmStack::initialized(spec, rng);
    std::vector<Matrix> steps;
    for (int t = 0; t < 5; ++t) steps.push_back(Matrix::Random(2, 3));
    const Matrix up = Matrix::Random(2, 3);
    LstmStack::Cache cache;
    net.forward(steps, cache);
    auto grad = net.backward(cache, up);
    const Vector analytic = flat(grad.blocks());
    const auto f = [&] { return net.forward(steps).cwiseProduct(up).sum() + net.l2_penalty(); };
    Index k = 0;
    double worst = 0.0;
    for (auto b : net.parameters())
      for (double& v : b) {
        const double keep = v;
        v = keep + 1e-6;
        const double hi = f();
        v = keep - 1e-6;
        const double lo = f();
        v = keep;
        const double fd = (hi - lo) / 2e-6;
        worst = std::max(worst, std::abs(fd - analytic[k]) / std::max(1.0, std::abs(fd)));
        ++k;
      }
    CHECK(worst < 1e-6);
    for (Index t = 0; t < 5; ++t) {
      Matrix& x = steps[static_cast<std::size_t>(t)];
      const double keep = x(1, 2);
      x(1, 2) = keep + 1e-6;
      const double hi = net.forward(steps).cwiseProduct(up).sum();
      x(1, 2) = keep - 1e-6;
      const double lo = net.forward(steps).cwiseProduct(up).sum();
      x(1, 2) = keep;
      CHECK(grad.inputs[static_cast<std::size_t>(t)](1, 2) == doctest::Approx((hi - lo) / 2e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("zero upstream gives zero gradients without l2") {
  Rng rng(5);
  LstmSpec spec;
  spec.input_dim = 1;
  spec.hidden = {3};
  LstmStack net = LstmStack::initialized(spec, rng);
  std::vector<Matrix> steps(4, Matrix::Random(1, 2));
  LstmStack::Cache cache;
  net.forward(steps, cache);
  auto g = net.backward(cache, Matrix::Zero(1, 2));
  CHECK(flat(g.blocks()).isZero());
}

TEST_CASE("forward and backward are deterministic") {
  LstmSpec spec;
  spec.input_dim = 2;
  spec.hidden = {4};
  Rng r1(6), r2(6);
  LstmStack a = LstmStack::initialized(spec, r1);
  LstmStack b = LstmStack::initialized(spec, r2);
  std::vector<Matrix> steps(3, Matrix::Constant(2, 2, 0.3));
  LstmStack::Cache ca, cb;
  CHECK(a.forward(steps, ca) == b.forward(steps, cb));
  auto ga = a.backward(ca, Matrix::Ones(1, 2));
  auto gb = b.backward(cb, Matrix::Ones(1, 2));
  CHECK(flat(ga.blocks()) == flat(gb.blocks()));
}

TEST_CASE("gather windows") {
  Matrix f(1, 6);
  f << 0, 1, 2, 3, 4, 5;
  const std::vector<Index> targets{2, 5};
  const auto w = gather_windows(f, targets, 2);
  REQUIRE(w.size() == 2);
  CHECK(w[0](0, 0) == 0.0);
  CHECK(w[1](0, 0) == 1.0);
  CHECK(w[0](0, 1) == 3.0);
  CHECK(w[1](0, 1) == 4.0);
  const std::vector<Index> early{1};
  CHECK_THROWS(gather_windows(f, early, 2));
}
