#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "eqrn/error.hpp"
#include "eqrn/nn/activation.hpp"
#include "eqrn/nn/adam.hpp"
#include "eqrn/nn/mlp.hpp"
#include "eqrn/nn/scaler.hpp"
#include "eqrn/nn/train.hpp"

using namespace eqrn;
using namespace eqrn::nn;

namespace {

Vector flat(const ParamBlocks& blocks) {
  std::vector<double> v;
  for (auto b : blocks) v.insert(v.end(), b.begin(), b.end());
  return Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
}

// One scalar parameter with loss (w - target)^2.
struct Scalar {
  struct Gradient {
    Vector g = Vector::Zero(1);
    ParamBlocks blocks() { return {std::span<double>(g.data(), 1)}; }
  };
  Vector w = Vector::Zero(1);
  ParamBlocks parameters() { return {std::span<double>(w.data(), 1)}; }
};

}  // namespace

TEST_CASE("activations") {
  CHECK(activate(Activation::shape_bounded, 0.0) == doctest::Approx(0.1));
  CHECK(activate(Activation::shape_bounded, 1e6) < 0.7);
  CHECK(activate(Activation::shape_bounded, -1e6) > -0.5);
  CHECK(activate(Activation::softplus_shifted, -1e6) > 0.0);
  CHECK(activate(Activation::tanh, 0.5) == doctest::Approx(std::tanh(0.5)));
  for (Activation a : {Activation::tanh, Activation::sigmoid, Activation::selu, Activation::softplus_shifted,
                       Activation::exponential, Activation::shape_bounded, Activation::identity}) {
    for (double z : {-2.0, -0.3, 0.4, 1.7}) {
      const double h = 1e-6;
      const double fd = (activate(a, z + h) - activate(a, z - h)) / (2 * h);
      CHECK(activate_derivative(a, z) == doctest::Approx(fd).epsilon(1e-7));
      CHECK(activation_inverse(a, activate(a, z)) == doctest::Approx(z).epsilon(1e-8));
    }
    CHECK(activation_from_string(to_string(a)) == a);
  }
  CHECK_THROWS_AS(activation_inverse(Activation::shape_bounded, 0.8), DomainError);
  CHECK_THROWS_AS(activation_inverse(Activation::softplus_shifted, 0.0), DomainError);
  CHECK_THROWS(activation_from_string("relu6"));
}

TEST_CASE("mlp forward reference values") {
  Mlp zero({DenseLayer(Matrix::Zero(3, 2), Vector::Zero(3), {3, Activation::identity})});
  CHECK(zero.forward(Vector(Vector::Constant(2, 4.0))).isZero());

  Matrix w(1, 2);
  w << 1, 1;
  Mlp one({DenseLayer(w, Vector::Zero(1), {Activation::tanh})});
  Vector x(2);
  x << 0.5, 0.5;
  CHECK(one.forward(x)[0] == doctest::Approx(0.7615942).epsilon(1e-7));
}

TEST_CASE("linear layer gradient is the least-squares gradient") {
  Rng rng(1);
  Mlp net({DenseLayer(glorot_uniform(1, 3, rng), Vector::Constant(1, 0.2), {Activation::identity})});
  Matrix x = Matrix::Random(3, 20);
  Matrix y = Matrix::Random(1, 20);
  Mlp::Cache cache;
  const Matrix out = net.forward(x, cache);
  const Matrix resid = out - y;
  // loss = 0.5 * sum resid^2, upstream = resid
  const auto g = net.backward(cache, resid);
  const Matrix expected_w = resid * x.transpose();
  CHECK((g.weights[0] - expected_w).norm() < 1e-12);
  CHECK(g.bias[0][0] == doctest::Approx(resid.sum()).epsilon(1e-12));
}

TEST_CASE("mlp gradient matches finite differences") {
  Rng rng(2);
  MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden = {5, 4, 3};
  spec.output_activations = {Activation::softplus_shifted, Activation::shape_bounded};
  spec.l2 = 0.05;
  for (int rep = 0; rep < 10; ++rep) {
    Mlp net = Mlp::initialized(spec, rng);
    for (auto b : net.parameters())
      for (double& v : b) v += 0.05 * (static_cast<double>(rng() % 1000) / 1000.0 - 0.5);
    const Matrix x = Matrix::Random(4, 3);
    const Matrix up = Matrix::Random(2, 3);
    Mlp::Cache cache;
    net.forward(x, cache);
    auto grad = net.backward(cache, up);
    const Vector analytic = flat(grad.blocks());
    const auto f = [&] { return net.forward(x).cwiseProduct(up).sum() + net.l2_penalty(); };
    Index k = 0;
    double worst = 0.0;
    for (auto b : net.parameters())
      for (double& v : b) {
        const double keep = v;
        v = keep + 1e-6;
        const double a = f();
        v = keep - 1e-6;
        const double c = f();
        v = keep;
        const double fd = (a - c) / 2e-6;
        worst = std::max(worst, std::abs(fd - analytic[k]) / std::max(1.0, std::abs(fd)));
        ++k;
      }
    CHECK(worst < 1e-5);
    // input gradient
    for (Index i = 0; i < 4; ++i) {
      Matrix xp = x, xm = x;
      xp(i, 1) += 1e-6;
      xm(i, 1) -= 1e-6;
      const double fd = (net.forward(xp).cwiseProduct(up).sum() - net.forward(xm).cwiseProduct(up).sum()) / 2e-6;
      CHECK(grad.input(i, 1) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("zero upstream leaves only the l2 term") {
  Rng rng(3);
  MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden = {3};
  spec.l2 = 0.1;
  Mlp net = Mlp::initialized(spec, rng);
  Mlp::Cache cache;
  net.forward(Matrix::Random(2, 4), cache);
  const auto g = net.backward(cache, Matrix::Zero(1, 4));
  for (std::size_t k = 0; k < g.weights.size(); ++k) {
    CHECK((g.weights[k] - 2.0 * 0.1 * net.layers()[k].weights).norm() == doctest::Approx(0.0));
    CHECK(g.bias[k].isZero());
  }
}

TEST_CASE("constant shape output ignores the input") {
  Rng rng(4);
  MlpSpec spec;
  spec.input_dim = 3;
  spec.hidden = {6, 4};
  spec.output_activations = {Activation::softplus_shifted, Activation::shape_bounded};
  spec.constant_shape = true;
  Mlp net = Mlp::initialized(spec, rng);
  const Matrix out = net.forward(Matrix(Matrix::Random(3, 50) * 10.0));
  CHECK(out.row(1).maxCoeff() == out.row(1).minCoeff());
  CHECK(out.row(0).maxCoeff() > out.row(0).minCoeff());
}

TEST_CASE("adam steps") {
  Vector p = Vector::Constant(1, 1.0);
  Vector g = Vector::Constant(1, 1.0);
  ParamBlocks pb{std::span<double>(p.data(), 1)};
  ParamBlocks gb{std::span<double>(g.data(), 1)};
  Adam adam(pb);
  adam.step(pb, gb, 0.1);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-6));
  const double before = p[0];
  adam.step(pb, gb, 0.1);
  CHECK(before - p[0] < 0.1);
  CHECK(before - p[0] > 0.09);

  Vector q = Vector::Constant(2, 3.0);
  Vector z = Vector::Zero(2);
  ParamBlocks qb{std::span<double>(q.data(), 2)};
  ParamBlocks zb{std::span<double>(z.data(), 2)};
  Adam idle(qb);
  for (int i = 0; i < 5; ++i) idle.step(qb, zb, 0.1);
  CHECK(q == Vector::Constant(2, 3.0));
}

TEST_CASE("weight decay shrinks weights without data gradient") {
  Rng rng(5);
  MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden = {4};
  spec.l2 = 0.5;
  Mlp net = Mlp::initialized(spec, rng);
  Adam adam(net.parameters());
  double norm = net.layers()[0].weights.norm();
  for (int i = 0; i < 20; ++i) {
    Mlp::Cache cache;
    net.forward(Matrix::Random(2, 3), cache);
    auto g = net.backward(cache, Matrix::Zero(1, 3));
    adam.step(net.parameters(), g.blocks(), 0.01);
    const double now = net.layers()[0].weights.norm();
    CHECK(now < norm);
    norm = now;
  }
}

TEST_CASE("train loop minimises a quadratic") {
  TrainTask<Scalar> task;
  task.n_train = 10;
  task.initialize = [](Rng&) { return Scalar{}; };
  task.batch_loss_grad = [](const Scalar& s, std::span<const Index>, Scalar::Gradient& g, Rng&) {
    g.g[0] = 2.0 * (s.w[0] - 3.0);
    return (s.w[0] - 3.0) * (s.w[0] - 3.0);
  };
  TrainConfig cfg;
  cfg.max_epochs = 500;
  cfg.batch_size = 10;
  cfg.learning_rate = 0.05;
  const auto r = train_loop(task, cfg);
  CHECK(r.model.w[0] == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("early stopping after patience non-improving epochs") {
  TrainTask<Scalar> task;
  task.n_train = 4;
  task.initialize = [](Rng&) { return Scalar{}; };
  task.batch_loss_grad = [](const Scalar&, std::span<const Index>, Scalar::Gradient& g, Rng&) {
    g.g[0] = 1.0;
    return 1.0;
  };
  int calls = 0;
  task.validation_loss = [&](const Scalar&) { return static_cast<double>(++calls); };
  TrainConfig cfg;
  cfg.max_epochs = 100;
  cfg.patience = 3;
  const auto r = train_loop(task, cfg);
  CHECK(r.report.best_epoch == 0);
  CHECK(r.report.valid_losses.size() == 4);
  CHECK(r.report.stopped_early);
  CHECK(r.model.w[0] == doctest::Approx(-cfg.learning_rate).epsilon(1e-6));
}

TEST_CASE("training is deterministic and diverged restarts are skipped") {
  TrainTask<Scalar> task;
  task.n_train = 7;
  task.initialize = [](Rng& rng) {
    Scalar s;
    s.w[0] = std::uniform_real_distribution<double>(-1, 1)(rng);
    return s;
  };
  task.batch_loss_grad = [](const Scalar& s, std::span<const Index> b, Scalar::Gradient& g, Rng& rng) {
    const double noise = std::normal_distribution<double>(0, 0.1)(rng) * static_cast<double>(b.size());
    g.g[0] = 2.0 * s.w[0] + noise;
    return s.w[0] * s.w[0];
  };
  task.validation_loss = [](const Scalar& s) { return s.w[0] * s.w[0]; };
  TrainConfig cfg;
  cfg.max_epochs = 20;
  cfg.batch_size = 3;
  cfg.n_restarts = 3;
  cfg.seed = 99;
  const auto a = train_loop(task, cfg);
  const auto b = train_loop(task, cfg);
  CHECK(a.model.w[0] == b.model.w[0]);
  CHECK(a.report.train_losses == b.report.train_losses);
  CHECK(a.report.valid_losses == b.report.valid_losses);
  CHECK(epoch_permutation(50, 3, 0, 4) == epoch_permutation(50, 3, 0, 4));
  CHECK(epoch_permutation(50, 3, 0, 4) != epoch_permutation(50, 3, 0, 5));

  TrainTask<Scalar> bad = task;
  bad.batch_loss_grad = [](const Scalar&, std::span<const Index>, Scalar::Gradient&, Rng&) { return NAN; };
  CHECK_THROWS_AS(train_loop(bad, cfg), TrainingError);
}

TEST_CASE("best-so-far validation loss never increases") {
  TrainTask<Scalar> task;
  task.n_train = 5;
  task.initialize = [](Rng&) { return Scalar{}; };
  task.batch_loss_grad = [](const Scalar& s, std::span<const Index>, Scalar::Gradient& g, Rng&) {
    g.g[0] = 2.0 * (s.w[0] - 1.0);
    return (s.w[0] - 1.0) * (s.w[0] - 1.0);
  };
  task.validation_loss = [](const Scalar& s) { return std::abs(s.w[0] - 0.7) + 0.01 * std::sin(30 * s.w[0]); };
  TrainConfig cfg;
  cfg.max_epochs = 60;
  cfg.learning_rate = 0.05;
  const auto r = train_loop(task, cfg);
  double best = INFINITY;
  for (double v : r.report.valid_losses) best = std::min(best, v);
  CHECK(r.report.best_valid_loss == best);
  CHECK(r.report.valid_losses[static_cast<std::size_t>(r.report.best_epoch)] == best);
}

TEST_CASE("feature scaler") {
  Matrix x(2, 4);
  x << 1, 2, 3, 4, 5, 5, 5, 5;
  const auto s = FeatureScaler::fit(x);
  const Matrix z = s.apply(x);
  CHECK(z.row(0).mean() == doctest::Approx(0.0));
  CHECK(z.row(1).isZero());
  CHECK(std::isfinite(z.sum()));
  const auto id = FeatureScaler::identity(2);
  CHECK(id.apply(x) == x);
}
