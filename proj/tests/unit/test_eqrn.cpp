#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "eqrn/eqrn.hpp"
#include "eqrn/error.hpp"
#include "eqrn/qreg.hpp"
#include "eqrn/sim.hpp"

using namespace eqrn;

namespace {

// Covariate-independent tail: q = 0, exceedances GPD(sigma, xi) with probability 0.2.
Dataset gpd_above_zero(Index n, double sigma, double xi, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Dataset d{Matrix::Zero(2, n), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    d.x(0, i) = 2 * u01(rng) - 1;
    d.x(1, i) = 2 * u01(rng) - 1;
    if (u01(rng) < 0.2) {
      const double u = 1.0 - u01(rng);
      d.y[i] = sigma / xi * std::expm1(-xi * std::log(u));
    } else {
      d.y[i] = -u01(rng);
    }
  }
  return d;
}

EqrnOptions mlp_options() {
  EqrnOptions o;
  o.hyper.hidden = {8, 4};
  o.hyper.constant_shape = true;
  o.train.max_epochs = 100;
  o.train.batch_size = 64;
  o.train.learning_rate = 2e-3;
  o.train.patience = 10;
  return o;
}

}  // namespace

TEST_CASE("exceedance extraction") {
  Vector y(3), q(3);
  y << 1, 5, 3;
  q << 2, 2, 2;
  const auto e = extract_exceedances(y, q);
  CHECK(e.index == std::vector<Index>{1, 2});
  CHECK(e.z == std::vector<double>{3.0, 1.0});
  q << 2, NAN, 2;
  CHECK(extract_exceedances(y, q).index == std::vector<Index>{2});
  CHECK_THROWS_AS(extract_exceedances(Vector::Zero(3), Vector::Ones(3)), DataError);

  const Dataset d = sim::gen_iid({1, 10, 5000, 2});
  Vector oracle(d.size());
  for (Index i = 0; i < d.size(); ++i) oracle[i] = sim::true_quantile_iid(1, d.x.col(i), 0.8);
  const auto ex = extract_exceedances(d.y, oracle);
  CHECK(std::abs(static_cast<double>(ex.index.size()) - 1000.0) < 4 * std::sqrt(5000 * 0.16));
}

TEST_CASE("feature augmentation") {
  Vector x(2);
  x << 0.1, 0.2;
  const Vector a = augment_features_iid(x, 1.5);
  CHECK(a.size() == 3);
  CHECK(a[2] == 1.5);
  CHECK(a[0] == 0.1);

  rnn::SequenceWindow w;
  w.steps = {Vector::Constant(2, 1.0), Vector::Constant(2, 2.0)};
  const std::vector<double> q{7.0, 8.0};
  const auto aw = augment_features_seq(w, q);
  REQUIRE(aw.steps.size() == 2);
  CHECK(aw.steps[0].size() == 3);
  CHECK(aw.steps[1][2] == 8.0);

  Series s{Matrix::Constant(1, 4, 3.0), Vector::LinSpaced(4, 0, 3)};
  const Matrix f = augment_step_features(s, Vector::Constant(4, 9.0));
  CHECK(f.rows() == 3);
  CHECK(f(1, 2) == 2.0);
  CHECK(f(2, 3) == 9.0);
}

TEST_CASE("sequential targets need a finite window") {
  Vector q = Vector::Constant(12, 1.0);
  q.head(3).setConstant(NAN);
  const auto t = sequential_targets(q, 4);
  REQUIRE(!t.empty());
  CHECK(t.front() == 7);
  CHECK(t.back() == 11);
}

TEST_CASE("eqrn recovers a covariate-independent gpd tail") {
  const Dataset d = gpd_above_zero(6000, 1.0, 0.2, 3);
  const auto fit = eqrn_fit_iid(d, Vector::Zero(d.size()), 0.8, mlp_options());
  const Matrix grid = Matrix::Random(2, 50);
  const auto tails = fit.model.tails(grid, Vector::Zero(50));
  for (const auto& t : tails) {
    CHECK(std::abs(t.nu - 1.2) < 0.2);
    CHECK(std::abs(t.xi - 0.2) < 0.12);
    CHECK(t.xi == tails.front().xi);
    CHECK(t.sigma == doctest::Approx(t.nu / (1 + t.xi)));
  }
  CHECK(fit.valid_deviance == doctest::Approx(mean_deviance(
                                  [&] {
                                    std::vector<double> z;
                                    for (Index i : fit.valid_index) z.push_back(d.y[i]);
                                    return z;
                                  }(),
                                  fit.model.tails(d.x(Eigen::all, fit.valid_index), Vector::Zero(static_cast<Index>(fit.valid_index.size()))))));
}

TEST_CASE("tail outputs stay in range for arbitrary weights") {
  const Dataset d = gpd_above_zero(1500, 1.0, 0.2, 4);
  EqrnOptions o = mlp_options();
  o.hyper.constant_shape = false;
  o.train.max_epochs = 3;
  auto fit = eqrn_fit_iid(d, Vector::Zero(d.size()), 0.8, o);
  auto& net = std::get<nn::Mlp>(fit.model.network);
  Rng rng(5);
  std::normal_distribution<double> n(0.0, 30.0);
  for (auto b : net.parameters())
    for (double& v : b) v = n(rng);
  const auto tails = fit.model.tails(Matrix::Random(2, 400) * 5.0, Vector::Random(400));
  for (const auto& t : tails) {
    CHECK(t.nu > 0.0);
    CHECK(t.xi > -0.5);
    CHECK(t.xi < 0.7);
    double prev = -INFINITY;
    for (double tau : {0.81, 0.9, 0.99, 0.999, 0.99999}) {
      const double qv = evt::gpd_quantile_extrapolate(t.spec(0.8), tau);
      CHECK(qv >= prev);
      prev = qv;
    }
  }
}

TEST_CASE("point forecasts") {
  const GpdTailFit tail{2.0, 1.2, 0.2, 1.0};
  PredictOptions o;
  o.levels = {0.8 + 1e-9, 0.99, 0.999};
  const auto r = eqrn_predict(tail, 0.8, o);
  REQUIRE(r.quantiles.size() == 3);
  CHECK(r.quantiles[0].second == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(r.quantiles[2].second > r.quantiles[1].second);
  CHECK(!r.exceed_prob);

  PredictOptions p;
  p.levels = {0.995};
  p.threshold = evt::gpd_quantile_extrapolate(tail.spec(0.8), 0.995);
  p.baseline_prob = 0.005;
  const auto s = eqrn_predict(tail, 0.8, p);
  REQUIRE(s.exceed_prob);
  CHECK(std::abs(*s.exceed_prob - 0.005) < 1e-10);
  CHECK(*s.prob_ratio == doctest::Approx(1.0));
  CHECK(!s.warning);

  PredictOptions bad;
  bad.levels = {0.7};
  CHECK_THROWS_AS(eqrn_predict(tail, 0.8, bad), DomainError);
}

TEST_CASE("probability ratio") {
  CHECK(prob_ratio(0.3, 0.3).ratio == doctest::Approx(1.0));
  CHECK(prob_ratio(0.01, 1.0 / 36500.0).ratio == doctest::Approx(365.0));
  CHECK(prob_ratio(0.01, 1.0 / 36500.0).warning);
  CHECK(!prob_ratio(0.0999, 0.001, 100.0).warning);
  CHECK(prob_ratio(0.1, 0.001, 100.0).warning);
  CHECK_THROWS_AS(prob_ratio(0.1, 0.0), DomainError);
}

TEST_CASE("semi-conditional and unconditional baselines") {
  const Dataset d = gpd_above_zero(20000, 1.0, 0.1, 6);
  const auto semi = semi_conditional_fit(d.y, Vector::Zero(d.size()), 0.8);
  const auto unc = unconditional_fit(d.y, 0.8);
  REQUIRE(unc.threshold);
  CHECK(std::abs(*unc.threshold) < 0.05);
  for (double tau : {0.99, 0.999}) {
    const double a = evt::gpd_quantile_extrapolate(semi.tail(0.0).spec(0.8), tau);
    const double b = evt::gpd_quantile_extrapolate(unc.tail().spec(0.8), tau);
    CHECK(std::abs(a - b) / a < 0.1);
  }
  CHECK_THROWS_AS(semi_conditional_fit(Vector::Zero(10), Vector::Ones(10), 0.8), DataError);
}

TEST_CASE("constant network reproduces the semi-conditional deviance") {
  const Dataset d = gpd_above_zero(4000, 1.5, 0.15, 7);
  const Vector q = Vector::Zero(d.size());
  const auto semi = semi_conditional_fit(d.y, q, 0.8);
  EqrnOptions o = mlp_options();
  o.train.max_epochs = 2;
  auto fit = eqrn_fit_iid(d, q, 0.8, o);
  auto& net = std::get<nn::Mlp>(fit.model.network);
  for (auto& layer : net.layers()) layer.weights.setZero();
  auto& head = net.layers().back();
  const auto ortho = evt::to_orthogonal(semi.gpd);
  head.bias[0] = nn::activation_inverse(nn::Activation::softplus_shifted, ortho.nu / fit.model.response_scale);
  head.bias[1] = nn::activation_inverse(nn::Activation::shape_bounded, ortho.xi);
  const auto ex = extract_exceedances(d.y, q);
  Matrix xe(2, static_cast<Index>(ex.index.size()));
  for (std::size_t k = 0; k < ex.index.size(); ++k) xe.col(static_cast<Index>(k)) = d.x.col(ex.index[k]);
  const auto tails = fit.model.tails(xe, Vector::Zero(xe.cols()));
  CHECK(mean_deviance(ex.z, tails) == doctest::Approx(evt::gpd_mean_deviance(ex.z, semi.gpd)).epsilon(1e-9));
}

TEST_CASE("sequential eqrn") {
  const auto sample = sim::gen_ts({1500, 100, 8});
  Vector q(1500);
  for (Index t = 0; t < 1500; ++t) q[t] = sim::true_quantile_ts(sample.sigma[t], 0.8);
  q.head(10).setConstant(NAN);
  EqrnOptions o;
  o.hyper.hidden = {6};
  o.train.max_epochs = 5;
  o.train.batch_size = 32;
  const auto fit = eqrn_fit_seq(sample.series, q, 0.8, 5, o);
  CHECK(fit.model.kind == ModelKind::sequential);
  CHECK(fit.model.horizon == 5);
  for (Index t : fit.train_index) CHECK(t >= 15);
  CHECK(fit.valid_index.front() > fit.train_index.back());
  const std::vector<Index> targets{100, 200, 1499};
  const auto tails = fit.model.tails(sample.series, q, targets);
  CHECK(tails.size() == 3);
  CHECK(tails[0].intermediate_quantile == q[100]);
  const std::vector<Index> early{12};
  CHECK_THROWS_AS(fit.model.tails(sample.series, q, early), DomainError);
  CHECK_THROWS_AS(fit.model.tails(sample.series.x, q), DomainError);

  // i.i.d. noise fed as a sequence is still fitted, with a finite validation deviance.
  Series noise{Matrix::Random(1, 1500), sample.series.y};
  Rng rng(1);
  std::shuffle(noise.y.data(), noise.y.data() + noise.y.size(), rng);
  const double u = [&] {
    std::vector<double> v(noise.y.data(), noise.y.data() + noise.y.size());
    return qreg::empirical_quantile(v, 0.8);
  }();
  const auto nf = eqrn_fit_seq(noise, Vector::Constant(1500, u), 0.8, 5, o);
  CHECK(std::isfinite(nf.valid_deviance));
}

TEST_CASE("grid search keeps the best cell") {
  const Dataset d = gpd_above_zero(3000, 1.0, 0.2, 9);
  EqrnOptions o = mlp_options();
  o.train.max_epochs = 10;
  const auto grid = make_grid({{4}, {6, 3}}, {0.0, 1e-4}, {true});
  REQUIRE(grid.size() == 4);
  const auto r = grid_search_iid(d, Vector::Zero(d.size()), 0.8, o, grid);
  REQUIRE(r.cells.size() == 4);
  REQUIRE(r.best_fit);
  for (const auto& c : r.cells) {
    CHECK(c.ok);
    CHECK(r.cells[r.best].valid_deviance <= c.valid_deviance);
  }
  CHECK(r.best_fit->valid_deviance == r.cells[r.best].valid_deviance);
  const auto again = grid_search_iid(d, Vector::Zero(d.size()), 0.8, o, grid);
  for (std::size_t k = 0; k < 4; ++k) CHECK(again.cells[k].valid_deviance == r.cells[k].valid_deviance);
}
