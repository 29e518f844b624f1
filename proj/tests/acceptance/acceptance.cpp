// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments pick
// a subset, e.g. `eqrn_acceptance 1 2 9`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eqrn/eqrn.hpp"
#include "eqrn/eval.hpp"
#include "eqrn/evt.hpp"
#include "eqrn/io.hpp"
#include "eqrn/nn/mlp.hpp"
#include "eqrn/qreg.hpp"
#include "eqrn/rnn/lstm.hpp"
#include "eqrn/sim.hpp"
#include "studies.hpp"

namespace {

using namespace eqrn;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Max-abs gradient discrepancy relative to the max-abs gradient.
double relative_error(const Vector& analytic, const Vector& numeric) {
  const double scale = std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-12});
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

Vector flatten(const nn::ConstParamBlocks& blocks) {
  Index n = 0;
  for (auto b : blocks) n += static_cast<Index>(b.size());
  Vector out(n);
  Index k = 0;
  for (auto b : blocks)
    for (double v : b) out[k++] = v;
  return out;
}

Vector flatten(const nn::ParamBlocks& blocks) {
  nn::ConstParamBlocks c(blocks.begin(), blocks.end());
  return flatten(c);
}

void assign(const nn::ParamBlocks& blocks, const Vector& v) {
  Index k = 0;
  for (auto b : blocks)
    for (double& x : b) x = v[k++];
}

// Central differences of f over every parameter of `net`.
template <class Net>
Vector numeric_param_gradient(Net& net, const std::function<double(const Net&)>& f, double h) {
  const Vector base = flatten(net.parameters());
  Vector g(base.size());
  Vector p = base;
  for (Index i = 0; i < base.size(); ++i) {
    p[i] = base[i] + h;
    assign(net.parameters(), p);
    const double up = f(net);
    p[i] = base[i] - h;
    assign(net.parameters(), p);
    const double down = f(net);
    p[i] = base[i];
    g[i] = (up - down) / (2.0 * h);
  }
  assign(net.parameters(), base);
  return g;
}

Matrix random_matrix(Index r, Index c, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Outcome criterion_gradients() {
  Rng rng(20240601);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  double err_ogpd = 0.0;
  const int n_ogpd = 1000;
  for (int i = 0; i < n_ogpd; ++i) {
    const double xi = -0.45 + 1.1 * u01(rng);
    const double nu = 0.1 + 5.0 * u01(rng);
    const double sigma = nu / (1.0 + xi);
    const double zmax = xi < 0.0 ? -sigma / xi : 20.0 * sigma;
    const double z = 0.95 * zmax * u01(rng);
    const auto g = evt::ogpd_deviance_grad(z, nu, xi);
    const double h = 1e-6;
    const double dnu = (evt::ogpd_deviance(z, nu + h, xi) - evt::ogpd_deviance(z, nu - h, xi)) / (2 * h);
    const double dxi = (evt::ogpd_deviance(z, nu, xi + h) - evt::ogpd_deviance(z, nu, xi - h)) / (2 * h);
    err_ogpd = std::max(err_ogpd, relative_error(Vector::Map(&g.d_nu, 1), Vector::Constant(1, dnu)));
    err_ogpd = std::max(err_ogpd, relative_error(Vector::Map(&g.d_xi, 1), Vector::Constant(1, dxi)));
  }

  const std::vector<nn::Activation> hidden_acts{nn::Activation::tanh, nn::Activation::sigmoid, nn::Activation::selu};
  double err_mlp = 0.0;
  const int n_mlp = 100;
  for (int i = 0; i < n_mlp; ++i) {
    nn::MlpSpec spec;
    spec.input_dim = 1 + static_cast<Index>(u01(rng) * 4);
    spec.hidden = {2 + static_cast<Index>(u01(rng) * 5), 2 + static_cast<Index>(u01(rng) * 4)};
    if (i % 3 == 0) spec.hidden.pop_back();
    spec.hidden_activation = hidden_acts[static_cast<std::size_t>(i) % hidden_acts.size()];
    spec.output_activations = {nn::Activation::softplus_shifted, nn::Activation::shape_bounded};
    spec.l2 = i % 2 == 0 ? 0.0 : 0.01;
    nn::Mlp net = nn::Mlp::initialized(spec, rng);
    for (auto b : net.parameters())
      for (double& v : b) v += 0.1 * (u01(rng) - 0.5);
    const Matrix x = random_matrix(spec.input_dim, 3, rng);
    const Matrix up = random_matrix(2, 3, rng);
    nn::Mlp::Cache cache;
    net.forward(x, cache);
    nn::MlpGradient grad = net.backward(cache, up);
    const Vector analytic = flatten(grad.blocks());
    const auto f = [&](const nn::Mlp& m) { return (m.forward(x).cwiseProduct(up)).sum() + m.l2_penalty(); };
    err_mlp = std::max(err_mlp, relative_error(analytic, numeric_param_gradient<nn::Mlp>(net, f, 1e-6)));
  }

  double err_lstm = 0.0;
  const int n_lstm = 100;
  for (int i = 0; i < n_lstm; ++i) {
    rnn::LstmSpec spec;
    spec.input_dim = 1 + static_cast<Index>(u01(rng) * 3);
    spec.hidden = {2 + static_cast<Index>(u01(rng) * 4)};
    if (i % 2 == 0) spec.hidden.push_back(2 + static_cast<Index>(u01(rng) * 3));
    spec.output_activations = {nn::Activation::softplus_shifted, nn::Activation::shape_bounded};
    spec.l2 = i % 3 == 0 ? 0.01 : 0.0;
    rnn::LstmStack net = rnn::LstmStack::initialized(spec, rng);
    const Index steps = 2 + static_cast<Index>(u01(rng) * 5);
    std::vector<Matrix> x;
    for (Index k = 0; k < steps; ++k) x.push_back(random_matrix(spec.input_dim, 2, rng));
    const Matrix up = random_matrix(2, 2, rng);
    rnn::LstmStack::Cache cache;
    net.forward(x, cache);
    rnn::LstmGradient grad = net.backward(cache, up);
    const Vector analytic = flatten(grad.blocks());
    const auto f = [&](const rnn::LstmStack& m) { return (m.forward(x).cwiseProduct(up)).sum() + m.l2_penalty(); };
    err_lstm = std::max(err_lstm, relative_error(analytic, numeric_param_gradient<rnn::LstmStack>(net, f, 1e-6)));
  }

  const bool pass = err_ogpd < 1e-5 && err_mlp < 1e-4 && err_lstm < 1e-4;
  return {pass, fmt("ogpd max rel err %.2e over %d, mlp %.2e over %d, lstm %.2e over %d", err_ogpd, n_ogpd, err_mlp,
                    n_mlp, err_lstm, n_lstm)};
}

Outcome criterion_identities() {
  Rng rng(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double err_dev = 0.0;
  double err_trip = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double xi = -0.45 + 1.1 * u01(rng);
    const double nu = 0.1 + 5.0 * u01(rng);
    const double sigma = nu / (1.0 + xi);
    const double zmax = xi < 0.0 ? -sigma / xi : 20.0 * sigma;
    const double z = 0.95 * zmax * u01(rng);
    const double dev = evt::ogpd_deviance(z, nu, xi);
    const double ref = -evt::gpd_log_density(z, {sigma, xi});
    err_dev = std::max(err_dev, std::abs(dev - ref) / std::max(1.0, std::abs(ref)));

    const evt::TailSpec spec{0.8, 3.0 * u01(rng), {sigma, xi}};
    for (double tau : {0.8, 0.9, 0.99, 0.9999}) {
      const double q = evt::gpd_quantile_extrapolate(spec, tau);
      const double p = evt::gpd_exceedance_prob(q, spec);
      err_trip = std::max(err_trip, std::abs(p - (1.0 - tau)) / (1.0 - tau));
    }
  }

  double err_zero = 0.0;
  for (double sigma : {0.5, 1.0, 2.0})
    for (double tau0 : {0.8, 0.9, 0.95})
      for (double tau : {0.99, 0.999, 0.9999}) {
        const double r = (1.0 - tau0) / (1.0 - tau);
        const double xi = 1e-7;
        const double general = sigma / xi * std::expm1(xi * std::log(r));
        const double limit = evt::gpd_quantile_extrapolate(0.0, sigma, 0.0, tau0, tau);
        err_zero = std::max(err_zero, std::abs(general - limit));
        err_zero = std::max(err_zero, std::abs(general - evt::gpd_quantile_extrapolate(0.0, sigma, xi, tau0, tau)));
        const double below = evt::gpd_quantile_extrapolate(0.0, sigma, 0.99e-6, tau0, tau);
        const double above = evt::gpd_quantile_extrapolate(0.0, sigma, 1.01e-6, tau0, tau);
        err_zero = std::max(err_zero, std::abs(below - above));
        const double z = sigma * 2.0;
        err_zero = std::max(err_zero, std::abs(evt::ogpd_deviance(z, sigma * (1 + 0.99e-6), 0.99e-6) -
                                               evt::ogpd_deviance(z, sigma * (1 + 1.01e-6), 1.01e-6)));
      }

  double err_decomp = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::normal_distribution<double> n(u01(rng) * 4 - 2, 0.1 + u01(rng) * 3);
    std::vector<double> pred(50 + i), truth(50 + i);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      truth[k] = n(rng);
      pred[k] = truth[k] + n(rng);
    }
    const double r = eval::rmse(pred, truth);
    const auto br = eval::bias_resid_decomp(pred, truth);
    err_decomp = std::max(err_decomp, std::abs(r * r - (br.bias * br.bias + br.resid_sd * br.resid_sd)));
  }

  const bool pass = err_dev < 1e-10 && err_trip < 1e-10 && err_zero < 1e-5 && err_decomp < 1e-9;
  return {pass, fmt("deviance %.1e, round-trip %.1e, xi->0 %.1e, rmse decomposition %.1e", err_dev, err_trip,
                    err_zero, err_decomp)};
}

double sample_gpd(Rng& rng, double sigma, double xi) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = 1.0 - u01(rng);
  return std::abs(xi) < 1e-12 ? -sigma * std::log(u) : sigma / xi * std::expm1(-xi * std::log(u));
}

Outcome criterion_fisher() {
  Rng rng(31337);
  const double nu = 2.0;
  const double xi = 0.2;
  const double sigma = nu / (1.0 + xi);
  const int n = 100000;
  const double h = 1e-5;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = sample_gpd(rng, sigma, xi);
    const double d = (evt::ogpd_deviance_grad(z, nu, xi + h).d_nu - evt::ogpd_deviance_grad(z, nu, xi - h).d_nu) /
                     (2.0 * h);
    sum += d;
    sum_sq += d * d;
  }
  const double mean = sum / n;
  const double sd = std::sqrt((sum_sq - n * mean * mean) / (n - 1));
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  return {std::abs(t) < 3.0, fmt("mean mixed derivative %.3e, t = %.3f (nu %.1f, xi %.1f, n %d)", mean, t, nu, xi, n)};
}

Outcome criterion_extrapolation() {
  Rng rng(424242);
  const double sigma = 1.0;
  const double xi = 0.3;
  const double tau = 0.9999;
  const double tau0 = 0.8;
  const double truth = sigma / xi * (std::pow(1.0 - tau, -xi) - 1.0);
  double se_gpd = 0.0;
  double se_emp = 0.0;
  bool bounded = true;
  const int trials = 100;
  for (int k = 0; k < trials; ++k) {
    std::vector<double> s(1000);
    for (double& v : s) v = sample_gpd(rng, sigma, xi);
    const double emp = qreg::empirical_quantile(s, tau);
    bounded = bounded && emp <= *std::max_element(s.begin(), s.end());
    const double u = qreg::empirical_quantile(s, tau0);
    std::vector<double> z;
    for (double v : s)
      if (v > u) z.push_back(v - u);
    const evt::GpdParams fit = evt::gpd_fit_mle(z);
    const double est = evt::gpd_quantile_extrapolate(u, fit.sigma, fit.xi, tau0, tau);
    se_gpd += (est - truth) * (est - truth);
    se_emp += (emp - truth) * (emp - truth);
  }
  const double rmse_gpd = std::sqrt(se_gpd / trials);
  const double rmse_emp = std::sqrt(se_emp / trials);
  return {rmse_gpd < rmse_emp && bounded,
          fmt("true Q %.2f, rmse gpd %.2f < empirical %.2f, empirical <= max: %s", truth, rmse_gpd, rmse_emp,
              bounded ? "yes" : "no")};
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};
// Run used for the single-segment criteria.
constexpr std::uint64_t kDesignatedSeed = 1;

const std::vector<study::SequentialResult>& sequential_results() {
  static std::optional<std::vector<study::SequentialResult>> cache;
  if (!cache) {
    cache.emplace();
    const study::SequentialSettings settings;
    for (auto seed : kSeeds) {
      cache->push_back(study::run_sequential(seed, settings));
      const auto& r = cache->back();
      std::printf("  sequential seed %llu: %.1fs", static_cast<unsigned long long>(seed), r.seconds);
      for (const auto& l : r.levels)
        std::printf(" | tau %.3f rmse eqrn %.3f semi %.3f unc %.3f r2 %.3f", l.tau, l.rmse_eqrn, l.rmse_semi,
                    l.rmse_unconditional, l.r2_eqrn);
      std::printf("\n");
      std::fflush(stdout);
    }
  }
  return *cache;
}

Outcome criterion_sequential() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& results = sequential_results();
  int wins = 0;
  for (const auto& r : results) {
    bool ok = true;
    for (const auto& l : r.levels)
      ok = ok && l.rmse_eqrn < l.rmse_semi && l.rmse_eqrn < l.rmse_unconditional && l.r2_eqrn > 0.0;
    wins += ok;
  }
  const double secs = seconds_since(t0);
  return {wins >= 4 && secs <= 1800.0, fmt("ordering holds on %d/%zu seeds, %.0fs", wins, results.size(), secs)};
}

Outcome criterion_calibration() {
  const auto& results = sequential_results();
  Outcome out{false, ""};
  std::string others;
  for (const auto& r : results) {
    bool ok = true;
    std::string rows;
    for (const auto& c : r.calibration) {
      ok = ok && c.within_band();
      rows += fmt(" tau %.2f: %ld in [%ld, %ld]", c.tau, static_cast<long>(c.observed), static_cast<long>(c.band_lo),
                  static_cast<long>(c.band_hi));
    }
    if (r.seed == kDesignatedSeed) {
      out.pass = ok;
      out.detail = fmt("seed %llu,", static_cast<unsigned long long>(r.seed)) + rows;
    } else {
      others += fmt(" %llu:%s", static_cast<unsigned long long>(r.seed), ok ? "in" : "out");
    }
  }
  out.detail += "; other seeds" + others;
  return out;
}

Outcome criterion_validation() {
  const auto& results = sequential_results();
  int wins = 0;
  std::string detail;
  for (const auto& r : results) {
    wins += r.valid_deviance_eqrn < r.valid_deviance_semi;
    detail += fmt(" %.4f<%.4f", r.valid_deviance_eqrn, r.valid_deviance_semi);
  }
  return {wins == static_cast<int>(results.size()),
          fmt("eqrn < semi on %d/%zu seeds:", wins, results.size()) + detail};
}

Outcome criterion_iid() {
  const auto t0 = std::chrono::steady_clock::now();
  const study::IidSettings settings;
  int wins = 0;
  std::string detail;
  for (auto seed : kSeeds) {
    const auto r = study::run_iid(seed, settings);
    wins += r.r2_eqrn > r.r2_semi;
    detail += fmt(" %.3f/%.3f", r.r2_eqrn, r.r2_semi);
  }
  const double secs = seconds_since(t0);
  return {wins >= 4 && secs <= 1200.0,
          fmt("R2 eqrn > semi on %d/%zu seeds (%.0fs), eqrn/semi:", wins, kSeeds.size(), secs) + detail};
}

std::string model_text(const EqrnModel& m) {
  std::ostringstream out;
  io::write_model(out, m);
  return out.str();
}

std::string model_text(const qreg::QuantileModel& m) {
  std::ostringstream out;
  io::write_model(out, m);
  return out.str();
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_forecasts(const std::vector<ForecastRecord>& a, const std::vector<ForecastRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].time_index != b[i].time_index || !same_bits(a[i].nu, b[i].nu) || !same_bits(a[i].xi, b[i].xi) ||
        !same_bits(a[i].intermediate_quantile, b[i].intermediate_quantile) ||
        a[i].quantiles.size() != b[i].quantiles.size())
      return false;
    for (std::size_t k = 0; k < a[i].quantiles.size(); ++k)
      if (!same_bits(a[i].quantiles[k].second, b[i].quantiles[k].second)) return false;
    if (a[i].exceed_prob.has_value() != b[i].exceed_prob.has_value()) return false;
    if (a[i].exceed_prob && !same_bits(*a[i].exceed_prob, *b[i].exceed_prob)) return false;
  }
  return true;
}

Outcome criterion_persistence() {
  const sim::TsSample sample = sim::gen_ts({1200, 100, 9});
  const Series train{sample.series.x.leftCols(900), sample.series.y.head(900)};
  qreg::FitOptions inter;
  inter.hyper.hidden = {8};
  inter.train.max_epochs = 5;
  inter.train.seed = 9;
  EqrnOptions tail;
  tail.hyper.hidden = {8};
  tail.train.max_epochs = 5;
  tail.train.batch_size = 32;
  tail.train.seed = 9;

  const auto fit_once = [&] {
    const qreg::CrossFit cross = qreg::cross_fit_predict(train, 0.8, 10, 2, inter);
    qreg::QuantileFit q = qreg::rqrn_fit(train, 0.8, 10, inter);
    EqrnFit e = eqrn_fit_seq(train, cross.predictions, 0.8, 10, tail);
    e.model.intermediate = std::move(q.model);
    return e.model;
  };
  const EqrnModel a = fit_once();
  const EqrnModel b = fit_once();
  const bool seq_bytes = model_text(a) == model_text(b) && model_text(*a.intermediate) == model_text(*b.intermediate);

  std::istringstream in(model_text(a));
  EqrnModel loaded = io::read_eqrn_model(in);
  std::istringstream in_q(model_text(*a.intermediate));
  loaded.intermediate = io::read_quantile_model(in_q);
  PredictOptions opts;
  opts.levels = {0.9, 0.99, 0.999};
  opts.threshold = 4.0;
  const bool seq_forecasts =
      same_forecasts(eqrn_predict(a, sample.series, opts), eqrn_predict(loaded, sample.series, opts)) &&
      model_text(loaded) == model_text(a);

  const Dataset data = sim::gen_iid({1, 10, 800, 9});
  const auto fit_iid = [&] {
    qreg::FitOptions o = inter;
    o.hyper.hidden = {8, 4};
    const qreg::CrossFit cross = qreg::cross_fit_predict(data, 0.8, 2, o);
    qreg::QuantileFit q = qreg::qrn_fit(data, 0.8, o);
    EqrnOptions t = tail;
    t.hyper.hidden = {8, 4};
    EqrnFit e = eqrn_fit_iid(data, cross.predictions, 0.8, t);
    e.model.intermediate = std::move(q.model);
    return e.model;
  };
  const EqrnModel c = fit_iid();
  const EqrnModel d = fit_iid();
  const bool iid_bytes = model_text(c) == model_text(d);
  std::istringstream in_iid(model_text(c));
  EqrnModel loaded_iid = io::read_eqrn_model(in_iid);
  std::istringstream in_iq(model_text(*c.intermediate));
  loaded_iid.intermediate = io::read_quantile_model(in_iq);
  const bool iid_forecasts = same_forecasts(eqrn_predict(c, data.x, opts), eqrn_predict(loaded_iid, data.x, opts));

  const auto ts1 = sim::gen_ts({500, 100, 3});
  const auto ts2 = sim::gen_ts({500, 100, 3});
  const bool sim_same = ts1.series.y == ts2.series.y && ts1.series.x == ts2.series.x;

  const bool pass = seq_bytes && seq_forecasts && iid_bytes && iid_forecasts && sim_same;
  return {pass, fmt("sequential files %s, forecasts %s; iid files %s, forecasts %s; generator %s",
                    seq_bytes ? "identical" : "differ", seq_forecasts ? "identical" : "differ",
                    iid_bytes ? "identical" : "differ", iid_forecasts ? "identical" : "differ",
                    sim_same ? "identical" : "differs")};
}

struct RateCheck {
  std::string name;
  double tau;
  double rate;
  double z;
};

RateCheck rate_check(const std::string& name, double tau, Index exceed, Index n) {
  const double p = 1.0 - tau;
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
  const double rate = static_cast<double>(exceed) / static_cast<double>(n);
  return {name, tau, rate, (rate - p) / se};
}

Outcome criterion_oracles() {
  const Index n = 1000000;
  const std::vector<double> levels{0.8, 0.99};
  std::vector<RateCheck> checks;
  for (int model = 1; model <= 3; ++model) {
    const Dataset d = sim::gen_iid({model, 10, n, 100 + static_cast<std::uint64_t>(model)});
    for (double tau : levels) {
      Index exceed = 0;
      for (Index i = 0; i < n; ++i) exceed += d.y[i] > sim::true_quantile_iid(model, d.x.col(i), tau);
      checks.push_back(rate_check("iid model " + std::to_string(model), tau, exceed, n));
    }
  }
  const sim::TsSample ts = sim::gen_ts({n, 100, 77});
  for (double tau : levels) {
    Index exceed = 0;
    for (Index t = 0; t < n; ++t) exceed += ts.series.y[t] > sim::true_quantile_ts(ts.sigma[t], tau);
    checks.push_back(rate_check("ts", tau, exceed, n));
  }
  bool pass = true;
  std::string detail;
  for (const auto& c : checks) {
    pass = pass && std::abs(c.z) < 4.0;
    detail += fmt("%s%s tau %.2f z %.2f", detail.empty() ? "" : ", ", c.name.c_str(), c.tau, c.z);
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> criteria{
      {1, criterion_gradients},   {2, criterion_identities},  {3, criterion_fisher},
      {4, criterion_extrapolation}, {5, criterion_sequential}, {6, criterion_iid},
      {7, criterion_calibration}, {8, criterion_validation},  {9, criterion_persistence},
      {10, criterion_oracles},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (!criteria.count(k)) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    selected.insert(k);
  }
  if (selected.empty())
    for (const auto& [k, f] : criteria) selected.insert(k);

  int failures = 0;
  for (int k : selected) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria.at(k)();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d: %s (%s) [%.1fs]\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
