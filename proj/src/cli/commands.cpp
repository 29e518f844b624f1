#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>

#include "eqrn/cli.hpp"
#include "eqrn/error.hpp"
#include "eqrn/eval.hpp"
#include "eqrn/sim.hpp"

namespace eqrn::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<double> kDefaultOracleLevels{0.8, 0.9, 0.95, 0.99, 0.995, 0.999, 0.9995};
const std::vector<double> kDefaultForecastLevels{0.9, 0.95, 0.99, 0.995, 0.999};

const std::string& require(const std::string& value, const char* key) {
  if (value.empty()) throw DomainError(std::string("missing required setting '") + key + "'");
  return value;
}

std::string model_path(const RunConfig& cfg, const char* file) {
  return (fs::path(require(cfg.model_dir, "model_dir")) / file).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
}

// "dir/name.csv" -> "dir/name<suffix>.csv"
std::string with_suffix(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  const std::string ext = p.has_extension() ? p.extension().string() : ".csv";
  return (p.parent_path() / (p.stem().string() + suffix + ext)).string();
}

ModelKind resolve_kind(const RunConfig& cfg, const io::DatasetCsv& data) {
  if (cfg.kind == "independent") return ModelKind::independent;
  if (cfg.kind == "sequential") return ModelKind::sequential;
  return data.has_time() ? ModelKind::sequential : ModelKind::independent;
}

const char* kind_name(ModelKind k) { return k == ModelKind::independent ? "independent" : "sequential"; }

Index training_rows(const RunConfig& cfg, const io::DatasetCsv& data) {
  const auto n = static_cast<Index>(std::floor(cfg.train_fraction * static_cast<double>(data.rows()) + 1e-9));
  if (n < 1) throw DataError("train_fraction leaves no training rows");
  return n;
}

std::vector<double> forecast_levels(const RunConfig& cfg, double tau0) {
  std::vector<double> levels = cfg.all_levels();
  if (levels.empty()) levels = kDefaultForecastLevels;
  for (double l : levels) {
    if (!(l > tau0)) {
      throw DomainError("level " + io::format_double(l) + " must exceed tau0 = " + io::format_double(tau0));
    }
  }
  return levels;
}

PredictOptions predict_options(const RunConfig& cfg, std::vector<double> levels) {
  PredictOptions o;
  o.levels = std::move(levels);
  o.threshold = cfg.threshold;
  o.baseline_prob = cfg.baseline_prob;
  o.warning_ratio = cfg.warning_ratio;
  return o;
}

std::string join_hidden(const std::vector<Index>& hidden) {
  std::string s;
  for (std::size_t k = 0; k < hidden.size(); ++k) s += (k ? "/" : "") + std::to_string(hidden[k]);
  return s;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? io::format_double(*v) : "NA"; }

Vector read_oos(const RunConfig& cfg, Index n_train) {
  const io::CsvTable table = io::read_csv(model_path(cfg, "intermediate_oos.csv"));
  Vector q = table.numeric("q_oos", true);
  if (q.size() != n_train) {
    throw DataError("intermediate_oos.csv has " + std::to_string(q.size()) + " rows but the training data has " +
                    std::to_string(n_train) + "; rerun fit-intermediate with the same data and train_fraction");
  }
  return q;
}

Vector intermediate_on(const qreg::QuantileModel& m, const io::DatasetCsv& data) {
  return m.kind == ModelKind::independent ? m.predict(data.covariates) : m.predict(data.series());
}

}  // namespace

io::CsvTable report_table(const std::vector<nn::TrainReport>& reports, const std::vector<std::string>& labels) {
  io::CsvTable t;
  t.header = {"run", "epoch", "train_loss", "valid_loss", "best_epoch", "restart", "nan_restarts"};
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& rep = reports[r];
    for (std::size_t e = 0; e < rep.train_losses.size(); ++e) {
      t.rows.push_back({labels[r], std::to_string(e), io::format_double(rep.train_losses[e]),
                        e < rep.valid_losses.size() ? io::format_double(rep.valid_losses[e]) : "NA",
                        std::to_string(rep.best_epoch), std::to_string(rep.restart),
                        std::to_string(rep.nan_restarts)});
    }
  }
  return t;
}

io::CsvTable forecast_table(const std::vector<ForecastRecord>& records, const io::DatasetCsv& data,
                            const std::vector<double>& levels, const std::string& training_end) {
  io::CsvTable t;
  t.header.push_back("row");
  if (data.has_time()) t.header.push_back("time");
  for (const char* h : {"in_training", "intermediate_quantile", "nu", "xi", "sigma"}) t.header.push_back(h);
  for (double l : levels) t.header.push_back(level_column(l));
  for (const char* h : {"exceed_prob", "prob_ratio", "warning"}) t.header.push_back(h);

  std::optional<std::chrono::sys_days> end;
  if (!training_end.empty() && data.has_time()) end = std::chrono::sys_days{io::parse_iso_date(training_end)};
  for (const auto& rec : records) {
    const auto row = static_cast<std::size_t>(rec.time_index);
    std::vector<std::string> cells;
    cells.push_back(std::to_string(rec.time_index));
    bool in_training = rec.in_training;
    if (data.has_time()) {
      cells.push_back(data.time[row]);
      if (end && std::chrono::sys_days{io::parse_iso_date(data.time[row])} <= *end) in_training = true;
    }
    cells.push_back(in_training ? "1" : "0");
    for (double v : {rec.intermediate_quantile, rec.nu, rec.xi, rec.sigma}) cells.push_back(io::format_double(v));
    if (rec.quantiles.size() != levels.size()) throw DomainError("forecast_table: level count mismatch");
    for (const auto& [level, value] : rec.quantiles) cells.push_back(io::format_double(value));
    cells.push_back(fmt_opt(rec.exceed_prob));
    cells.push_back(fmt_opt(rec.prob_ratio));
    cells.push_back(rec.warning ? "1" : "0");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const std::string out = cfg.out.empty() ? "data.csv" : cfg.out;
  const std::string oracle_path = cfg.oracle.empty() ? with_suffix(out, "_oracle") : cfg.oracle;
  const std::vector<double> levels = cfg.levels.empty() ? kDefaultOracleLevels : cfg.all_levels();

  io::DatasetCsv data;
  io::CsvTable oracle;
  oracle.header.push_back("row");
  if (cfg.sim_model == "ts") {
    const sim::TsSample sample = sim::gen_ts({cfg.length, cfg.burn_in, cfg.seed});
    data.response = sample.series.y;
    data.covariates = sample.series.x;
    data.covariate_names = {"covariate_1"};
    const std::chrono::sys_days start{io::parse_iso_date(cfg.start_date)};
    for (Index t = 0; t < data.rows(); ++t) {
      data.time.push_back(io::format_iso_date(std::chrono::year_month_day{start + std::chrono::days{t}}));
    }
    oracle.header.push_back("time");
    oracle.header.push_back("sigma");
    for (double l : levels) oracle.header.push_back(level_column(l));
    for (Index t = 0; t < data.rows(); ++t) {
      std::vector<std::string> row{std::to_string(t), data.time[static_cast<std::size_t>(t)],
                                   io::format_double(sample.sigma[t])};
      for (double l : levels) row.push_back(io::format_double(sim::true_quantile_ts(sample.sigma[t], l)));
      oracle.rows.push_back(std::move(row));
    }
  } else {
    const Index p = 10;
    if (cfg.halton) {
      data.covariates = sim::halton_grid(cfg.n, p, std::vector<std::pair<double, double>>(p, {-1.0, 1.0}));
      data.response = sim::draw_iid_responses(cfg.model_id, data.covariates, cfg.seed);
    } else {
      const Dataset d = sim::gen_iid({cfg.model_id, p, cfg.n, cfg.seed});
      data.covariates = d.x;
      data.response = d.y;
    }
    for (Index k = 1; k <= p; ++k) data.covariate_names.push_back("covariate_" + std::to_string(k));
    for (double l : levels) oracle.header.push_back(level_column(l));
    for (Index i = 0; i < data.rows(); ++i) {
      const Vector x = data.covariates.col(i);
      std::vector<std::string> row{std::to_string(i)};
      for (double l : levels) row.push_back(io::format_double(sim::true_quantile_iid(cfg.model_id, x, l)));
      oracle.rows.push_back(std::move(row));
    }
  }
  ensure_parent(out);
  ensure_parent(oracle_path);
  io::write_dataset(out, data);
  io::write_csv(oracle_path, oracle);
  log << "simulate: wrote " << data.rows() << " rows to " << out << " and oracle to " << oracle_path << '\n';
}

void cmd_fit_intermediate(const RunConfig& cfg, std::ostream& log) {
  const io::DatasetCsv all = io::read_dataset(require(cfg.data, "data"));
  const io::DatasetCsv train = all.slice(0, training_rows(cfg, all));
  const ModelKind kind = resolve_kind(cfg, train);
  qreg::FitOptions opts;
  opts.train = cfg.intermediate.train;
  opts.hyper = cfg.intermediate.hyper;
  opts.valid_fraction = cfg.valid_fraction;

  qreg::CrossFit cross;
  qreg::QuantileFit full;
  if (kind == ModelKind::independent) {
    cross = qreg::cross_fit_predict(train.dataset(), cfg.tau0, cfg.k_folds, opts);
    full = qreg::qrn_fit(train.dataset(), cfg.tau0, opts);
  } else {
    cross = qreg::cross_fit_predict(train.series(), cfg.tau0, cfg.horizon, cfg.k_folds, opts);
    full = qreg::rqrn_fit(train.series(), cfg.tau0, cfg.horizon, opts);
  }

  ensure_dir(cfg.model_dir);
  io::save_model(model_path(cfg, "intermediate.model"), full.model);

  io::CsvTable oos;
  oos.header.push_back("row");
  if (train.has_time()) oos.header.push_back("time");
  oos.header.push_back("q_oos");
  oos.header.push_back("fold");
  for (Index i = 0; i < train.rows(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    if (train.has_time()) row.push_back(train.time[static_cast<std::size_t>(i)]);
    row.push_back(io::format_double(cross.predictions[i]));
    row.push_back(std::to_string(cross.fold_of[static_cast<std::size_t>(i)]));
    oos.rows.push_back(std::move(row));
  }
  io::write_csv(model_path(cfg, "intermediate_oos.csv"), oos);

  std::vector<nn::TrainReport> reports = cross.reports;
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < reports.size(); ++k) labels.push_back("fold_" + std::to_string(k));
  reports.push_back(full.report);
  labels.push_back("full");
  io::write_csv(model_path(cfg, "intermediate_report.csv"), report_table(reports, labels));
  log << "fit-intermediate: " << kind_name(kind) << " model on " << train.rows() << " rows, tau0 "
      << io::format_double(cfg.tau0) << ", " << cfg.k_folds << "-fold out-of-sample quantiles written to "
      << cfg.model_dir << '\n';
}

void cmd_fit_eqrn(const RunConfig& cfg, std::ostream& log) {
  const io::DatasetCsv all = io::read_dataset(require(cfg.data, "data"));
  const io::DatasetCsv train = all.slice(0, training_rows(cfg, all));
  const qreg::QuantileModel inter = io::load_quantile_model(model_path(cfg, "intermediate.model"));
  const double tau0 = inter.tau0;
  const Vector q = read_oos(cfg, train.rows());

  EqrnOptions base;
  base.train = cfg.eqrn.train;
  base.hyper = cfg.eqrn.hyper;
  base.valid_fraction = cfg.valid_fraction;
  const std::vector<NetworkHyper> grid = cfg.grid();
  GridResult res = inter.kind == ModelKind::independent
                       ? grid_search_iid(train.dataset(), q, tau0, base, grid)
                       : grid_search_seq(train.series(), q, tau0, cfg.horizon, base, grid);
  EqrnFit& best = *res.best_fit;
  if (train.has_time()) best.model.training_end = train.time.back();
  io::save_model(model_path(cfg, "eqrn.model"), best.model);

  std::vector<std::size_t> order(res.cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = res.cells[a];
    const auto& cb = res.cells[b];
    if (ca.ok != cb.ok) return ca.ok;
    return ca.ok && ca.valid_deviance < cb.valid_deviance;
  });
  io::CsvTable summary;
  summary.header = {"rank", "cell", "hidden", "l2", "constant_shape", "valid_deviance", "status", "best", "error"};
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& c = res.cells[order[r]];
    summary.rows.push_back({std::to_string(r + 1), std::to_string(order[r]), join_hidden(c.hyper.hidden),
                            io::format_double(c.hyper.l2), c.hyper.constant_shape ? "1" : "0",
                            c.ok ? io::format_double(c.valid_deviance) : "NA", c.ok ? "ok" : "failed",
                            order[r] == res.best ? "1" : "0", c.error});
  }
  io::write_csv(model_path(cfg, "grid_summary.csv"), summary);
  io::write_csv(model_path(cfg, "eqrn_report.csv"), report_table({best.report}, {"best"}));

  // Semi-conditional reference fitted on the same training exceedances.
  std::vector<double> z_train, z_valid;
  for (Index t : best.train_index) z_train.push_back(train.response[t] - q[t]);
  for (Index t : best.valid_index) z_valid.push_back(train.response[t] - q[t]);
  std::string semi_dev = "NA";
  if (!z_valid.empty()) {
    StaticTailModel semi;
    semi.tau0 = tau0;
    semi.gpd = evt::gpd_fit_mle(z_train);
    const std::vector<GpdTailFit> tails(z_valid.size(), semi.tail(0.0));
    semi_dev = io::format_double(mean_deviance(z_valid, tails));
  }
  io::CsvTable fit_summary;
  fit_summary.header = {"kind", "tau0", "horizon", "n_train_exceedances", "n_valid_exceedances",
                        "eqrn_valid_deviance", "semi_conditional_valid_deviance", "training_end"};
  fit_summary.rows.push_back({kind_name(inter.kind), io::format_double(tau0), std::to_string(best.model.horizon),
                              std::to_string(z_train.size()), std::to_string(z_valid.size()),
                              io::format_double(best.valid_deviance), semi_dev,
                              best.model.training_end.empty() ? "NA" : best.model.training_end});
  io::write_csv(model_path(cfg, "fit_summary.csv"), fit_summary);
  log << "fit-eqrn: " << grid.size() << " grid cell(s), best " << join_hidden(res.cells[res.best].hyper.hidden)
      << " l2=" << io::format_double(res.cells[res.best].hyper.l2)
      << " constant_shape=" << res.cells[res.best].hyper.constant_shape
      << ", validation deviance " << io::format_double(best.valid_deviance) << " (semi-conditional " << semi_dev
      << ")\n";
}

void cmd_predict(const RunConfig& cfg, std::ostream& log) {
  EqrnModel model = io::load_eqrn_model(model_path(cfg, "eqrn.model"));
  model.intermediate = io::load_quantile_model(model_path(cfg, "intermediate.model"));
  const io::DatasetCsv data = io::read_dataset(require(cfg.data, "data"));
  const std::vector<double> levels = forecast_levels(cfg, model.tau0);
  const PredictOptions popts = predict_options(cfg, levels);
  std::vector<ForecastRecord> records;
  if (model.kind == ModelKind::independent) {
    records = eqrn_predict(model, data.covariates, popts);
  } else {
    records = eqrn_predict(model, data.series(), popts);
    if (records.empty()) {
      throw DataError("insufficient history: sequential forecasts need " + std::to_string(2 * model.horizon) +
                      " preceding rows");
    }
  }
  const std::string out = cfg.out.empty() ? model_path(cfg, "forecasts.csv") : cfg.out;
  ensure_parent(out);
  io::write_csv(out, forecast_table(records, data, levels, model.training_end));
  std::size_t warnings = 0;
  for (const auto& r : records) warnings += r.warning ? 1 : 0;
  log << "predict: " << records.size() << " forecasts at " << levels.size() << " level(s) written to " << out;
  if (cfg.baseline_prob) log << ", " << warnings << " warning(s)";
  log << '\n';
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const io::CsvTable fc = io::read_csv(require(cfg.forecasts, "forecasts"));
  const io::DatasetCsv data = io::read_dataset(require(cfg.data, "data"));
  const Vector rows = fc.numeric("row");
  const Index in_col = fc.column("in_training");

  std::vector<std::pair<double, Index>> level_cols;
  for (std::size_t c = 0; c < fc.header.size(); ++c) {
    if (auto l = parse_level_column(fc.header[c])) level_cols.emplace_back(*l, static_cast<Index>(c));
  }
  if (level_cols.empty()) throw DataError(cfg.forecasts + ": no quantile columns (q_<level>)");
  std::sort(level_cols.begin(), level_cols.end());
  for (std::size_t k = 1; k < level_cols.size(); ++k) {
    if (!(level_cols[k].first > level_cols[k - 1].first)) throw DataError("quantile levels must be distinct");
  }

  std::optional<io::CsvTable> oracle;
  std::map<Index, std::size_t> oracle_row;
  if (!cfg.oracle.empty()) {
    oracle = io::read_csv(cfg.oracle);
    const Vector orows = oracle->numeric("row");
    for (Index i = 0; i < orows.size(); ++i) oracle_row[static_cast<Index>(orows[i])] = static_cast<std::size_t>(i);
  }

  io::CsvTable out;
  out.header = {"tau",      "n",        "rmse",    "bias",    "resid_sd",   "r2",
                "expected", "observed", "band_lo", "band_hi", "within_band"};
  for (const auto& [level, col] : level_cols) {
    const Vector pred_all = fc.numeric(fc.header[static_cast<std::size_t>(col)], true);
    std::vector<double> y, pred, truth_pred, truth;
    const std::optional<Vector> oracle_col =
        oracle && oracle->column(level_column(level)) >= 0
            ? std::optional<Vector>(oracle->numeric(level_column(level), true))
            : std::nullopt;
    for (Index i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Index>(rows[i]);
      if (r < 0 || r >= data.rows() || static_cast<double>(r) != rows[i]) {
        throw DataError("forecast row " + io::format_double(rows[i]) + " does not index the data file");
      }
      if (in_col >= 0 && !cfg.include_training && fc.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(in_col)] == "1") {
        continue;
      }
      if (!std::isfinite(pred_all[i])) continue;
      y.push_back(data.response[r]);
      pred.push_back(pred_all[i]);
      if (oracle_col) {
        const auto it = oracle_row.find(r);
        if (it == oracle_row.end()) throw DataError("oracle has no row " + std::to_string(r));
        const double tq = (*oracle_col)[static_cast<Index>(it->second)];
        if (std::isfinite(tq)) {
          truth_pred.push_back(pred_all[i]);
          truth.push_back(tq);
        }
      }
    }
    std::vector<std::string> row{io::format_double(level), std::to_string(y.size())};
    if (truth.size() >= 2) {
      const eval::LevelMetrics m = eval::level_metrics(level, truth_pred, truth);
      for (double v : {m.rmse, m.bias, m.resid_sd, m.r2}) row.push_back(io::format_double(v));
    } else {
      row.insert(row.end(), 4, "NA");
    }
    if (!y.empty()) {
      const auto cal = eval::calibration_curve(y, {level}, {pred}, cfg.band_level).front();
      row.push_back(io::format_double(cal.expected));
      row.push_back(std::to_string(cal.observed));
      row.push_back(std::to_string(cal.band_lo));
      row.push_back(std::to_string(cal.band_hi));
      row.push_back(cal.within_band() ? "1" : "0");
    } else {
      row.insert(row.end(), 5, "NA");
    }
    out.rows.push_back(std::move(row));
  }
  const std::string path = cfg.out.empty() ? with_suffix(cfg.forecasts, "_metrics") : cfg.out;
  ensure_parent(path);
  io::write_csv(path, out);
  log << "evaluate: " << out.rows.size() << " level(s) written to " << path << '\n';
}

void cmd_baseline(const RunConfig& cfg, std::ostream& log) {
  const io::DatasetCsv data = io::read_dataset(require(cfg.data, "data"));
  const Index n_train = training_rows(cfg, data);
  const io::DatasetCsv train = data.slice(0, n_train);
  const std::string out = cfg.out.empty() ? model_path(cfg, "baseline.csv") : cfg.out;
  ensure_parent(out);
  const std::string training_end = train.has_time() ? train.time.back() : "";

  // Static GPD above the empirical tau0-quantile of the training responses.
  const StaticTailModel gpd = unconditional_fit(train.response, cfg.tau0);
  const std::vector<double> levels = forecast_levels(cfg, cfg.tau0);
  const PredictOptions popts = predict_options(cfg, levels);
  std::vector<ForecastRecord> gpd_records;
  for (Index i = 0; i < data.rows(); ++i) {
    gpd_records.push_back(eqrn_predict(gpd.tail(), cfg.tau0, popts));
    gpd_records.back().time_index = i;
  }
  io::write_csv(with_suffix(out, "_gpd"), forecast_table(gpd_records, data, levels, training_end));
  log << "baseline: static GPD (u=" << io::format_double(*gpd.threshold) << ", sigma="
      << io::format_double(gpd.gpd.sigma) << ", xi=" << io::format_double(gpd.gpd.xi) << ")\n";

  // Semi-conditional: constant GPD above the intermediate quantile model.
  const std::string inter_path = model_path(cfg, "intermediate.model");
  if (fs::exists(inter_path)) {
    const qreg::QuantileModel inter = io::load_quantile_model(inter_path);
    const StaticTailModel semi = semi_conditional_fit(train.response, read_oos(cfg, n_train), inter.tau0);
    const std::vector<double> semi_levels = forecast_levels(cfg, inter.tau0);
    const PredictOptions semi_opts = predict_options(cfg, semi_levels);
    const Vector q = intermediate_on(inter, data);
    std::vector<ForecastRecord> records;
    for (Index i = 0; i < data.rows(); ++i) {
      if (!std::isfinite(q[i])) continue;
      records.push_back(eqrn_predict(semi.tail(q[i]), inter.tau0, semi_opts));
      records.back().time_index = i;
    }
    io::write_csv(with_suffix(out, "_semi_conditional"), forecast_table(records, data, semi_levels, training_end));
    log << "baseline: semi-conditional (sigma=" << io::format_double(semi.gpd.sigma)
        << ", xi=" << io::format_double(semi.gpd.xi) << ")\n";
  } else {
    log << "baseline: no intermediate model in " << cfg.model_dir << ", semi-conditional baseline skipped\n";
  }

  // Static GEV on annual maxima of the training period.
  if (!train.has_time()) {
    log << "baseline: no time column, GEV baseline skipped\n";
    return;
  }
  std::map<int, std::pair<double, Index>> years;  // year -> (maximum, count)
  for (Index i = 0; i < train.rows(); ++i) {
    const int y = io::calendar_year(train.time[static_cast<std::size_t>(i)]);
    auto [it, fresh] = years.try_emplace(y, train.response[i], 0);
    it->second.first = std::max(it->second.first, train.response[i]);
    ++it->second.second;
  }
  std::vector<Index> counts;
  for (const auto& [y, mc] : years) counts.push_back(mc.second);
  std::nth_element(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(counts.size() / 2), counts.end());
  const Index median_count = counts[counts.size() / 2];
  std::vector<double> maxima;
  for (const auto& [y, mc] : years) {
    if (2 * mc.second >= median_count) maxima.push_back(mc.first);
  }
  if (maxima.size() < 10) {
    throw DataError("GEV baseline needs at least 10 annual blocks, found " + std::to_string(maxima.size()));
  }
  const evt::GevParams gev = evt::gev_fit_mle(maxima);
  const auto n_year = static_cast<double>(cfg.obs_per_year);
  std::vector<ForecastRecord> gev_records;
  for (Index i = 0; i < data.rows(); ++i) {
    ForecastRecord rec;
    rec.time_index = i;
    rec.nu = kNaN;
    rec.intermediate_quantile = kNaN;
    rec.xi = gev.xi;
    rec.sigma = gev.sigma;
    for (double l : levels) {
      const double t_years = 1.0 / (n_year * (1.0 - l));
      rec.quantiles.emplace_back(l, t_years > 1.0 ? evt::gev_return_level(gev, t_years) : kNaN);
    }
    if (cfg.threshold) {
      rec.exceed_prob = (1.0 - evt::gev_cdf(*cfg.threshold, gev)) / n_year;
      if (cfg.baseline_prob) {
        const ProbRatio r = prob_ratio(*rec.exceed_prob, *cfg.baseline_prob, cfg.warning_ratio);
        rec.prob_ratio = r.ratio;
        rec.warning = r.warning;
      }
    }
    gev_records.push_back(std::move(rec));
  }
  io::write_csv(with_suffix(out, "_gev"), forecast_table(gev_records, data, levels, training_end));
  log << "baseline: GEV on " << maxima.size() << " annual maxima (mu=" << io::format_double(gev.mu)
      << ", sigma=" << io::format_double(gev.sigma) << ", xi=" << io::format_double(gev.xi) << ")\n";
}

void run_command(const std::string& verb, const RunConfig& cfg, std::ostream& log) {
  if (verb == "simulate") return cmd_simulate(cfg, log);
  if (verb == "fit-intermediate") return cmd_fit_intermediate(cfg, log);
  if (verb == "fit-eqrn") return cmd_fit_eqrn(cfg, log);
  if (verb == "predict") return cmd_predict(cfg, log);
  if (verb == "evaluate") return cmd_evaluate(cfg, log);
  if (verb == "baseline") return cmd_baseline(cfg, log);
  throw DomainError("unknown command '" + verb + "'");
}

}  // namespace eqrn::cli
