#pragma once

// Command implementations behind the eqrn executable. Each command reads its
// inputs from a RunConfig, writes CSV / model files and throws on failure.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "eqrn/eqrn.hpp"
#include "eqrn/io.hpp"

namespace eqrn::cli {

struct TrainSection {
  nn::TrainConfig train;
  NetworkHyper hyper;
};

struct RunConfig {
  std::string data;
  std::string model_dir = "model";
  std::string out;
  std::string oracle;     // oracle sidecar (simulate: output, evaluate: input)
  std::string forecasts;  // evaluate input
  std::string kind = "auto";  // auto | independent | sequential

  double tau0 = kDefaultTau0;
  std::vector<double> levels;
  std::vector<double> return_periods;  // years, converted with obs_per_year
  long obs_per_year = 365;
  Index horizon = kDefaultHorizon;
  std::uint64_t seed = 1;
  std::optional<double> threshold;
  std::optional<double> baseline_prob;
  double warning_ratio = kDefaultWarningRatio;
  double train_fraction = 1.0;  // leading share of the rows used for fitting
  double valid_fraction = 0.25;
  int k_folds = 3;
  double band_level = 0.99;
  bool include_training = false;  // evaluate: keep in-training rows

  std::string sim_model = "ts";  // ts | iid
  int model_id = 1;
  Index n = 5000;
  Index length = 7000;
  Index burn_in = 100;
  std::string start_date = "2000-01-01";
  bool halton = false;

  TrainSection intermediate;
  TrainSection eqrn;
  std::vector<Index> grid_hidden{32, 128};
  std::vector<Index> grid_layers{1, 2};
  std::vector<double> grid_l2{0.0, 1e-6, 1e-4};
  std::vector<bool> grid_constant_shape{true, false};

  // Requested probability levels plus converted return periods, sorted, unique.
  std::vector<double> all_levels() const;
  std::vector<NetworkHyper> grid() const;
};

// Keys as in the config file ("tau0", "eqrn.epochs", "grid.l2", ...).
// Unknown keys and malformed values are errors.
RunConfig make_config(const std::map<std::string, std::string>& values);
std::vector<std::string> known_config_keys();

std::string level_column(double level);
// Parses "q_<level>" column names; nullopt for other columns.
std::optional<double> parse_level_column(const std::string& name);

io::CsvTable report_table(const std::vector<nn::TrainReport>& reports, const std::vector<std::string>& labels);
io::CsvTable forecast_table(const std::vector<ForecastRecord>& records, const io::DatasetCsv& data,
                            const std::vector<double>& levels, const std::string& training_end);

void cmd_simulate(const RunConfig& cfg, std::ostream& log);
void cmd_fit_intermediate(const RunConfig& cfg, std::ostream& log);
void cmd_fit_eqrn(const RunConfig& cfg, std::ostream& log);
void cmd_predict(const RunConfig& cfg, std::ostream& log);
void cmd_evaluate(const RunConfig& cfg, std::ostream& log);
void cmd_baseline(const RunConfig& cfg, std::ostream& log);

// Dispatch by verb name.
void run_command(const std::string& verb, const RunConfig& cfg, std::ostream& log);

}  // namespace eqrn::cli
