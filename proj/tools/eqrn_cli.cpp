// eqrn: simulate | fit-intermediate | fit-eqrn | predict | evaluate | baseline

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eqrn/cli.hpp"
#include "eqrn/error.hpp"

namespace {

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const eqrn::DataError*>(&e)) return "data";
  if (dynamic_cast<const eqrn::DomainError*>(&e)) return "domain";
  if (dynamic_cast<const eqrn::ConvergenceError*>(&e)) return "convergence";
  if (dynamic_cast<const eqrn::TrainingError*>(&e)) return "training";
  return "internal";
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extreme quantile regression networks"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::map<std::string, std::string> flags;
  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  const std::vector<Flag> flag_table{
      {"--data", "data", "dataset CSV (time, response, covariate_1..p)"},
      {"--model-dir", "model_dir", "directory holding model files"},
      {"--tau0", "tau0", "intermediate quantile level"},
      {"--levels", "levels", "comma-separated probability levels"},
      {"--return-periods", "return_periods", "comma-separated return periods in years"},
      {"--horizon", "horizon", "sequential window length s"},
      {"--seed", "seed", "random seed"},
      {"--threshold", "threshold", "threshold for exceedance probabilities"},
      {"--baseline-prob", "baseline_prob", "reference exceedance probability for ratios"},
      {"--out", "out", "output path"},
      {"--oracle", "oracle", "oracle sidecar CSV"},
      {"--forecasts", "forecasts", "forecast CSV to evaluate"},
      {"--kind", "kind", "auto, independent or sequential"},
      {"--train-fraction", "train_fraction", "leading share of rows used for fitting"},
  };
  std::vector<std::string> values(flag_table.size());
  app.add_option("--config", config_path, "key=value config file with [sections]");
  for (std::size_t k = 0; k < flag_table.size(); ++k) {
    app.add_option(flag_table[k].name, values[k], flag_table[k].help);
  }
  app.add_option("--set", overrides, "override any config key: key=value (repeatable)");

  std::string verb;
  for (const char* v : {"simulate", "fit-intermediate", "fit-eqrn", "predict", "evaluate", "baseline"}) {
    app.add_subcommand(v)->fallthrough()->callback([&verb, v] { verb = v; });
  }
  app.get_subcommand("simulate")->description("generate a synthetic dataset and its oracle quantiles");
  app.get_subcommand("fit-intermediate")->description("fit the intermediate quantile network and cross-fit");
  app.get_subcommand("fit-eqrn")->description("fit the tail network (grid search over validation deviance)");
  app.get_subcommand("predict")->description("forecast extreme quantiles and exceedance probabilities");
  app.get_subcommand("evaluate")->description("error and calibration metrics of a forecast file");
  app.get_subcommand("baseline")->description("static GEV/GPD and semi-conditional forecasts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) kv = eqrn::io::read_config(config_path);
    for (std::size_t k = 0; k < flag_table.size(); ++k) {
      if (app.count(flag_table[k].name) > 0) kv[flag_table[k].key] = values[k];
    }
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw eqrn::DomainError("--set expects key=value, got '" + o + "'");
      kv[o.substr(0, eq)] = o.substr(eq + 1);
    }
    const eqrn::cli::RunConfig cfg = eqrn::cli::make_config(kv);
    eqrn::cli::run_command(verb, cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error kind=" << error_kind(e) << " command=" << verb << " message=\"" << one_line(e.what())
              << "\"\n";
    return 1;
  }
  return 0;
}
