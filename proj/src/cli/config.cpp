#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "eqrn/cli.hpp"
#include "eqrn/error.hpp"

namespace eqrn::cli {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) { return io::parse_double(v, "config key " + key); }

long long to_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  long long out = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw DomainError("config key " + key + ": not an integer: '" + v + "'");
  }
  return out;
}

Index to_count(const std::string& key, const std::string& v) {
  const long long n = to_int(key, v);
  if (n < 1) throw DomainError("config key " + key + ": must be positive");
  return static_cast<Index>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw DomainError("config key " + key + ": not a boolean: '" + v + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& v, F convert) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(convert(key, item));
  return out;
}

void add_train_section(std::map<std::string, Setter>& table, const std::string& prefix,
                       TrainSection RunConfig::*section) {
  auto with = [section](auto fn) {
    return [section, fn](RunConfig& c, const std::string& v) { fn(c.*section, v); };
  };
  const std::string p = prefix + ".";
  table[p + "hidden"] = with([p](TrainSection& s, const std::string& v) {
    s.hyper.hidden = to_list<Index>(p + "hidden", v, to_count);
    if (s.hyper.hidden.empty()) throw DomainError("config key " + p + "hidden: empty list");
  });
  table[p + "activation"] = with([](TrainSection& s, const std::string& v) {
    s.hyper.activation = nn::activation_from_string(trim(v));
  });
  table[p + "l2"] = with([p](TrainSection& s, const std::string& v) { s.hyper.l2 = to_double(p + "l2", v); });
  table[p + "dropout"] = with([p](TrainSection& s, const std::string& v) {
    s.hyper.dropout = to_double(p + "dropout", v);
  });
  table[p + "constant_shape"] = with([p](TrainSection& s, const std::string& v) {
    s.hyper.constant_shape = to_bool(p + "constant_shape", v);
  });
  table[p + "epochs"] = with([p](TrainSection& s, const std::string& v) {
    s.train.max_epochs = static_cast<int>(to_count(p + "epochs", v));
  });
  table[p + "batch_size"] = with([p](TrainSection& s, const std::string& v) {
    s.train.batch_size = to_count(p + "batch_size", v);
  });
  table[p + "learning_rate"] = with([p](TrainSection& s, const std::string& v) {
    s.train.learning_rate = to_double(p + "learning_rate", v);
  });
  table[p + "patience"] = with([p](TrainSection& s, const std::string& v) {
    s.train.patience = static_cast<int>(to_count(p + "patience", v));
  });
  table[p + "lr_decay"] = with([p](TrainSection& s, const std::string& v) {
    s.train.lr_decay_factor = to_double(p + "lr_decay", v);
  });
  table[p + "restarts"] = with([p](TrainSection& s, const std::string& v) {
    s.train.n_restarts = static_cast<int>(to_count(p + "restarts", v));
  });
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["data"] = [](RunConfig& c, const std::string& v) { c.data = trim(v); };
    t["model_dir"] = [](RunConfig& c, const std::string& v) { c.model_dir = trim(v); };
    t["out"] = [](RunConfig& c, const std::string& v) { c.out = trim(v); };
    t["oracle"] = [](RunConfig& c, const std::string& v) { c.oracle = trim(v); };
    t["forecasts"] = [](RunConfig& c, const std::string& v) { c.forecasts = trim(v); };
    t["kind"] = [](RunConfig& c, const std::string& v) {
      c.kind = trim(v);
      if (c.kind != "auto" && c.kind != "independent" && c.kind != "sequential") {
        throw DomainError("config key kind: expected auto, independent or sequential");
      }
    };
    t["tau0"] = [](RunConfig& c, const std::string& v) { c.tau0 = to_double("tau0", v); };
    t["levels"] = [](RunConfig& c, const std::string& v) { c.levels = to_list<double>("levels", v, to_double); };
    t["return_periods"] = [](RunConfig& c, const std::string& v) {
      c.return_periods = to_list<double>("return_periods", v, to_double);
    };
    t["obs_per_year"] = [](RunConfig& c, const std::string& v) {
      c.obs_per_year = static_cast<long>(to_count("obs_per_year", v));
    };
    t["horizon"] = [](RunConfig& c, const std::string& v) { c.horizon = to_count("horizon", v); };
    t["seed"] = [](RunConfig& c, const std::string& v) {
      const long long s = to_int("seed", v);
      if (s < 0) throw DomainError("config key seed: must be nonnegative");
      c.seed = static_cast<std::uint64_t>(s);
    };
    t["threshold"] = [](RunConfig& c, const std::string& v) { c.threshold = to_double("threshold", v); };
    t["baseline_prob"] = [](RunConfig& c, const std::string& v) { c.baseline_prob = to_double("baseline_prob", v); };
    t["warning_ratio"] = [](RunConfig& c, const std::string& v) { c.warning_ratio = to_double("warning_ratio", v); };
    t["train_fraction"] = [](RunConfig& c, const std::string& v) {
      c.train_fraction = to_double("train_fraction", v);
    };
    t["valid_fraction"] = [](RunConfig& c, const std::string& v) {
      c.valid_fraction = to_double("valid_fraction", v);
    };
    t["k_folds"] = [](RunConfig& c, const std::string& v) { c.k_folds = static_cast<int>(to_count("k_folds", v)); };
    t["band_level"] = [](RunConfig& c, const std::string& v) { c.band_level = to_double("band_level", v); };
    t["include_training"] = [](RunConfig& c, const std::string& v) {
      c.include_training = to_bool("include_training", v);
    };
    t["simulate.model"] = [](RunConfig& c, const std::string& v) {
      c.sim_model = trim(v);
      if (c.sim_model != "ts" && c.sim_model != "iid") throw DomainError("config key simulate.model: ts or iid");
    };
    t["simulate.model_id"] = [](RunConfig& c, const std::string& v) {
      c.model_id = static_cast<int>(to_int("simulate.model_id", v));
    };
    t["simulate.n"] = [](RunConfig& c, const std::string& v) { c.n = to_count("simulate.n", v); };
    t["simulate.length"] = [](RunConfig& c, const std::string& v) { c.length = to_count("simulate.length", v); };
    t["simulate.burn_in"] = [](RunConfig& c, const std::string& v) { c.burn_in = to_count("simulate.burn_in", v); };
    t["simulate.start_date"] = [](RunConfig& c, const std::string& v) {
      io::parse_iso_date(v);
      c.start_date = trim(v);
    };
    t["simulate.halton"] = [](RunConfig& c, const std::string& v) { c.halton = to_bool("simulate.halton", v); };
    t["grid.hidden"] = [](RunConfig& c, const std::string& v) {
      c.grid_hidden = to_list<Index>("grid.hidden", v, to_count);
    };
    t["grid.layers"] = [](RunConfig& c, const std::string& v) {
      c.grid_layers = to_list<Index>("grid.layers", v, to_count);
    };
    t["grid.l2"] = [](RunConfig& c, const std::string& v) { c.grid_l2 = to_list<double>("grid.l2", v, to_double); };
    t["grid.constant_shape"] = [](RunConfig& c, const std::string& v) {
      c.grid_constant_shape = to_list<bool>("grid.constant_shape", v, to_bool);
    };
    add_train_section(t, "intermediate", &RunConfig::intermediate);
    add_train_section(t, "eqrn", &RunConfig::eqrn);
    return t;
  }();
  return table;
}

}  // namespace

std::vector<double> RunConfig::all_levels() const {
  std::vector<double> out = levels;
  for (double t : return_periods) out.push_back(evt::return_period_to_tau(t, obs_per_year));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<NetworkHyper> RunConfig::grid() const {
  std::vector<std::vector<Index>> architectures;
  for (Index layers : grid_layers)
    for (Index width : grid_hidden) architectures.emplace_back(static_cast<std::size_t>(layers), width);
  auto cells = make_grid(architectures, grid_l2, grid_constant_shape, eqrn.hyper.activation);
  for (auto& cell : cells) cell.dropout = eqrn.hyper.dropout;
  return cells;
}

RunConfig make_config(const std::map<std::string, std::string>& values) {
  RunConfig cfg;
  const auto& table = setters();
  for (const auto& [key, value] : values) {
    // Keys in a [general] section are treated as top-level keys.
    const std::string k = key.rfind("general.", 0) == 0 ? key.substr(8) : key;
    const auto it = table.find(k);
    if (it == table.end()) throw DomainError("unknown config key '" + key + "'");
    it->second(cfg, value);
  }
  if (!(cfg.tau0 > 0.0 && cfg.tau0 < 1.0)) throw DomainError("tau0 must lie in (0,1)");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction <= 1.0)) throw DomainError("train_fraction must lie in (0,1]");
  if (!(cfg.valid_fraction >= 0.0 && cfg.valid_fraction < 1.0)) throw DomainError("valid_fraction must lie in [0,1)");
  if (cfg.k_folds < 2) throw DomainError("k_folds must be >= 2");
  if (cfg.baseline_prob && !(*cfg.baseline_prob > 0.0 && *cfg.baseline_prob <= 1.0)) {
    throw DomainError("baseline_prob must lie in (0,1]");
  }
  for (double l : cfg.levels) {
    if (!(l > 0.0 && l < 1.0)) throw DomainError("levels must lie in (0,1)");
  }
  if (!(cfg.band_level > 0.0 && cfg.band_level < 1.0)) throw DomainError("band_level must lie in (0,1)");
  for (auto* s : {&cfg.intermediate, &cfg.eqrn}) {
    s->train.seed = cfg.seed;
    s->train.validate();
  }
  return cfg;
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

std::string level_column(double level) { return "q_" + io::format_double(level); }

std::optional<double> parse_level_column(const std::string& name) {
  if (name.rfind("q_", 0) != 0) return std::nullopt;
  const std::string rest = name.substr(2);
  double v = 0.0;
  const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), v);
  if (rest.empty() || res.ec != std::errc() || res.ptr != rest.data() + rest.size()) return std::nullopt;
  if (!(v > 0.0 && v < 1.0)) return std::nullopt;
  return v;
}

}  // namespace eqrn::cli
