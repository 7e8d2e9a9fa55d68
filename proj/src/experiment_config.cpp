#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "compatkit/experiment.hpp"
#include "compatkit/report_io.hpp"

namespace compatkit::harness {

using nlohmann::json;

namespace {

/// Reads typed fields of one JSON object and rejects keys nobody asked about.
class Section {
 public:
  Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "config" : prefix_, "must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!it->is_number_unsigned()) throw ConfigError(field(key), "must be a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError(field(key), "must be a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError(field(key), "must be true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError(field(key), "must be a string");
      }
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "has the wrong type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

template <typename Fn>
void with_section(Section& parent, const char* key, Fn&& fn) {
  if (const json* child = parent.child(key)) {
    Section s(*child, parent.field(key));
    fn(s);
    s.finish();
  }
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.scenario.kind = UpdateKind::MoreData;
  c.scenario.v1_data_fraction = 0.3;
  c.scenario.task.kind = SyntheticTaskKind::NextTokenClassification;
  c.scenario.task.vocab = 16;
  c.scenario.task.context = 8;
  c.scenario.task.n_train = 8000;
  c.scenario.task.n_test = 2000;
  c.scenario.task.noise_rate = 0.2;
  c.training.compat_learning_rate = 0.005;
  // v1 trails v2 by ~8 points here; pure distillation costs accuracy without CE.
  c.distill.use_aux_ce = true;
  c.distill.lambda = 0.5;
  return c;
}

ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig c = default_experiment_config();
  Section root(j, "");
  with_section(root, "scenario", [&](Section& s) {
    std::string kind = std::string(to_string(c.scenario.kind));
    s.read("kind", kind);
    c.scenario.kind = parse_update_kind(kind);
    s.read("v1_data_fraction", c.scenario.v1_data_fraction);
    s.read("v1_epochs", c.scenario.v1_epochs);
    s.read("v1_hidden", c.scenario.v1_hidden);
    s.read("update_base", c.scenario.update_base);
  });
  with_section(root, "task", [&](Section& s) {
    std::string kind = std::string(to_string(c.scenario.task.kind));
    s.read("kind", kind);
    c.scenario.task.kind = parse_task_kind(kind);
    s.read("vocab", c.scenario.task.vocab);
    s.read("context", c.scenario.task.context);
    s.read("n_train", c.scenario.task.n_train);
    s.read("n_test", c.scenario.task.n_test);
    s.read("noise_rate", c.scenario.task.noise_rate);
  });
  with_section(root, "model", [&](Section& s) {
    s.read("hidden", c.model.hidden);
    s.read("rank", c.model.rank);
    s.read("alpha", c.model.alpha);
  });
  with_section(root, "training", [&](Section& s) {
    s.read("epochs", c.training.epochs);
    s.read("learning_rate", c.training.learning_rate);
    s.read("batch_size", c.training.batch_size);
    s.read("compat_epochs", c.training.compat_epochs);
    s.read("compat_learning_rate", c.training.compat_learning_rate);
  });
  with_section(root, "distill", [&](Section& s) {
    std::string strategy = std::string(distill::to_string(c.distill.strategy));
    s.read("strategy", strategy);
    try {
      c.distill.strategy = distill::parse_mask_strategy(strategy);
    } catch (const ConfigError& e) {
      throw ConfigError("distill.strategy", e.what());
    }
    s.read("temperature", c.distill.temperature);
    s.read("aux_ce", c.distill.use_aux_ce);
    c.distill.lambda = c.distill.use_aux_ce ? distill::DistillConfig::kDefaultAuxLambda : 1.0;
    s.read("lambda", c.distill.lambda);
  });
  if (const json* seeds = root.child("seeds")) {
    if (!seeds->is_array() || seeds->empty()) throw ConfigError("seeds", "must be a non-empty array of integers");
    c.seeds.clear();
    for (const auto& s : *seeds) {
      if (!s.is_number_unsigned()) throw ConfigError("seeds", "must hold non-negative integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  with_section(root, "sweep", [&](Section& s) {
    if (const json* fr = s.child("v1_data_fractions")) {
      if (!fr->is_array()) throw ConfigError("sweep.v1_data_fractions", "must be an array");
      for (const auto& f : *fr) {
        if (!f.is_number()) throw ConfigError("sweep.v1_data_fractions", "must hold numbers");
        c.sweep_fractions.push_back(f.get<double>());
      }
    }
  });
  root.finish();

  c.scenario.task.validate();
  auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!in_unit(c.scenario.v1_data_fraction)) throw ConfigError("scenario.v1_data_fraction", "must lie in (0, 1]");
  for (double f : c.sweep_fractions)
    if (!in_unit(f)) throw ConfigError("sweep.v1_data_fractions", "entries must lie in (0, 1]");
  if (c.model.hidden == 0) throw ConfigError("model.hidden", "must be positive");
  if (c.scenario.v1_hidden == 0) throw ConfigError("scenario.v1_hidden", "must be positive");
  if (c.model.rank == 0) throw ConfigError("model.rank", "must be positive");
  if (!(c.model.alpha > 0.0)) throw ConfigError("model.alpha", "must be positive");
  if (c.training.batch_size == 0) throw ConfigError("training.batch_size", "must be positive");
  if (!(c.training.learning_rate >= 0.0)) throw ConfigError("training.learning_rate", "must be non-negative");
  if (!(c.training.compat_learning_rate >= 0.0)) throw ConfigError("training.compat_learning_rate", "must be non-negative");
  if (!(c.distill.temperature > 0.0)) throw ConfigError("distill.temperature", "must be positive");
  if (!(c.distill.lambda >= 0.0 && c.distill.lambda <= 1.0)) throw ConfigError("distill.lambda", "must lie in [0, 1]");
  if (c.distill.lambda < 1.0 && !c.distill.use_aux_ce) throw ConfigError("distill.lambda", "values below 1 require aux_ce");
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
  try {
    return parse_experiment_config(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = {{"kind", std::string(to_string(c.scenario.kind))},
                   {"v1_data_fraction", c.scenario.v1_data_fraction},
                   {"v1_epochs", c.scenario.v1_epochs},
                   {"v1_hidden", c.scenario.v1_hidden},
                   {"update_base", c.scenario.update_base}};
  j["task"] = {{"kind", std::string(to_string(c.scenario.task.kind))},
               {"vocab", c.scenario.task.vocab},
               {"context", c.scenario.task.context},
               {"n_train", c.scenario.task.n_train},
               {"n_test", c.scenario.task.n_test},
               {"noise_rate", c.scenario.task.noise_rate}};
  j["model"] = {{"hidden", c.model.hidden}, {"rank", c.model.rank}, {"alpha", c.model.alpha}};
  j["training"] = {{"epochs", c.training.epochs},
                   {"learning_rate", c.training.learning_rate},
                   {"batch_size", c.training.batch_size},
                   {"compat_epochs", c.training.compat_epochs},
                   {"compat_learning_rate", c.training.compat_learning_rate}};
  j["distill"] = {{"strategy", std::string(distill::to_string(c.distill.strategy))},
                  {"temperature", c.distill.temperature},
                  {"lambda", c.distill.lambda},
                  {"aux_ce", c.distill.use_aux_ce}};
  j["seeds"] = c.seeds;
  if (!c.sweep_fractions.empty()) j["sweep"] = {{"v1_data_fractions", c.sweep_fractions}};
  return j;
}

SeedSummary summarize(const std::vector<double>& values) {
  SeedSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

SuiteResult run_experiment_suite(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out_dir) {
  SuiteResult suite;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_json(*out_dir / "config.json", to_json(config));
  }
  for (auto seed : config.seeds) {
    UpdateScenario scenario = config.scenario;
    scenario.seed = seed;
    std::optional<std::filesystem::path> seed_dir;
    if (out_dir) seed_dir = *out_dir / ("seed-" + std::to_string(seed));
    suite.runs.push_back(run_update_experiment(scenario, config.model, config.training, config.distill, seed_dir));
  }

  std::ostringstream table;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %9s %9s %9s %9s %9s %9s %9s\n", "seed", "acc_v1%", "acc_v2%", "acc_c%", "NFR%",
                "NFR_c%", "dNFR_c", "d%NFR_c");
  table << "strategy " << distill::to_string(config.distill.strategy) << ", scenario "
        << to_string(config.scenario.kind) << ", task " << to_string(config.scenario.task.kind) << "\n"
        << line;
  std::vector<double> acc1, acc2, accc, nfr, nfrc, dpct;
  json summary_json;
  summary_json["strategy"] = std::string(distill::to_string(config.distill.strategy));
  for (const auto& r : suite.runs) {
    acc1.push_back(r.vanilla.acc_old);
    acc2.push_back(r.vanilla.acc_new);
    accc.push_back(r.compat.acc_new);
    nfr.push_back(r.vanilla.nfr);
    nfrc.push_back(r.compat.nfr);
    if (r.delta.delta_pct_nfr) dpct.push_back(*r.delta.delta_pct_nfr);
    std::snprintf(line, sizeof line, "%-8s %9s %9s %9s %9s %9s %9s %9s\n", std::to_string(r.seed).c_str(),
                  format_percent(r.vanilla.acc_old).c_str(), format_percent(r.vanilla.acc_new).c_str(),
                  format_percent(r.compat.acc_new).c_str(), format_percent(r.vanilla.nfr).c_str(),
                  format_percent(r.compat.nfr).c_str(), format_percent(r.delta.delta_nfr).c_str(),
                  r.delta.delta_pct_nfr ? fixed(*r.delta.delta_pct_nfr, 2).c_str() : kUndefined);
    table << line;
    summary_json["runs"].push_back({{"seed", r.seed},
                                    {"acc_v1", r.vanilla.acc_old},
                                    {"acc_v2", r.vanilla.acc_new},
                                    {"acc_c", r.compat.acc_new},
                                    {"nfr", r.vanilla.nfr},
                                    {"nfr_c", r.compat.nfr},
                                    {"delta", to_json(r.delta)}});
  }
  const auto s_acc1 = summarize(acc1), s_acc2 = summarize(acc2), s_accc = summarize(accc);
  const auto s_nfr = summarize(nfr), s_nfrc = summarize(nfrc);
  const auto mean_pct = s_nfr.mean > 0.0 ? std::optional(100.0 * (s_nfrc.mean - s_nfr.mean) / s_nfr.mean) : std::nullopt;
  std::snprintf(line, sizeof line, "%-8s %9s %9s %9s %9s %9s %9s %9s\n", "mean", format_percent(s_acc1.mean).c_str(),
                format_percent(s_acc2.mean).c_str(), format_percent(s_accc.mean).c_str(),
                format_percent(s_nfr.mean).c_str(), format_percent(s_nfrc.mean).c_str(),
                format_percent(s_nfrc.mean - s_nfr.mean).c_str(), mean_pct ? fixed(*mean_pct, 2).c_str() : kUndefined);
  table << line;
  std::snprintf(line, sizeof line, "%-8s %9s %9s %9s %9s %9s\n", "std", format_percent(s_acc1.stddev).c_str(),
                format_percent(s_acc2.stddev).c_str(), format_percent(s_accc.stddev).c_str(),
                format_percent(s_nfr.stddev).c_str(), format_percent(s_nfrc.stddev).c_str());
  table << line;
  summary_json["mean"] = {{"acc_v1", s_acc1.mean}, {"acc_v2", s_acc2.mean}, {"acc_c", s_accc.mean},
                          {"nfr", s_nfr.mean},     {"nfr_c", s_nfrc.mean}};
  summary_json["mean_delta_pct_nfr"] = mean_pct ? json(*mean_pct) : json(kUndefined);

  if (!config.sweep_fractions.empty()) {
    std::vector<UpdateScenario> scenarios;
    for (auto seed : config.seeds) {
      for (double f : config.sweep_fractions) {
        UpdateScenario s = config.scenario;
        s.kind = UpdateKind::MoreData;
        s.seed = seed;
        s.v1_data_fraction = f;
        scenarios.push_back(s);
      }
    }
    suite.sweep = sweep_gap_vs_flips(scenarios, config.model, config.training);
    std::vector<double> gaps, nfrs;
    for (const auto& row : suite.sweep) {
      gaps.push_back(row.gap);
      nfrs.push_back(row.nfr);
    }
    suite.sweep_spearman = spearman(gaps, nfrs);
    table << "gap-vs-NFR spearman: " << (suite.sweep_spearman ? fixed(*suite.sweep_spearman, 4) : kUndefined) << "\n";
    if (out_dir) {
      std::ofstream csv(*out_dir / "sweep.csv");
      csv << "v1_data_fraction,seed,acc_old,acc_new,gap,nfr\n";
      for (const auto& row : suite.sweep) {
        csv << fixed(row.v1_data_fraction, 4) << ',' << row.seed << ',' << fixed(row.acc_old, 6) << ','
            << fixed(row.acc_new, 6) << ',' << fixed(row.gap, 6) << ',' << fixed(row.nfr, 6) << '\n';
      }
    }
  }

  suite.summary_table = table.str();
  if (out_dir) {
    std::ofstream(*out_dir / "summary.txt") << suite.summary_table;
    write_json(*out_dir / "summary.json", summary_json);
  }
  return suite;
}

}  // namespace compatkit::harness
