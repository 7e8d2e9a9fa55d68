#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "compatkit/distill.hpp"
#include "compatkit/harness.hpp"

namespace compatkit::harness {

/// Everything an experiment run needs; `scenario.seed` is replaced by each entry of `seeds`.
struct ExperimentConfig {
  UpdateScenario scenario;
  ModelConfig model;
  TrainingConfig training;
  distill::DistillConfig distill;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  /// Optional gap-vs-flips sweep over v1 data fractions (MoreData only).
  std::vector<double> sweep_fractions;
};

/// Parses the JSON experiment config. Missing fields keep their defaults; unknown fields and
/// invalid values throw ConfigError naming the field (e.g. "distill.strategy").
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// The bundled MoreData scenario (v1 on 30 % of the training slice, five seeds).
ExperimentConfig default_experiment_config();

struct SeedSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single seed
};

struct SuiteResult {
  std::vector<ExperimentResult> runs;
  std::vector<GapRow> sweep;
  std::optional<double> sweep_spearman;  // gap vs NFR
  std::string summary_table;
};

SeedSummary summarize(const std::vector<double>& values);

/// Runs every seed (writing "<out_dir>/seed-<s>/" when `out_dir` is set), then the optional
/// sweep, and writes summary.txt / summary.json / sweep.csv. Output is deterministic in the config.
SuiteResult run_experiment_suite(const ExperimentConfig& config,
                                 const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace compatkit::harness
