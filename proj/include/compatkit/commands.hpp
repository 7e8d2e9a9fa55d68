#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "compatkit/metrics.hpp"

namespace compatkit::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitGateFailed = 1;
inline constexpr int kExitInvalidInput = 2;

struct EvaluateOptions {
  std::filesystem::path log;
  std::string metric;  // empty: the task's default metric
  std::optional<std::filesystem::path> output;
};

struct CompareOptions {
  std::filesystem::path base;
  std::filesystem::path candidate;
  /// "rule=value[,rule=value...]" or a path to a JSON object of rule -> value.
  std::string thresholds;
  std::optional<std::filesystem::path> output;
};

struct ExperimentOptions {
  std::filesystem::path config;  // empty: the bundled default scenario
  std::filesystem::path output;
  std::optional<std::uint64_t> seed;
};

/// A regression-gate rule. Values use the report's units (fractions, except the
/// percent-change rule).
struct Threshold {
  std::string rule;  // max_delta_nfr | max_delta_pct_nfr | max_nfr | min_delta_acc | max_delta_m_r
  double value = 0.0;
};

/// Throws ConfigError("thresholds", ...) on unknown rules or malformed values.
std::vector<Threshold> parse_thresholds(const std::string& spec);

/// Human-readable description of each violated rule; empty when the gate passes.
std::vector<std::string> check_thresholds(const DeltaReport& delta, const std::vector<Threshold>& thresholds);

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareOptions& opts, std::ostream& out, std::ostream& err);
int cmd_experiment(const ExperimentOptions& opts, std::ostream& out, std::ostream& err);
int cmd_validate(const std::filesystem::path& log, std::ostream& out, std::ostream& err);

}  // namespace compatkit::cli
