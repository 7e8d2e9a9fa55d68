#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compatkit/core.hpp"
#include "compatkit/metrics.hpp"
#include "compatkit/tasks.hpp"
#include "compatkit/toymodel.hpp"
#include "compatkit/training.hpp"

namespace compatkit::harness {

enum class UpdateKind {
  MoreData,        // v1 trains on a prefix fraction of v2's training slice
  LongerTraining,  // v1 trains for fewer epochs
  BiggerModel,     // v1 has a narrower hidden layer
};

std::string_view to_string(UpdateKind kind);
/// Throws ConfigError("scenario.kind", ...).
UpdateKind parse_update_kind(std::string_view name);

struct UpdateScenario {
  UpdateKind kind = UpdateKind::MoreData;
  std::uint64_t seed = 0;
  SyntheticTaskSpec task;
  double v1_data_fraction = 0.3;
  std::size_t v1_epochs = 3;
  std::size_t v1_hidden = 8;
  /// When false, v2 reuses v1's base weights and adapter initialization.
  bool update_base = true;
};

struct ModelConfig {
  std::size_t hidden = 16;
  std::size_t rank = 4;
  double alpha = 8.0;
};

struct TrainingConfig {
  std::size_t epochs = 10;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t compat_epochs = 10;
  double compat_learning_rate = 0.01;
};

/// The training recipe of one model version.
struct VersionPlan {
  std::size_t hidden = 0;
  std::size_t epochs = 0;
  std::size_t train_count = 0;  // prefix of the training slice
  std::uint64_t base_seed = 0;
  std::uint64_t adapter_seed = 0;
};

VersionPlan plan_v1(const UpdateScenario& scenario, const ModelConfig& model, const TrainingConfig& training);
VersionPlan plan_v2(const UpdateScenario& scenario, const ModelConfig& model, const TrainingConfig& training);

struct TrainedVersion {
  toy::TaskModel model;
  distill::TrainingTrace trace;
};

TrainedVersion train_version(const VersionPlan& plan, const TaskData& data, const SyntheticTaskSpec& task,
                             const ModelConfig& model, const TrainingConfig& training, std::string version_tag);

/// Test-set predictions: choice log-likelihoods over the vocabulary for classification,
/// greedy decodes for copying.
std::vector<Prediction> predict(const toy::TaskModel& model, std::span<const Sample> test, SyntheticTaskKind kind);

/// Pairs old and new predictions with the clean test targets, ids "test-NNNNN".
std::vector<EvalRecord> paired_log(std::span<const Sample> test, SyntheticTaskKind kind,
                                   std::span<const Prediction> old_preds, std::span<const Prediction> new_preds);

/// Metric used to score a synthetic task's logs.
SimilarityMetric task_metric(SyntheticTaskKind kind);

struct ExperimentResult {
  std::uint64_t seed = 0;
  CompatibilityReport vanilla;  // v1 -> v2
  CompatibilityReport compat;   // v1 -> compatibility model
  DeltaReport delta;
  std::vector<EvalRecord> vanilla_log;
  std::vector<EvalRecord> compat_log;
  distill::TrainingTrace trace_v1;
  distill::TrainingTrace trace_v2;
  distill::TrainingTrace trace_compat;
};

/// Trains v1, v2 and the compatibility model, exports both prediction logs as JSON lines
/// (into `out_dir` when given, otherwise in memory), and computes the reports from the
/// re-parsed logs.
ExperimentResult run_update_experiment(const UpdateScenario& scenario, const ModelConfig& model,
                                       const TrainingConfig& training, const distill::DistillConfig& distill,
                                       const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct GapRow {
  double v1_data_fraction = 0.0;
  std::uint64_t seed = 0;
  double acc_old = 0.0;
  double acc_new = 0.0;
  double gap = 0.0;  // acc_new - acc_old
  double nfr = 0.0;
};

/// Trains v1 and v2 for every scenario and tabulates the accuracy gap against NFR.
std::vector<GapRow> sweep_gap_vs_flips(std::span<const UpdateScenario> scenarios, const ModelConfig& model,
                                       const TrainingConfig& training);

/// Spearman rank correlation (average ranks for ties); nullopt when either side is constant.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace compatkit::harness
