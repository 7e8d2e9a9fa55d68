#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "compatkit/core.hpp"
#include "compatkit/similarity.hpp"

namespace compatkit {

/// |D| below this is a tie and counts toward neither smoothed flip rate.
inline constexpr double kDeltaTieTolerance = 1e-12;

/// Similarity-delta statistics over D(x) = S(new, truth) - S(old, truth).
struct SmoothReport {
  double pfr_tilde = 0.0;
  double nfr_tilde = 0.0;
  double m_g = 0.0;  // mean D over D > 0, 0 if there are none
  double m_r = 0.0;  // mean |D| over D < 0, 0 if there are none
  std::vector<double> d_values;

  bool operator==(const SmoothReport&) const = default;
};

/// Every compatibility statistic for one (old, new) model pair over one log.
struct CompatibilityReport {
  TaskKind task = TaskKind::MultipleChoice;
  std::string metric;
  std::size_t n = 0;
  /// Fraction correct for discrete tasks; mean similarity for generative logs.
  double acc_old = 0.0;
  double acc_new = 0.0;
  double nfr = 0.0;
  double pfr = 0.0;
  std::optional<double> nfr_mc;  // multiple-choice logs only
  std::optional<double> btc;     // undefined without old-correct records
  QuadrantCounts quadrant_counts{};
  std::optional<SmoothReport> smooth;

  bool operator==(const CompatibilityReport&) const = default;
};

/// Differences of a candidate update against a base update sharing the same old model.
struct DeltaReport {
  std::size_t n = 0;
  double base_nfr = 0.0;
  double candidate_nfr = 0.0;
  double delta_nfr = 0.0;
  /// 100 * delta_nfr / base_nfr; undefined when the base NFR is zero.
  std::optional<double> delta_pct_nfr;
  double delta_pfr = 0.0;
  double delta_acc = 0.0;
  std::optional<double> delta_m_g;
  std::optional<double> delta_m_r;

  bool operator==(const DeltaReport&) const = default;
};

double negative_flip_rate(std::span<const EvalRecord> records, CorrectnessRule rule);
double positive_flip_rate(std::span<const EvalRecord> records, CorrectnessRule rule);

/// Fraction of records whose prediction is correct, for the old and the new model.
struct AccuracyPair {
  double old_acc;
  double new_acc;
};
AccuracyPair accuracy(std::span<const EvalRecord> records, CorrectnessRule rule);

/// Fraction of multiple-choice records where the new model is wrong and disagrees with the old one.
double nfr_multiple_choice(std::span<const EvalRecord> records);

/// D(x) = S(new output, truth) - S(old output, truth).
double instance_delta(const EvalRecord& record, const SimilarityMetric& metric);

SmoothReport smooth_flip_rates(std::span<const EvalRecord> records, const SimilarityMetric& metric);

/// BothCorrect / (BothCorrect + NegativeFlip). Throws UndefinedRatioError without old-correct records.
double backward_trust_compatibility(std::span<const EvalRecord> records, CorrectnessRule rule);

/// Computes the full report. The correctness rule is the task's default rule.
CompatibilityReport build_report(std::span<const EvalRecord> records, const SimilarityMetric& metric);

/// Throws MismatchError when n or task differ.
DeltaReport compare_reports(const CompatibilityReport& base, const CompatibilityReport& candidate);

}  // namespace compatkit
