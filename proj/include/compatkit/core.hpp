#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "compatkit/errors.hpp"

namespace compatkit {

enum class TaskKind { MultipleChoice, ExactMatch, Generative };

std::string_view to_string(TaskKind kind);
/// Accepts "multiple_choice", "exact_match", "generative".
std::optional<TaskKind> parse_task_kind(std::string_view name);

/// One model's output on one instance.
struct Prediction {
  std::string text;
  std::optional<std::size_t> choice_index;
  std::optional<std::vector<double>> choice_loglikelihoods;

  /// Builds a multiple-choice prediction whose choice_index is the argmax of `loglikes`.
  static Prediction from_loglikelihoods(std::vector<double> loglikes);
  static Prediction from_text(std::string text);

  /// choice_index if set, otherwise the argmax of choice_loglikelihoods.
  std::optional<std::size_t> chosen() const;

  bool operator==(const Prediction&) const = default;
};

using GroundTruth = std::variant<std::size_t, std::string>;

struct EvalRecord {
  std::string instance_id;
  TaskKind task = TaskKind::MultipleChoice;
  GroundTruth ground_truth;
  Prediction pred_old;
  Prediction pred_new;

  /// Throws TaskMismatchError if the ground truth is not a choice index.
  std::size_t ground_truth_index() const;
  /// Throws TaskMismatchError if the ground truth is not text.
  const std::string& ground_truth_text() const;

  bool operator==(const EvalRecord&) const = default;
};

enum class FlipQuadrant { BothCorrect, PositiveFlip, BothIncorrect, NegativeFlip };

std::string_view to_string(FlipQuadrant quadrant);

/// Binary correctness rules. ChoiceArgmax applies to multiple-choice records;
/// TrimmedExactMatch applies to exact-match and generative records.
enum class CorrectnessRule { ChoiceArgmax, TrimmedExactMatch };

/// The natural rule for a task kind.
CorrectnessRule default_rule(TaskKind kind);

struct Correctness {
  bool old_correct;
  bool new_correct;
};

/// Evaluates both predictions of a record under `rule`.
Correctness judge(const EvalRecord& record, CorrectnessRule rule);

/// The quadrant for a pair of correctness flags.
FlipQuadrant quadrant_of(Correctness c) noexcept;

FlipQuadrant classify_quadrant(const EvalRecord& record, CorrectnessRule rule);

/// Quadrant counts indexed by FlipQuadrant.
using QuadrantCounts = std::array<std::size_t, 4>;

QuadrantCounts count_quadrants(std::span<const EvalRecord> records, CorrectnessRule rule);

/// Index of the largest value; ties resolve to the lowest index. Empty input gives nullopt.
std::optional<std::size_t> argmax_lowest(std::span<const double> values);

struct ValidationIssue {
  std::string instance_id;
  std::string reason;

  bool operator==(const ValidationIssue&) const = default;
};

/// Returns one issue per invariant violation; an empty result means the log is well formed.
std::vector<ValidationIssue> validate_log(std::span<const EvalRecord> records);

/// Whitespace-trimmed view of `s`.
std::string_view trim(std::string_view s);

}  // namespace compatkit
