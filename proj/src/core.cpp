#include "compatkit/core.hpp"

#include <cmath>
#include <unordered_set>

namespace compatkit {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::MultipleChoice:
      return "multiple_choice";
    case TaskKind::ExactMatch:
      return "exact_match";
    case TaskKind::Generative:
      return "generative";
  }
  return "unknown";
}

std::optional<TaskKind> parse_task_kind(std::string_view name) {
  if (name == "multiple_choice") return TaskKind::MultipleChoice;
  if (name == "exact_match") return TaskKind::ExactMatch;
  if (name == "generative") return TaskKind::Generative;
  return std::nullopt;
}

std::string_view to_string(FlipQuadrant quadrant) {
  switch (quadrant) {
    case FlipQuadrant::BothCorrect:
      return "both_correct";
    case FlipQuadrant::PositiveFlip:
      return "positive_flip";
    case FlipQuadrant::BothIncorrect:
      return "both_incorrect";
    case FlipQuadrant::NegativeFlip:
      return "negative_flip";
  }
  return "unknown";
}

std::optional<std::size_t> argmax_lowest(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\n\r\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

Prediction Prediction::from_loglikelihoods(std::vector<double> loglikes) {
  Prediction p;
  p.choice_index = argmax_lowest(loglikes);
  p.choice_loglikelihoods = std::move(loglikes);
  return p;
}

Prediction Prediction::from_text(std::string text) {
  Prediction p;
  p.text = std::move(text);
  return p;
}

std::optional<std::size_t> Prediction::chosen() const {
  if (choice_index) return choice_index;
  if (choice_loglikelihoods) return argmax_lowest(*choice_loglikelihoods);
  return std::nullopt;
}

std::size_t EvalRecord::ground_truth_index() const {
  if (const auto* idx = std::get_if<std::size_t>(&ground_truth)) return *idx;
  throw TaskMismatchError("record '" + instance_id + "' has a text ground truth, expected a choice index");
}

const std::string& EvalRecord::ground_truth_text() const {
  if (const auto* text = std::get_if<std::string>(&ground_truth)) return *text;
  throw TaskMismatchError("record '" + instance_id + "' has a choice-index ground truth, expected text");
}

CorrectnessRule default_rule(TaskKind kind) {
  return kind == TaskKind::MultipleChoice ? CorrectnessRule::ChoiceArgmax
                                          : CorrectnessRule::TrimmedExactMatch;
}

Correctness judge(const EvalRecord& record, CorrectnessRule rule) {
  switch (rule) {
    case CorrectnessRule::ChoiceArgmax: {
      if (record.task != TaskKind::MultipleChoice) {
        throw TaskMismatchError("choice-argmax rule applied to " + std::string(to_string(record.task)) +
                                " record '" + record.instance_id + "'");
      }
      const auto gt = record.ground_truth_index();
      const auto old_choice = record.pred_old.chosen();
      const auto new_choice = record.pred_new.chosen();
      if (!old_choice || !new_choice) {
        throw TaskMismatchError("record '" + record.instance_id + "' has a prediction without choice data");
      }
      return {*old_choice == gt, *new_choice == gt};
    }
    case CorrectnessRule::TrimmedExactMatch: {
      if (record.task == TaskKind::MultipleChoice) {
        throw TaskMismatchError("exact-match rule applied to multiple_choice record '" + record.instance_id + "'");
      }
      const auto gt = trim(record.ground_truth_text());
      return {trim(record.pred_old.text) == gt, trim(record.pred_new.text) == gt};
    }
  }
  throw TaskMismatchError("unknown correctness rule");
}

FlipQuadrant quadrant_of(Correctness c) noexcept {
  if (c.old_correct) return c.new_correct ? FlipQuadrant::BothCorrect : FlipQuadrant::NegativeFlip;
  return c.new_correct ? FlipQuadrant::PositiveFlip : FlipQuadrant::BothIncorrect;
}

FlipQuadrant classify_quadrant(const EvalRecord& record, CorrectnessRule rule) {
  return quadrant_of(judge(record, rule));
}

QuadrantCounts count_quadrants(std::span<const EvalRecord> records, CorrectnessRule rule) {
  QuadrantCounts counts{};
  for (const auto& r : records) ++counts[static_cast<std::size_t>(classify_quadrant(r, rule))];
  return counts;
}

namespace {

void check_choice_prediction(const EvalRecord& r, const Prediction& p, std::string_view side,
                             std::vector<ValidationIssue>& issues) {
  auto issue = [&](std::string reason) {
    issues.push_back({r.instance_id, std::string(side) + ": " + std::move(reason)});
  };
  if (!p.choice_loglikelihoods) {
    if (!p.choice_index) issue("missing choice data");
    return;
  }
  const auto& ll = *p.choice_loglikelihoods;
  if (ll.size() < 2) issue("fewer than two choices");
  for (double v : ll) {
    if (!std::isfinite(v) || v > 0.0) {
      issue("log-likelihood not finite and <= 0");
      break;
    }
  }
  if (p.choice_index) {
    if (*p.choice_index >= ll.size()) {
      issue("choice_index out of range");
    } else if (argmax_lowest(ll) != p.choice_index) {
      issue("inconsistent argmax");
    }
  }
}

std::optional<std::size_t> choice_count(const Prediction& p) {
  if (p.choice_loglikelihoods) return p.choice_loglikelihoods->size();
  return std::nullopt;
}

}  // namespace

std::vector<ValidationIssue> validate_log(std::span<const EvalRecord> records) {
  std::vector<ValidationIssue> issues;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.instance_id).second) issues.push_back({r.instance_id, "duplicate id"});
    if (r.task != records.front().task) issues.push_back({r.instance_id, "mixed task kinds"});

    if (r.task == TaskKind::MultipleChoice) {
      if (!std::holds_alternative<std::size_t>(r.ground_truth)) {
        issues.push_back({r.instance_id, "ground truth must be a choice index"});
      }
      check_choice_prediction(r, r.pred_old, "old", issues);
      check_choice_prediction(r, r.pred_new, "new", issues);
      const auto n_old = choice_count(r.pred_old);
      const auto n_new = choice_count(r.pred_new);
      if (n_old && n_new && *n_old != *n_new) {
        issues.push_back({r.instance_id, "old and new choice counts differ"});
      }
      const auto n_choices = n_old ? n_old : n_new;
      if (const auto* gt = std::get_if<std::size_t>(&r.ground_truth); gt && n_choices && *gt >= *n_choices) {
        issues.push_back({r.instance_id, "ground truth index out of range"});
      }
    } else if (!std::holds_alternative<std::string>(r.ground_truth)) {
      issues.push_back({r.instance_id, "ground truth must be text"});
    }
  }
  return issues;
}

}  // namespace compatkit
