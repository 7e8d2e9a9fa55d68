#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "compatkit/core.hpp"

namespace compatkit {

enum class RougeStat { Precision, Recall, F1 };

struct ExactMatch01 {
  bool operator==(const ExactMatch01&) const = default;
};
struct RougeN {
  std::size_t n = 1;
  RougeStat stat = RougeStat::F1;
  bool operator==(const RougeN&) const = default;
};
struct MultipleChoiceAccuracy {
  bool operator==(const MultipleChoiceAccuracy&) const = default;
};

/// A similarity S(output, reference) with values in [0, 1], higher meaning more similar.
struct SimilarityMetric {
  std::string name;
  std::variant<ExactMatch01, RougeN, MultipleChoiceAccuracy> kind;

  bool applies_to(TaskKind task) const;

  bool operator==(const SimilarityMetric&) const = default;
};

/// Resolves "exact-match", "mc-accuracy" or "rouge<N>-<f1|precision|recall>".
/// Throws ConfigError("metric", ...) listing the accepted names.
SimilarityMetric parse_metric(std::string_view name);

/// "rouge1-f1" for generative logs, "exact-match" for exact-match logs, "mc-accuracy" otherwise.
SimilarityMetric default_metric(TaskKind task);

/// Lowercases and splits on runs of non-alphanumeric ASCII characters.
std::vector<std::string> tokenize(std::string_view text);

/// Clipped n-gram overlap statistic. If either side has no n-grams the result is 0,
/// unless both are empty, in which case it is 1. Requires n >= 1.
double rouge_n(std::string_view candidate, std::string_view reference, std::size_t n, RougeStat stat);

double exact_match01(std::string_view candidate, std::string_view reference);

/// True iff the lowest-index argmax of the log-likelihoods is `ground_truth_index`.
/// Throws TaskMismatchError when the prediction carries no log-likelihoods.
bool mc_correct(const Prediction& pred, std::size_t ground_truth_index);

/// S(pred, record.ground_truth) under `metric`. Throws TaskMismatchError if the
/// metric does not apply to the record's task.
double score(const SimilarityMetric& metric, const Prediction& pred, const EvalRecord& record);

}  // namespace compatkit
