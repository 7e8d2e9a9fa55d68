#include "compatkit/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

namespace compatkit {

bool SimilarityMetric::applies_to(TaskKind task) const {
  if (std::holds_alternative<MultipleChoiceAccuracy>(kind)) return task == TaskKind::MultipleChoice;
  return task != TaskKind::MultipleChoice;
}

SimilarityMetric parse_metric(std::string_view name) {
  if (name == "exact-match") return {std::string(name), ExactMatch01{}};
  if (name == "mc-accuracy") return {std::string(name), MultipleChoiceAccuracy{}};
  if (name.starts_with("rouge")) {
    const auto dash = name.find('-');
    const auto digits = name.substr(5, dash == std::string_view::npos ? std::string_view::npos : dash - 5);
    std::size_t n = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && n >= 1 && dash != std::string_view::npos) {
      const auto stat_name = name.substr(dash + 1);
      if (stat_name == "f1") return {std::string(name), RougeN{n, RougeStat::F1}};
      if (stat_name == "precision") return {std::string(name), RougeN{n, RougeStat::Precision}};
      if (stat_name == "recall") return {std::string(name), RougeN{n, RougeStat::Recall}};
    }
  }
  throw ConfigError("metric", "unknown metric '" + std::string(name) +
                                  "' (expected exact-match, mc-accuracy or rouge<N>-<f1|precision|recall>)");
}

SimilarityMetric default_metric(TaskKind task) {
  switch (task) {
    case TaskKind::MultipleChoice:
      return parse_metric("mc-accuracy");
    case TaskKind::ExactMatch:
      return parse_metric("exact-match");
    case TaskKind::Generative:
      return parse_metric("rouge1-f1");
  }
  return parse_metric("exact-match");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, std::size_t n, std::size_t& total) {
  NgramCounts counts;
  total = 0;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    ++total;
  }
  return counts;
}

}  // namespace

double rouge_n(std::string_view candidate, std::string_view reference, std::size_t n, RougeStat stat) {
  if (n == 0) throw DomainError("rouge_n requires n >= 1");
  std::size_t cand_total = 0;
  std::size_t ref_total = 0;
  const auto cand = count_ngrams(tokenize(candidate), n, cand_total);
  const auto ref = count_ngrams(tokenize(reference), n, ref_total);
  if (cand_total == 0 || ref_total == 0) return (cand_total == 0 && ref_total == 0) ? 1.0 : 0.0;

  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    if (const auto it = ref.find(gram); it != ref.end()) overlap += std::min(count, it->second);
  }
  const double precision = static_cast<double>(overlap) / static_cast<double>(cand_total);
  const double recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  switch (stat) {
    case RougeStat::Precision:
      return precision;
    case RougeStat::Recall:
      return recall;
    case RougeStat::F1:
      return overlap == 0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  }
  return 0.0;
}

double exact_match01(std::string_view candidate, std::string_view reference) {
  return trim(candidate) == trim(reference) ? 1.0 : 0.0;
}

bool mc_correct(const Prediction& pred, std::size_t ground_truth_index) {
  if (!pred.choice_loglikelihoods) throw TaskMismatchError("prediction carries no choice log-likelihoods");
  return argmax_lowest(*pred.choice_loglikelihoods) == ground_truth_index;
}

double score(const SimilarityMetric& metric, const Prediction& pred, const EvalRecord& record) {
  if (!metric.applies_to(record.task)) {
    throw TaskMismatchError("metric '" + metric.name + "' does not apply to " +
                            std::string(to_string(record.task)) + " record '" + record.instance_id + "'");
  }
  return std::visit(
      [&](const auto& kind) -> double {
        using K = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<K, ExactMatch01>) {
          return exact_match01(pred.text, record.ground_truth_text());
        } else if constexpr (std::is_same_v<K, RougeN>) {
          return rouge_n(pred.text, record.ground_truth_text(), kind.n, kind.stat);
        } else {
          return mc_correct(pred, record.ground_truth_index()) ? 1.0 : 0.0;
        }
      },
      metric.kind);
}

}  // namespace compatkit
