#include "compatkit/distill.hpp"

#include <cmath>
#include <map>
#include <string>

#include "compatkit/toymodel.hpp"

namespace compatkit::distill {

std::string_view to_string(MaskStrategy strategy) {
  switch (strategy) {
    case MaskStrategy::StudentIncorrect:
      return "StudentIncorrect";
    case MaskStrategy::OldCorrect:
      return "OldCorrect";
    case MaskStrategy::UnmaskedV1:
      return "Unmasked_v1";
    case MaskStrategy::TokenLikelihood:
      return "TokenLikelihood";
    case MaskStrategy::SequenceLikelihood:
      return "SequenceLikelihood";
  }
  return "unknown";
}

const std::vector<MaskStrategy>& all_mask_strategies() {
  static const std::vector<MaskStrategy> all = {MaskStrategy::StudentIncorrect, MaskStrategy::OldCorrect,
                                                MaskStrategy::UnmaskedV1, MaskStrategy::TokenLikelihood,
                                                MaskStrategy::SequenceLikelihood};
  return all;
}

MaskStrategy parse_mask_strategy(std::string_view name) {
  for (auto s : all_mask_strategies()) {
    if (name == to_string(s)) return s;
  }
  std::string valid;
  for (auto s : all_mask_strategies()) valid += (valid.empty() ? "" : ", ") + std::string(to_string(s));
  throw ConfigError("strategy", "unknown mask strategy '" + std::string(name) + "' (valid: " + valid + ")");
}

void DistillConfig::validate() const {
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  if (lambda < 1.0 && !use_aux_ce) throw DomainError("lambda < 1 requires the auxiliary cross-entropy loss");
}

double kl_term(std::span<const double> teacher_logits, std::span<const double> student_logits, double temperature) {
  if (teacher_logits.size() != student_logits.size()) throw ShapeError("kl_term: logit vectors differ in length");
  const auto log_p = toy::log_softmax_t(teacher_logits, temperature);
  const auto log_q = toy::log_softmax_t(student_logits, temperature);
  double kl = 0.0;
  for (std::size_t k = 0; k < log_p.size(); ++k) {
    const double p = std::exp(log_p[k]);
    if (p > 0.0) kl += p * (log_p[k] - log_q[k]);
  }
  return kl < 0.0 ? 0.0 : kl;
}

namespace {

void check_aligned(const Tensor2& a, const Tensor2& b, std::size_t n_targets) {
  if (!a.same_shape(b)) throw ShapeError("logit tensors are not aligned");
  if (a.rows() != n_targets) throw ShapeError("one target per logit row required");
}

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

double target_log_prob(std::span<const double> row, int target) {
  return toy::log_softmax_t(row, 1.0).at(static_cast<std::size_t>(target));
}

void check_targets(std::span<const int> targets, std::size_t vocab) {
  for (int y : targets) {
    if (y < 0 || static_cast<std::size_t>(y) >= vocab) throw ShapeError("target id " + std::to_string(y) + " out of range");
  }
}

Tensor2 teacher_probs(const Tensor2& v1, const Tensor2& v2, std::span<const std::uint8_t> mask, double temperature) {
  Tensor2 out(v1.rows(), v1.cols());
  for (std::size_t i = 0; i < v1.rows(); ++i) {
    const auto p = toy::softmax_t(mask[i] ? v1.row(i) : v2.row(i), temperature);
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

Tensor2 one_hot(std::span<const int> targets, std::size_t vocab) {
  Tensor2 out(targets.size(), vocab);
  for (std::size_t i = 0; i < targets.size(); ++i) out(i, static_cast<std::size_t>(targets[i])) = 1.0;
  return out;
}

void check_mask(std::span<const std::uint8_t> mask, std::size_t n) {
  if (mask.size() != n) throw ShapeError("mask length differs from the token count");
  for (auto m : mask)
    if (m > 1) throw DomainError("mask entries must be 0 or 1");
}

}  // namespace

Mask compute_mask(MaskStrategy strategy, const Tensor2& student_logits, const Tensor2& v1_logits,
                  std::span<const int> targets, std::span<const std::size_t> sequence_ids) {
  check_aligned(student_logits, v1_logits, targets.size());
  check_targets(targets, student_logits.cols());
  if (strategy == MaskStrategy::SequenceLikelihood && sequence_ids.size() != targets.size()) {
    throw ShapeError("one sequence id per token required");
  }
  const std::size_t n = targets.size();
  Mask m(n, 0);
  switch (strategy) {
    case MaskStrategy::StudentIncorrect:
      for (std::size_t i = 0; i < n; ++i) m[i] = argmax_row(student_logits.row(i)) != static_cast<std::size_t>(targets[i]);
      break;
    case MaskStrategy::OldCorrect:
      for (std::size_t i = 0; i < n; ++i) m[i] = argmax_row(v1_logits.row(i)) == static_cast<std::size_t>(targets[i]);
      break;
    case MaskStrategy::UnmaskedV1:
      std::fill(m.begin(), m.end(), 1);
      break;
    case MaskStrategy::TokenLikelihood:
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = target_log_prob(student_logits.row(i), targets[i]) < target_log_prob(v1_logits.row(i), targets[i]);
      }
      break;
    case MaskStrategy::SequenceLikelihood: {
      std::map<std::size_t, std::pair<double, double>> totals;
      for (std::size_t i = 0; i < n; ++i) {
        auto& [student, old] = totals[sequence_ids[i]];
        student += target_log_prob(student_logits.row(i), targets[i]);
        old += target_log_prob(v1_logits.row(i), targets[i]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto& [student, old] = totals[sequence_ids[i]];
        m[i] = student < old;
      }
      break;
    }
  }
  return m;
}

double compat_loss(const Tensor2& student_logits, const Tensor2& v1_logits, const Tensor2& v2_logits,
                   std::span<const int> targets, std::span<const std::uint8_t> mask, const DistillConfig& config) {
  config.validate();
  check_aligned(student_logits, v1_logits, targets.size());
  check_aligned(student_logits, v2_logits, targets.size());
  check_mask(mask, targets.size());
  if (targets.empty()) throw ShapeError("compat_loss needs at least one token");
  const double n = static_cast<double>(targets.size());
  double comp = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& teacher = mask[i] ? v1_logits : v2_logits;
    comp += kl_term(teacher.row(i), student_logits.row(i), config.temperature);
  }
  comp /= n;
  if (!config.use_aux_ce) return comp;

  check_targets(targets, student_logits.cols());
  double ce = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) ce -= target_log_prob(student_logits.row(i), targets[i]);
  ce /= n;
  return config.lambda * comp + (1.0 - config.lambda) * ce;
}

Var record_cross_entropy(Graph& g, Var logits, std::span<const int> targets) {
  const auto& z = g.value(logits);
  if (z.rows() != targets.size() || targets.empty()) throw ShapeError("one target per logit row required");
  check_targets(targets, z.cols());
  std::vector<double> weights(targets.size(), 1.0 / static_cast<double>(targets.size()));
  return g.soft_target_loss(logits, one_hot(targets, z.cols()), std::move(weights), 1.0);
}

Var record_compat_loss(Graph& g, Var student_logits, const Tensor2& v1_logits, const Tensor2& v2_logits,
                       std::span<const int> targets, std::span<const std::uint8_t> mask, const DistillConfig& config) {
  config.validate();
  const auto& s = g.value(student_logits);
  check_aligned(s, v1_logits, targets.size());
  check_aligned(s, v2_logits, targets.size());
  check_mask(mask, targets.size());
  if (targets.empty()) throw ShapeError("compat_loss needs at least one token");
  const double n = static_cast<double>(targets.size());
  const double comp_weight = config.use_aux_ce ? config.lambda : 1.0;
  std::vector<double> weights(targets.size(), comp_weight / n);
  Var loss = g.soft_target_loss(student_logits, teacher_probs(v1_logits, v2_logits, mask, config.temperature),
                                std::move(weights), config.temperature);
  if (!config.use_aux_ce) return loss;
  const Var ce = record_cross_entropy(g, student_logits, targets);
  return g.add(loss, g.scale(ce, 1.0 - config.lambda));
}

}  // namespace compatkit::distill
