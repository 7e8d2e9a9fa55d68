#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compatkit/autodiff.hpp"
#include "compatkit/tensor.hpp"

namespace compatkit::distill {

using toy::Graph;
using toy::Tensor2;
using toy::Var;

/// Chooses, per training token, whether the student aligns to the old model (1) or the new one (0).
enum class MaskStrategy {
  StudentIncorrect,    // 1 where the student's argmax misses the target
  OldCorrect,          // 1 where the old model's argmax hits the target
  UnmaskedV1,          // 1 everywhere
  TokenLikelihood,     // 1 where p_student(y) < p_old(y)
  SequenceLikelihood,  // 1 on a whole sequence when its student log-likelihood < the old model's
};

std::string_view to_string(MaskStrategy strategy);
/// Throws ConfigError("strategy", ...) naming the valid variants.
MaskStrategy parse_mask_strategy(std::string_view name);
const std::vector<MaskStrategy>& all_mask_strategies();

using Mask = std::vector<std::uint8_t>;

struct DistillConfig {
  double temperature = 2.0;
  /// Weight of the compatibility loss; the auxiliary cross-entropy gets 1 - lambda.
  double lambda = 1.0;
  MaskStrategy strategy = MaskStrategy::StudentIncorrect;
  bool use_aux_ce = false;

  /// Lambda used when auxiliary cross-entropy is switched on without an explicit value.
  static constexpr double kDefaultAuxLambda = 0.5;

  /// Throws DomainError on T <= 0, lambda outside [0, 1], or lambda < 1 without auxiliary CE.
  void validate() const;
};

/// KL(softmax(teacher / T) || softmax(student / T)).
double kl_term(std::span<const double> teacher_logits, std::span<const double> student_logits, double temperature);

/// Per-token mask. `sequence_ids[i]` groups tokens into sequences for SequenceLikelihood;
/// likelihoods are compared at temperature 1 with strict inequality.
Mask compute_mask(MaskStrategy strategy, const Tensor2& student_logits, const Tensor2& v1_logits,
                  std::span<const int> targets, std::span<const std::size_t> sequence_ids);

/// (1/n) sum_i [m_i KL(v1_i || s_i) + (1 - m_i) KL(v2_i || s_i)] at temperature T, mixed as
/// lambda * that + (1 - lambda) * mean cross-entropy(y, s) when auxiliary CE is on.
double compat_loss(const Tensor2& student_logits, const Tensor2& v1_logits, const Tensor2& v2_logits,
                   std::span<const int> targets, std::span<const std::uint8_t> mask, const DistillConfig& config);

/// The same loss recorded on `g` so it can be differentiated w.r.t. the student.
Var record_compat_loss(Graph& g, Var student_logits, const Tensor2& v1_logits, const Tensor2& v2_logits,
                       std::span<const int> targets, std::span<const std::uint8_t> mask, const DistillConfig& config);

/// Mean token cross-entropy against `targets`, recorded on `g`.
Var record_cross_entropy(Graph& g, Var logits, std::span<const int> targets);

}  // namespace compatkit::distill
