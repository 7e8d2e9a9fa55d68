#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "compatkit/distill.hpp"
#include "compatkit/toymodel.hpp"

namespace compatkit::distill {

/// A token sequence with supervised next-token targets. targets[j] is the token that
/// follows tokens[0 .. first_target + j].
struct TokenSequence {
  std::vector<int> tokens;
  std::size_t first_target = 0;
  std::vector<int> targets;

  bool operator==(const TokenSequence&) const = default;
};

/// Flattened next-token predictions for a set of sequences.
struct TokenBatch {
  std::vector<std::vector<int>> contexts;
  std::vector<int> targets;
  std::vector<std::size_t> sequence_ids;
};

/// Contexts longer than `context_len` keep their most recent tokens.
TokenBatch make_batch(std::span<const TokenSequence> sequences, std::span<const std::size_t> indices,
                      std::size_t context_len);
TokenBatch make_batch(std::span<const TokenSequence> sequences, std::size_t context_len);

struct TrainSchedule {
  std::size_t epochs = 10;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainingTrace {
  std::string objective;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  /// Epoch whose adapter was kept; 0 means the initial adapter.
  std::size_t selected_epoch = 0;
};

struct TrainedAdapter {
  toy::AdapterSet adapter;
  TrainingTrace trace;
};

/// Adam on mean token cross-entropy; only the adapter is trained. After every epoch the
/// validation loss is measured and the adapter with the lowest one is returned.
TrainedAdapter train_task_adapter(const toy::TaskModel& init, std::span<const TokenSequence> train,
                                  std::span<const TokenSequence> val, const TrainSchedule& schedule);

/// Starts from v2's adapter on v2's base and minimizes the masked compatibility loss with
/// frozen v1 and v2 as teachers. Masks and teacher logits are recomputed every step.
/// Throws ShapeError when the two models disagree on vocabulary or context length.
TrainedAdapter train_compat_adapter(const toy::TaskModel& v1, const toy::TaskModel& v2,
                                    std::span<const TokenSequence> train, std::span<const TokenSequence> val,
                                    const DistillConfig& config, const TrainSchedule& schedule);

/// Mean cross-entropy of `model` on `data`.
double cross_entropy_loss(const toy::TaskModel& model, std::span<const TokenSequence> data);

/// Masked compatibility loss of `student` on `data`, mask computed from the student.
double compat_loss_on(const toy::TaskModel& student, const toy::TaskModel& v1, const toy::TaskModel& v2,
                      std::span<const TokenSequence> data, const DistillConfig& config);

}  // namespace compatkit::distill
