#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compatkit/training.hpp"

namespace compatkit::harness {

enum class SyntheticTaskKind {
  NextTokenClassification,  // predict one label token after a context; scored as multiple choice over V
  SequenceCopy,             // emit the successor-mapped copy of a source span; scored generatively
};

std::string_view to_string(SyntheticTaskKind kind);
/// Throws ConfigError("task.kind", ...).
SyntheticTaskKind parse_task_kind(std::string_view name);

struct SyntheticTaskSpec {
  SyntheticTaskKind kind = SyntheticTaskKind::NextTokenClassification;
  std::size_t vocab = 8;
  std::size_t context = 8;
  /// Train and validation together; split 0.8 / 0.2.
  std::size_t n_train = 1000;
  std::size_t n_test = 500;
  double noise_rate = 0.1;

  std::size_t n_train_split() const { return n_train * 8 / 10; }
  std::size_t n_val() const { return n_train - n_train_split(); }

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct Sample {
  distill::TokenSequence sequence;  // targets may be corrupted for train / val samples
  std::vector<int> clean_targets;
  bool corrupted = false;

  bool operator==(const Sample&) const = default;
};

struct TaskData {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;  // never corrupted
};

/// Deterministic in (spec, seed).
TaskData generate_task(const SyntheticTaskSpec& spec, std::uint64_t seed);

std::vector<distill::TokenSequence> sequences_of(std::span<const Sample> samples);

/// Space-separated "t<id>" rendering used for generative outputs and references.
std::string render_tokens(std::span<const int> tokens);

}  // namespace compatkit::harness
