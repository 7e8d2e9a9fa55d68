#include "compatkit/tasks.hpp"

#include <random>

#include "compatkit/errors.hpp"

namespace compatkit::harness {

std::string_view to_string(SyntheticTaskKind kind) {
  switch (kind) {
    case SyntheticTaskKind::NextTokenClassification:
      return "NextTokenClassification";
    case SyntheticTaskKind::SequenceCopy:
      return "SequenceCopy";
  }
  return "unknown";
}

SyntheticTaskKind parse_task_kind(std::string_view name) {
  if (name == "NextTokenClassification") return SyntheticTaskKind::NextTokenClassification;
  if (name == "SequenceCopy") return SyntheticTaskKind::SequenceCopy;
  throw ConfigError("task.kind", "unknown task kind '" + std::string(name) +
                                     "' (valid: NextTokenClassification, SequenceCopy)");
}

void SyntheticTaskSpec::validate() const {
  if (vocab < 3) throw ConfigError("task.vocab", "must be at least 3");
  if (kind == SyntheticTaskKind::SequenceCopy && context < 2) throw ConfigError("task.context", "must be at least 2");
  if (context < 1) throw ConfigError("task.context", "must be positive");
  if (n_train_split() < 1 || n_val() < 1) throw ConfigError("task.n_train", "too small to split 0.8 / 0.2");
  if (n_test < 1) throw ConfigError("task.n_test", "must be positive");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ConfigError("task.noise_rate", "must lie in [0, 1]");
}

namespace {

/// Hidden labelling rule for classification: label = argmax_k sum_j count_j * R[j][k].
class ClassificationRule {
 public:
  ClassificationRule(std::size_t vocab, std::mt19937_64& rng) : vocab_(vocab), scores_(vocab * vocab) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& s : scores_) s = dist(rng);
  }

  int operator()(std::span<const int> context) const {
    std::vector<double> total(vocab_, 0.0);
    for (int tok : context)
      for (std::size_t k = 0; k < vocab_; ++k) total[k] += scores_[static_cast<std::size_t>(tok) * vocab_ + k];
    std::size_t best = 0;
    for (std::size_t k = 1; k < vocab_; ++k)
      if (total[k] > total[best]) best = k;
    return static_cast<int>(best);
  }

 private:
  std::size_t vocab_;
  std::vector<double> scores_;
};

int different_token(int token, std::size_t vocab, int lowest, std::mt19937_64& rng) {
  const auto span = static_cast<int>(vocab) - lowest;
  std::uniform_int_distribution<int> dist(0, span - 2);
  const int draw = lowest + dist(rng);
  return draw >= token ? draw + 1 : draw;
}

int successor(int token, std::size_t vocab) { return 1 + (token % static_cast<int>(vocab - 1)); }

Sample make_classification(const SyntheticTaskSpec& spec, const ClassificationRule& rule, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> tok(0, static_cast<int>(spec.vocab) - 1);
  Sample s;
  s.sequence.tokens.resize(spec.context);
  for (auto& t : s.sequence.tokens) t = tok(rng);
  s.sequence.first_target = spec.context - 1;
  s.clean_targets = {rule(s.sequence.tokens)};
  s.sequence.targets = s.clean_targets;
  return s;
}

/// Source span of k = context / 2 tokens from 1..V-1, separator 0, then the mapped copy
/// (teacher-forced; the last target token is never fed back).
Sample make_copy(const SyntheticTaskSpec& spec, std::mt19937_64& rng) {
  const std::size_t k = spec.context / 2;
  std::uniform_int_distribution<int> tok(1, static_cast<int>(spec.vocab) - 1);
  Sample s;
  std::vector<int> source(k);
  for (auto& t : source) t = tok(rng);
  for (int t : source) s.clean_targets.push_back(successor(t, spec.vocab));
  s.sequence.tokens = source;
  s.sequence.tokens.push_back(0);
  s.sequence.tokens.insert(s.sequence.tokens.end(), s.clean_targets.begin(), s.clean_targets.end() - 1);
  s.sequence.first_target = k;
  s.sequence.targets = s.clean_targets;
  return s;
}

}  // namespace

TaskData generate_task(const SyntheticTaskSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  const bool classification = spec.kind == SyntheticTaskKind::NextTokenClassification;
  const ClassificationRule rule(spec.vocab, rng);
  std::bernoulli_distribution corrupt(spec.noise_rate);

  auto draw = [&] { return classification ? make_classification(spec, rule, rng) : make_copy(spec, rng); };

  TaskData data;
  for (std::size_t i = 0; i < spec.n_train; ++i) {
    Sample s = draw();
    if (corrupt(rng)) {
      s.corrupted = true;
      auto& targets = s.sequence.targets;
      if (classification) {
        targets[0] = different_token(targets[0], spec.vocab, 0, rng);
      } else {
        std::uniform_int_distribution<std::size_t> pos(0, targets.size() - 1);
        auto& t = targets[pos(rng)];
        t = different_token(t, spec.vocab, 1, rng);
      }
    }
    (i < spec.n_train_split() ? data.train : data.val).push_back(std::move(s));
  }
  for (std::size_t i = 0; i < spec.n_test; ++i) data.test.push_back(draw());
  return data;
}

std::vector<distill::TokenSequence> sequences_of(std::span<const Sample> samples) {
  std::vector<distill::TokenSequence> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.sequence);
  return out;
}

std::string render_tokens(std::span<const int> tokens) {
  std::string out;
  for (int t : tokens) {
    if (!out.empty()) out += ' ';
    out += 't' + std::to_string(t);
  }
  return out;
}

}  // namespace compatkit::harness
