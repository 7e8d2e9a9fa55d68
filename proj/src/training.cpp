#include "compatkit/training.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <limits>
#include <numeric>
#include <random>

namespace compatkit::distill {

namespace {

using toy::AdapterSet;
using toy::TaskModel;

/// Adam with bias correction over every adapter factor.
class AdamState {
 public:
  explicit AdamState(const AdapterSet& adapter) {
    for (const auto& [name, pair] : adapter.layers) {
      moments_.emplace(name, std::pair{Moments(pair.a.size()), Moments(pair.b.size())});
    }
  }

  void step(AdapterSet& adapter, const toy::AdapterGradients& grads, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (auto& [name, pair] : adapter.layers) {
      const auto& g = grads.layers.at(name);
      auto& [ma, mb] = moments_.at(name);
      update(pair.a.values(), g.a.values(), ma, lr, c1, c2);
      update(pair.b.values(), g.b.values(), mb, lr, c1, c2);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  struct Moments {
    explicit Moments(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
    std::vector<double> m, v;
  };

  static void update(std::span<double> w, std::span<const double> g, Moments& mom, double lr, double c1, double c2) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      mom.m[i] = kBeta1 * mom.m[i] + (1.0 - kBeta1) * g[i];
      mom.v[i] = kBeta2 * mom.v[i] + (1.0 - kBeta2) * g[i] * g[i];
      w[i] -= lr * (mom.m[i] / c1) / (std::sqrt(mom.v[i] / c2) + kEps);
    }
  }

  std::map<std::string, std::pair<Moments, Moments>> moments_;
  std::size_t t_ = 0;
};

/// Records the loss for a batch given the student's logits node.
using Objective = std::function<Var(Graph&, Var student_logits, const TokenBatch&)>;

double evaluate_objective(const TaskModel& model, std::span<const TokenSequence> data, const Objective& objective) {
  const auto batch = make_batch(data, model.dims().context);
  Graph g;
  const Var logits = toy::record_logits(g, model, batch.contexts);
  return g.value(objective(g, logits, batch)).values()[0];
}

TrainedAdapter run_training(TaskModel student, std::span<const TokenSequence> train, std::span<const TokenSequence> val,
                            const TrainSchedule& schedule, const Objective& objective, std::string objective_name) {
  if (schedule.batch_size == 0) throw DomainError("batch size must be positive");
  if (!(schedule.learning_rate >= 0.0)) throw DomainError("learning rate must be non-negative");

  TrainedAdapter result{student.adapter, {std::move(objective_name), schedule.seed, {}, 0}};
  if (schedule.epochs == 0 || train.empty()) return result;

  std::mt19937_64 rng(schedule.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState adam(student.adapter);
  double best_val = std::numeric_limits<double>::infinity();
  const std::size_t context_len = student.dims().context;

  for (std::size_t epoch = 1; epoch <= schedule.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t token_count = 0;
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
      const auto stop = std::min(order.size(), start + schedule.batch_size);
      const auto batch = make_batch(train, std::span(order).subspan(start, stop - start), context_len);
      Graph g;
      toy::AdapterVars params;
      const Var logits = toy::record_logits(g, student, batch.contexts, &params);
      const Var loss = objective(g, logits, batch);
      const auto grads = toy::backward(g, loss, params);
      adam.step(student.adapter, grads, schedule.learning_rate);
      loss_sum += g.value(loss).values()[0] * static_cast<double>(batch.targets.size());
      token_count += batch.targets.size();
    }
    const double train_loss = loss_sum / static_cast<double>(token_count);
    const double val_loss = val.empty() ? train_loss : evaluate_objective(student, val, objective);
    result.trace.epochs.push_back({epoch, train_loss, val_loss});
    if (val_loss < best_val) {
      best_val = val_loss;
      result.adapter = student.adapter;
      result.trace.selected_epoch = epoch;
    }
  }
  return result;
}

Objective compat_objective(const TaskModel& v1, const TaskModel& v2, const DistillConfig& config) {
  return [&v1, &v2, config](Graph& g, Var student_logits, const TokenBatch& batch) {
    const Tensor2 v1_logits = toy::batch_logits(v1, batch.contexts);
    const Tensor2 v2_logits = toy::batch_logits(v2, batch.contexts);
    const Mask mask = compute_mask(config.strategy, g.value(student_logits), v1_logits, batch.targets, batch.sequence_ids);
    return record_compat_loss(g, student_logits, v1_logits, v2_logits, batch.targets, mask, config);
  };
}

Objective ce_objective() {
  return [](Graph& g, Var logits, const TokenBatch& batch) { return record_cross_entropy(g, logits, batch.targets); };
}

void check_compatible(const TaskModel& v1, const TaskModel& v2) {
  if (v1.dims().vocab != v2.dims().vocab || v1.dims().context != v2.dims().context) {
    throw ShapeError("old and new models must share vocabulary size and context length");
  }
}

}  // namespace

TokenBatch make_batch(std::span<const TokenSequence> sequences, std::span<const std::size_t> indices,
                      std::size_t context_len) {
  TokenBatch batch;
  for (std::size_t local = 0; local < indices.size(); ++local) {
    const auto& seq = sequences[indices[local]];
    for (std::size_t j = 0; j < seq.targets.size(); ++j) {
      const std::size_t end = seq.first_target + j + 1;
      if (end > seq.tokens.size()) throw ShapeError("target position beyond the end of its sequence");
      const std::size_t begin = end > context_len ? end - context_len : 0;
      batch.contexts.emplace_back(seq.tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                                  seq.tokens.begin() + static_cast<std::ptrdiff_t>(end));
      batch.targets.push_back(seq.targets[j]);
      batch.sequence_ids.push_back(local);
    }
  }
  return batch;
}

TokenBatch make_batch(std::span<const TokenSequence> sequences, std::size_t context_len) {
  std::vector<std::size_t> all(sequences.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_batch(sequences, all, context_len);
}

TrainedAdapter train_task_adapter(const TaskModel& init, std::span<const TokenSequence> train,
                                  std::span<const TokenSequence> val, const TrainSchedule& schedule) {
  return run_training(init, train, val, schedule, ce_objective(), "cross_entropy");
}

TrainedAdapter train_compat_adapter(const TaskModel& v1, const TaskModel& v2, std::span<const TokenSequence> train,
                                    std::span<const TokenSequence> val, const DistillConfig& config,
                                    const TrainSchedule& schedule) {
  check_compatible(v1, v2);
  config.validate();
  return run_training(v2, train, val, schedule, compat_objective(v1, v2, config), std::string(to_string(config.strategy)));
}

double cross_entropy_loss(const TaskModel& model, std::span<const TokenSequence> data) {
  return evaluate_objective(model, data, ce_objective());
}

double compat_loss_on(const TaskModel& student, const TaskModel& v1, const TaskModel& v2,
                      std::span<const TokenSequence> data, const DistillConfig& config) {
  check_compatible(v1, v2);
  config.validate();
  return evaluate_objective(student, data, compat_objective(v1, v2, config));
}

}  // namespace compatkit::distill
