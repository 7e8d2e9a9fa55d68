#include <doctest.h>

#include "compatkit/training.hpp"

using namespace compatkit;
using namespace compatkit::distill;
using namespace compatkit::toy;

namespace {

// A context of one repeated token t, target (t + 1) mod V; learnable under mean pooling.
std::vector<TokenSequence> successor_data(std::size_t n, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TokenSequence> out;
  for (std::size_t i = 0; i < n; ++i) {
    TokenSequence s;
    s.tokens.assign(3, static_cast<int>(rng() % vocab));
    s.first_target = 2;
    s.targets = {static_cast<int>((s.tokens.back() + 1) % static_cast<int>(vocab))};
    s.tokens.push_back(s.targets[0]);
    out.push_back(s);
  }
  return out;
}

TaskModel fresh(ModelDims dims, std::uint64_t seed) {
  auto base = std::make_shared<BaseModel>(BaseModel::random(dims, seed, "v"));
  return {base, AdapterSet::init(*base, 4, 8.0, seed + 100)};
}

}  // namespace

TEST_CASE("make_batch flattens targets with their contexts") {
  std::vector<TokenSequence> seqs(2);
  seqs[0] = {{1, 2, 3, 4, 5}, 1, {3, 4, 5}};
  seqs[1] = {{6, 7}, 0, {7}};
  const auto b = make_batch(seqs, 3);
  REQUIRE(b.targets.size() == 4);
  CHECK(b.contexts[0] == std::vector<int>{1, 2});
  CHECK(b.contexts[1] == std::vector<int>{1, 2, 3});
  CHECK(b.contexts[2] == std::vector<int>{2, 3, 4});  // truncated to the last 3 tokens
  CHECK(b.contexts[3] == std::vector<int>{6});
  CHECK(b.targets == std::vector<int>{3, 4, 5, 7});
  CHECK(b.sequence_ids == std::vector<std::size_t>{0, 0, 0, 1});

  const std::vector<std::size_t> pick{1};
  CHECK(make_batch(seqs, pick, 3).targets == std::vector<int>{7});
}

TEST_CASE("task training lowers validation loss and keeps the best epoch") {
  const auto train = successor_data(300, 6, 1);
  const auto val = successor_data(80, 6, 2);
  const auto init = fresh({6, 4, 12}, 3);
  const double before = cross_entropy_loss(init, val);
  const auto out = train_task_adapter(init, train, val, {8, 0.03, 16, 5});
  REQUIRE(out.trace.epochs.size() == 8);
  REQUIRE(out.trace.selected_epoch >= 1);
  const TaskModel trained{init.base, out.adapter};
  const double after = cross_entropy_loss(trained, val);
  CHECK(after < 0.5 * before);
  double best = out.trace.epochs[0].val_loss;
  for (const auto& e : out.trace.epochs) best = std::min(best, e.val_loss);
  CHECK(out.trace.epochs[out.trace.selected_epoch - 1].val_loss == best);
  CHECK(after == doctest::Approx(best).epsilon(1e-12));
  CHECK(out.trace.objective == "cross_entropy");
}

TEST_CASE("zero learning rate leaves the adapter untouched") {
  const auto data = successor_data(40, 5, 1);
  const auto init = fresh({5, 4, 6}, 2);
  const auto out = train_task_adapter(init, data, data, {3, 0.0, 8, 0});
  CHECK(out.adapter == init.adapter);
}

TEST_CASE("training is deterministic in its seed") {
  const auto data = successor_data(60, 5, 1);
  const auto init = fresh({5, 4, 6}, 2);
  const auto a = train_task_adapter(init, data, data, {2, 0.01, 8, 9});
  const auto b = train_task_adapter(init, data, data, {2, 0.01, 8, 9});
  const auto c = train_task_adapter(init, data, data, {2, 0.01, 8, 10});
  CHECK(a.adapter == b.adapter);
  CHECK_FALSE(a.adapter == c.adapter);
}

TEST_CASE("compatibility training starts from the new model") {
  const auto train = successor_data(200, 6, 1);
  const auto val = successor_data(60, 6, 2);
  auto v1 = fresh({6, 4, 8}, 10);
  v1.adapter = train_task_adapter(v1, std::span(train).first(40), val, {2, 0.03, 16, 1}).adapter;
  auto v2 = fresh({6, 4, 12}, 20);
  v2.adapter = train_task_adapter(v2, train, val, {6, 0.03, 16, 2}).adapter;

  DistillConfig cfg;
  const auto zero = train_compat_adapter(v1, v2, train, val, cfg, {0, 0.01, 16, 3});
  CHECK(zero.adapter == v2.adapter);
  CHECK(zero.trace.selected_epoch == 0);

  // Aligning fully to v1 starts from a positive loss that training must reduce.
  cfg.strategy = MaskStrategy::UnmaskedV1;
  const auto out = train_compat_adapter(v1, v2, train, val, cfg, {3, 0.01, 16, 3});
  const TaskModel student{v2.base, out.adapter};
  CHECK(compat_loss_on(student, v1, v2, val, cfg) < compat_loss_on(v2, v1, v2, val, cfg));
  CHECK(out.trace.objective == "Unmasked_v1");

  auto other = fresh({7, 4, 8}, 30);
  CHECK_THROWS_AS(train_compat_adapter(other, v2, train, val, cfg, {1, 0.01, 16, 3}), ShapeError);
}

TEST_CASE("schedule validation") {
  const auto data = successor_data(10, 5, 1);
  const auto init = fresh({5, 4, 6}, 2);
  CHECK_THROWS_AS(train_task_adapter(init, data, data, {1, 0.01, 0, 0}), DomainError);
  CHECK_THROWS_AS(train_task_adapter(init, data, data, {1, -1.0, 4, 0}), DomainError);
  CHECK(train_task_adapter(init, data, data, {0, 0.01, 4, 0}).adapter == init.adapter);
}
