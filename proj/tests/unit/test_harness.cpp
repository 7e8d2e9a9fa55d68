#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "compatkit/experiment.hpp"
#include "compatkit/harness.hpp"
#include "compatkit/log_io.hpp"

using namespace compatkit;
using namespace compatkit::harness;

namespace {

UpdateScenario small_scenario(SyntheticTaskKind kind = SyntheticTaskKind::NextTokenClassification) {
  UpdateScenario s;
  s.task.kind = kind;
  s.task.vocab = 8;
  s.task.context = 6;
  s.task.n_train = 300;
  s.task.n_test = 120;
  return s;
}

TrainingConfig quick_training() {
  TrainingConfig t;
  t.epochs = 3;
  t.compat_epochs = 2;
  return t;
}

}  // namespace

TEST_CASE("task generation is deterministic and split 80/20") {
  SyntheticTaskSpec spec;
  const auto a = generate_task(spec, 5);
  const auto b = generate_task(spec, 5);
  const auto c = generate_task(spec, 6);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK_FALSE(a.train == c.train);
  CHECK(a.train.size() == 800);
  CHECK(a.val.size() == 200);
  CHECK(a.test.size() == 500);
}

TEST_CASE("noise corrupts the requested fraction of training targets only") {
  SyntheticTaskSpec spec;
  spec.noise_rate = 0.5;
  const auto d = generate_task(spec, 1);
  std::size_t corrupted = 0;
  for (const auto* part : {&d.train, &d.val}) {
    for (const auto& s : *part) {
      if (s.corrupted) {
        ++corrupted;
        CHECK(s.sequence.targets != s.clean_targets);
      } else {
        CHECK(s.sequence.targets == s.clean_targets);
      }
    }
  }
  CHECK(corrupted >= 450);
  CHECK(corrupted <= 550);
  for (const auto& s : d.test) CHECK_FALSE(s.corrupted);

  spec.noise_rate = 0.0;
  for (const auto& s : generate_task(spec, 1).train) CHECK_FALSE(s.corrupted);
}

TEST_CASE("classification samples") {
  SyntheticTaskSpec spec;
  const auto d = generate_task(spec, 2);
  std::vector<int> seen(spec.vocab, 0);
  for (const auto& s : d.test) {
    CHECK(s.sequence.tokens.size() == spec.context);
    CHECK(s.sequence.first_target == spec.context - 1);
    REQUIRE(s.clean_targets.size() == 1);
    seen[static_cast<std::size_t>(s.clean_targets[0])] = 1;
  }
  int distinct = 0;
  for (int v : seen) distinct += v;
  CHECK(distinct >= 3);
}

TEST_CASE("copy samples") {
  SyntheticTaskSpec spec;
  spec.kind = SyntheticTaskKind::SequenceCopy;
  spec.context = 8;
  spec.noise_rate = 0.0;
  const auto d = generate_task(spec, 3);
  for (const auto& s : d.test) {
    const auto& t = s.sequence.tokens;
    REQUIRE(t.size() == 8);  // 4 source, separator, 3 fed-back targets
    CHECK(t[4] == 0);
    CHECK(s.sequence.first_target == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(t[i] >= 1);
      CHECK(s.clean_targets[i] == 1 + t[i] % 7);
    }
    CHECK(t[5] == s.clean_targets[0]);
    CHECK(t[7] == s.clean_targets[2]);
  }
  CHECK(render_tokens(std::vector<int>{3, 0, 12}) == "t3 t0 t12");
  CHECK(render_tokens(std::vector<int>{}).empty());
}

TEST_CASE("task spec validation names the field") {
  auto field_of = [](SyntheticTaskSpec spec) {
    try {
      spec.validate();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string();
  };
  SyntheticTaskSpec s;
  CHECK(field_of(s).empty());
  s.vocab = 2;
  CHECK(field_of(s) == "task.vocab");
  s = {};
  s.noise_rate = 1.5;
  CHECK(field_of(s) == "task.noise_rate");
  s = {};
  s.n_train = 1;
  CHECK(field_of(s) == "task.n_train");
  s = {};
  s.n_test = 0;
  CHECK(field_of(s) == "task.n_test");
}

TEST_CASE("version plans") {
  UpdateScenario s;
  ModelConfig m;
  TrainingConfig t;
  const auto v1 = plan_v1(s, m, t);
  const auto v2 = plan_v2(s, m, t);
  CHECK(v1.train_count == 240);
  CHECK(v2.train_count == 800);
  CHECK(v1.base_seed != v2.base_seed);

  s.kind = UpdateKind::BiggerModel;
  CHECK(plan_v1(s, m, t).hidden == s.v1_hidden);
  CHECK(plan_v1(s, m, t).train_count == 800);
  s.kind = UpdateKind::LongerTraining;
  CHECK(plan_v1(s, m, t).epochs == s.v1_epochs);

  s.update_base = false;
  CHECK(plan_v2(s, m, t).base_seed == plan_v1(s, m, t).base_seed);
  CHECK(plan_v2(s, m, t).adapter_seed == plan_v1(s, m, t).adapter_seed);
  CHECK_THROWS_AS(parse_update_kind("Bigger"), ConfigError);
}

TEST_CASE("an update that changes nothing has no flips") {
  auto s = small_scenario();
  s.v1_data_fraction = 1.0;
  s.update_base = false;
  const auto r = run_update_experiment(s, {}, quick_training(), {});
  CHECK(r.vanilla.nfr == 0.0);
  CHECK(r.vanilla.pfr == 0.0);
  CHECK(r.vanilla.acc_old == r.vanilla.acc_new);
  CHECK(*r.vanilla.nfr_mc == 0.0);
}

TEST_CASE("experiments are deterministic and write re-parseable artifacts") {
  const auto dir = std::filesystem::temp_directory_path() / "compatkit_harness_test";
  std::filesystem::remove_all(dir);
  auto s = small_scenario();
  s.seed = 3;
  const auto a = run_update_experiment(s, {}, quick_training(), {}, dir);
  const auto b = run_update_experiment(s, {}, quick_training(), {});
  CHECK(a.vanilla == b.vanilla);
  CHECK(a.compat == b.compat);
  CHECK(a.delta == b.delta);
  for (const char* f : {"v1_v2.jsonl", "v1_compat.jsonl", "report_vanilla.json", "report_compat.json", "delta.json",
                        "trace.jsonl"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const auto log = read_log(dir / "v1_v2.jsonl");
  CHECK(log.records == a.vanilla_log);
  CHECK(log.records.front().instance_id == "test-00000");
  CHECK(validate_log(log.records).empty());
  CHECK(a.trace_v1.epochs.size() == 3);
  CHECK(a.trace_compat.objective == "StudentIncorrect");
  std::filesystem::remove_all(dir);
}

TEST_CASE("copy task runs end to end with a generative report") {
  auto s = small_scenario(SyntheticTaskKind::SequenceCopy);
  const auto r = run_update_experiment(s, {}, quick_training(), {});
  CHECK(r.vanilla.task == TaskKind::Generative);
  CHECK(r.vanilla.metric == "rouge1-f1");
  REQUIRE(r.vanilla.smooth.has_value());
  CHECK(r.vanilla.smooth->d_values.size() == 120);
  CHECK(r.vanilla.acc_new >= 0.0);
  CHECK(r.vanilla.acc_new <= 1.0);
}

TEST_CASE("gap sweep") {
  auto base = small_scenario();
  base.task.n_train = 1500;
  base.task.n_test = 400;
  std::vector<UpdateScenario> scenarios;
  for (double f : {0.1, 0.5, 0.9}) {
    auto s = base;
    s.v1_data_fraction = f;
    scenarios.push_back(s);
  }
  auto same = base;
  same.v1_data_fraction = 1.0;
  same.update_base = false;
  scenarios.push_back(same);
  const auto rows = sweep_gap_vs_flips(scenarios, {}, quick_training());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].v1_data_fraction == 0.1);
  CHECK(rows[0].gap > rows[2].gap);
  CHECK(rows[0].acc_new == rows[1].acc_new);
  for (const auto& r : rows) CHECK(r.gap == doctest::Approx(r.acc_new - r.acc_old));
  CHECK(rows[3].gap == 0.0);
  CHECK(rows[3].nfr == 0.0);
}

TEST_CASE("spearman") {
  const std::vector<double> x{1, 2, 3, 4}, up{10, 20, 30, 40}, down{4, 3, 2, 1}, flat{1, 1, 1, 1};
  CHECK(*spearman(x, up) == doctest::Approx(1.0));
  CHECK(*spearman(x, down) == doctest::Approx(-1.0));
  CHECK_FALSE(spearman(x, flat).has_value());
  // Ties get average ranks: ranks(y) = (1.5, 1.5, 3, 4).
  const std::vector<double> tied{5, 5, 6, 7};
  CHECK(*spearman(x, tied) == doctest::Approx(0.9486832981));
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("experiment config parsing") {
  const auto def = default_experiment_config();
  CHECK(def.seeds.size() == 5);
  CHECK(def.scenario.v1_data_fraction == 0.3);
  CHECK(parse_experiment_config(to_json(def)).distill.lambda == def.distill.lambda);

  auto field_of = [](const char* text) {
    try {
      parse_experiment_config(nlohmann::json::parse(text));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string();
  };
  CHECK(field_of(R"({"distill":{"strategy":"Nope"}})") == "distill.strategy");
  CHECK(field_of(R"({"distill":{"aux_ce":false,"lambda":0.5}})") == "distill.lambda");
  CHECK(field_of(R"({"task":{"vocab":2}})") == "task.vocab");
  CHECK(field_of(R"({"training":{"epoch":3}})") == "training.epoch");
  CHECK(field_of(R"({"seeds":[]})") == "seeds");
  CHECK(field_of(R"({"distill":{"aux_ce":false}})").empty());
  const auto pure = parse_experiment_config(nlohmann::json::parse(R"({"distill":{"aux_ce":false}})"));
  CHECK(pure.distill.lambda == 1.0);
}

TEST_CASE("bundled config file matches the built-in default") {
  const auto path = std::filesystem::path(COMPATKIT_SOURCE_DIR) / "configs" / "default_experiment.json";
  auto loaded = load_experiment_config(path);
  loaded.sweep_fractions.clear();
  CHECK(to_json(loaded) == to_json(default_experiment_config()));
}

TEST_CASE("seed summary uses the sample standard deviation") {
  const auto s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.stddev == doctest::Approx(1.2909944487));
  CHECK(summarize({7.0}).stddev == 0.0);
}
