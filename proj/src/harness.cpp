#include "compatkit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "compatkit/log_io.hpp"
#include "compatkit/report_io.hpp"

namespace compatkit::harness {

namespace {

enum SeedTag : std::uint32_t {
  kTaskTag = 0,
  kBaseV1 = 1,
  kBaseV2 = 2,
  kAdapterV1 = 11,
  kAdapterV2 = 12,
  kShuffleV1 = 21,
  kShuffleV2 = 22,
  kShuffleCompat = 31,
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::uint64_t shuffle_seed(const VersionPlan& plan) { return derive_seed(plan.adapter_seed, kShuffleV1); }

std::string record_id(std::size_t i) {
  std::ostringstream out;
  out << "test-" << std::setw(5) << std::setfill('0') << i;
  return out.str();
}

nlohmann::json trace_row(const std::string& model, const distill::TrainingTrace& trace, const distill::EpochRecord& e) {
  return {{"model", model},
          {"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"val_loss", e.val_loss},
          {"strategy", trace.objective},
          {"seed", trace.seed},
          {"selected", e.epoch == trace.selected_epoch}};
}

std::vector<EvalRecord> round_trip(std::span<const EvalRecord> records, const std::optional<std::filesystem::path>& path) {
  ParsedLog parsed;
  if (path) {
    write_log(*path, records);
    parsed = read_log(*path);
  } else {
    std::stringstream buffer;
    write_log(buffer, records);
    parsed = parse_log(buffer);
  }
  if (!parsed.issues.empty()) throw Error("exported log failed to re-parse: " + parsed.issues.front().reason);
  return std::move(parsed.records);
}

}  // namespace

std::string_view to_string(UpdateKind kind) {
  switch (kind) {
    case UpdateKind::MoreData:
      return "MoreData";
    case UpdateKind::LongerTraining:
      return "LongerTraining";
    case UpdateKind::BiggerModel:
      return "BiggerModel";
  }
  return "unknown";
}

UpdateKind parse_update_kind(std::string_view name) {
  if (name == "MoreData") return UpdateKind::MoreData;
  if (name == "LongerTraining") return UpdateKind::LongerTraining;
  if (name == "BiggerModel") return UpdateKind::BiggerModel;
  throw ConfigError("scenario.kind", "unknown update kind '" + std::string(name) +
                                         "' (valid: MoreData, LongerTraining, BiggerModel)");
}

VersionPlan plan_v1(const UpdateScenario& s, const ModelConfig& model, const TrainingConfig& training) {
  VersionPlan p;
  p.hidden = s.kind == UpdateKind::BiggerModel ? s.v1_hidden : model.hidden;
  p.epochs = s.kind == UpdateKind::LongerTraining ? s.v1_epochs : training.epochs;
  const double fraction = s.kind == UpdateKind::MoreData ? s.v1_data_fraction : 1.0;
  const auto n = s.task.n_train_split();
  p.train_count = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n);
  p.base_seed = derive_seed(s.seed, kBaseV1);
  p.adapter_seed = derive_seed(s.seed, kAdapterV1);
  return p;
}

VersionPlan plan_v2(const UpdateScenario& s, const ModelConfig& model, const TrainingConfig& training) {
  VersionPlan p;
  p.hidden = model.hidden;
  p.epochs = training.epochs;
  p.train_count = s.task.n_train_split();
  if (s.update_base) {
    p.base_seed = derive_seed(s.seed, kBaseV2);
    p.adapter_seed = derive_seed(s.seed, kAdapterV2);
  } else {
    const auto v1 = plan_v1(s, model, training);
    p.base_seed = v1.base_seed;
    p.adapter_seed = v1.adapter_seed;
  }
  return p;
}

TrainedVersion train_version(const VersionPlan& plan, const TaskData& data, const SyntheticTaskSpec& task,
                             const ModelConfig& model, const TrainingConfig& training, std::string version_tag) {
  const toy::ModelDims dims{task.vocab, task.context, plan.hidden};
  auto base = std::make_shared<const toy::BaseModel>(toy::BaseModel::random(dims, plan.base_seed, std::move(version_tag)));
  toy::TaskModel init{base, toy::AdapterSet::init(*base, model.rank, model.alpha, plan.adapter_seed)};
  const auto train = sequences_of(std::span(data.train).first(std::min(plan.train_count, data.train.size())));
  const auto val = sequences_of(data.val);
  const distill::TrainSchedule schedule{plan.epochs, training.learning_rate, training.batch_size, shuffle_seed(plan)};
  auto trained = distill::train_task_adapter(init, train, val, schedule);
  return {toy::TaskModel{base, std::move(trained.adapter)}, std::move(trained.trace)};
}

std::vector<Prediction> predict(const toy::TaskModel& model, std::span<const Sample> test, SyntheticTaskKind kind) {
  std::vector<Prediction> preds;
  preds.reserve(test.size());
  if (kind == SyntheticTaskKind::NextTokenClassification) {
    std::vector<std::vector<int>> contexts;
    for (const auto& s : test) {
      const auto& seq = s.sequence;
      contexts.emplace_back(seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(seq.first_target + 1));
    }
    const auto logits = toy::batch_logits(model, contexts);
    for (std::size_t i = 0; i < test.size(); ++i) {
      preds.push_back(Prediction::from_loglikelihoods(toy::log_softmax_t(logits.row(i), 1.0)));
    }
    return preds;
  }
  for (const auto& s : test) {
    const auto& seq = s.sequence;
    std::vector<int> context(seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(seq.first_target + 1));
    std::vector<int> generated;
    for (std::size_t j = 0; j < s.clean_targets.size(); ++j) {
      const std::size_t keep = std::min(context.size(), model.dims().context);
      const std::vector<std::vector<int>> window{{context.end() - static_cast<std::ptrdiff_t>(keep), context.end()}};
      const auto logits = toy::batch_logits(model, window);
      const auto row = logits.row(0);
      const int next = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      generated.push_back(next);
      context.push_back(next);
    }
    preds.push_back(Prediction::from_text(render_tokens(generated)));
  }
  return preds;
}

std::vector<EvalRecord> paired_log(std::span<const Sample> test, SyntheticTaskKind kind,
                                   std::span<const Prediction> old_preds, std::span<const Prediction> new_preds) {
  if (old_preds.size() != test.size() || new_preds.size() != test.size()) {
    throw ShapeError("one prediction per test sample required");
  }
  std::vector<EvalRecord> records;
  records.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    EvalRecord r;
    r.instance_id = record_id(i);
    if (kind == SyntheticTaskKind::NextTokenClassification) {
      r.task = TaskKind::MultipleChoice;
      r.ground_truth = static_cast<std::size_t>(test[i].clean_targets.front());
    } else {
      r.task = TaskKind::Generative;
      r.ground_truth = render_tokens(test[i].clean_targets);
    }
    r.pred_old = old_preds[i];
    r.pred_new = new_preds[i];
    records.push_back(std::move(r));
  }
  return records;
}

SimilarityMetric task_metric(SyntheticTaskKind kind) {
  return kind == SyntheticTaskKind::NextTokenClassification ? parse_metric("mc-accuracy") : parse_metric("rouge1-f1");
}

ExperimentResult run_update_experiment(const UpdateScenario& scenario, const ModelConfig& model,
                                       const TrainingConfig& training, const distill::DistillConfig& distill,
                                       const std::optional<std::filesystem::path>& out_dir) {
  distill.validate();
  const auto data = generate_task(scenario.task, derive_seed(scenario.seed, kTaskTag));
  const auto v1 = train_version(plan_v1(scenario, model, training), data, scenario.task, model, training, "v1");
  const auto v2 = train_version(plan_v2(scenario, model, training), data, scenario.task, model, training, "v2");

  const auto train = sequences_of(data.train);
  const auto val = sequences_of(data.val);
  const distill::TrainSchedule compat_schedule{training.compat_epochs, training.compat_learning_rate, training.batch_size,
                                               derive_seed(scenario.seed, kShuffleCompat)};
  auto compat = distill::train_compat_adapter(v1.model, v2.model, train, val, distill, compat_schedule);
  const toy::TaskModel compat_model{v2.model.base, std::move(compat.adapter)};

  const auto kind = scenario.task.kind;
  const auto p1 = predict(v1.model, data.test, kind);
  const auto p2 = predict(v2.model, data.test, kind);
  const auto pc = predict(compat_model, data.test, kind);

  if (out_dir) std::filesystem::create_directories(*out_dir);
  auto path_in = [&](const char* name) -> std::optional<std::filesystem::path> {
    if (!out_dir) return std::nullopt;
    return *out_dir / name;
  };

  ExperimentResult result;
  result.seed = scenario.seed;
  result.vanilla_log = round_trip(paired_log(data.test, kind, p1, p2), path_in("v1_v2.jsonl"));
  result.compat_log = round_trip(paired_log(data.test, kind, p1, pc), path_in("v1_compat.jsonl"));
  const auto metric = task_metric(kind);
  result.vanilla = build_report(result.vanilla_log, metric);
  result.compat = build_report(result.compat_log, metric);
  result.delta = compare_reports(result.vanilla, result.compat);
  result.trace_v1 = v1.trace;
  result.trace_v2 = v2.trace;
  result.trace_compat = std::move(compat.trace);

  if (out_dir) {
    write_json(*out_dir / "report_vanilla.json", to_json(result.vanilla));
    write_json(*out_dir / "report_compat.json", to_json(result.compat));
    write_json(*out_dir / "delta.json", to_json(result.delta));
    std::ofstream trace(*out_dir / "trace.jsonl");
    for (const auto& [name, t] : {std::pair{"v1", &result.trace_v1}, std::pair{"v2", &result.trace_v2},
                                  std::pair{"compat", &result.trace_compat}}) {
      for (const auto& e : t->epochs) trace << trace_row(name, *t, e).dump() << '\n';
    }
  }
  return result;
}

std::vector<GapRow> sweep_gap_vs_flips(std::span<const UpdateScenario> scenarios, const ModelConfig& model,
                                       const TrainingConfig& training) {
  std::vector<GapRow> rows;
  for (const auto& s : scenarios) {
    const auto data = generate_task(s.task, derive_seed(s.seed, kTaskTag));
    const auto v1 = train_version(plan_v1(s, model, training), data, s.task, model, training, "v1");
    const auto v2 = train_version(plan_v2(s, model, training), data, s.task, model, training, "v2");
    const auto log = paired_log(data.test, s.task.kind, predict(v1.model, data.test, s.task.kind),
                                predict(v2.model, data.test, s.task.kind));
    const auto report = build_report(log, task_metric(s.task.kind));
    rows.push_back({s.kind == UpdateKind::MoreData ? s.v1_data_fraction : 1.0, s.seed, report.acc_old, report.acc_new,
                    report.acc_new - report.acc_old, report.nfr});
  }
  return rows;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("spearman needs equally long samples");
  if (x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace compatkit::harness
