#include "compatkit/metrics.hpp"

#include <cmath>

namespace compatkit {

namespace {

void require_nonempty(std::span<const EvalRecord> records, const char* what) {
  if (records.empty()) throw EmptyLogError(std::string(what) + " of an empty log is undefined");
}

double fraction(std::size_t count, std::size_t n) {
  return static_cast<double>(count) / static_cast<double>(n);
}

constexpr std::size_t idx(FlipQuadrant q) { return static_cast<std::size_t>(q); }

}  // namespace

double negative_flip_rate(std::span<const EvalRecord> records, CorrectnessRule rule) {
  require_nonempty(records, "NFR");
  return fraction(count_quadrants(records, rule)[idx(FlipQuadrant::NegativeFlip)], records.size());
}

double positive_flip_rate(std::span<const EvalRecord> records, CorrectnessRule rule) {
  require_nonempty(records, "PFR");
  return fraction(count_quadrants(records, rule)[idx(FlipQuadrant::PositiveFlip)], records.size());
}

AccuracyPair accuracy(std::span<const EvalRecord> records, CorrectnessRule rule) {
  require_nonempty(records, "accuracy");
  std::size_t old_ok = 0;
  std::size_t new_ok = 0;
  for (const auto& r : records) {
    const auto c = judge(r, rule);
    old_ok += c.old_correct ? 1 : 0;
    new_ok += c.new_correct ? 1 : 0;
  }
  return {fraction(old_ok, records.size()), fraction(new_ok, records.size())};
}

double nfr_multiple_choice(std::span<const EvalRecord> records) {
  require_nonempty(records, "NFR_mc");
  std::size_t count = 0;
  for (const auto& r : records) {
    if (r.task != TaskKind::MultipleChoice) {
      throw TaskMismatchError("NFR_mc requires multiple_choice records, got " +
                              std::string(to_string(r.task)) + " record '" + r.instance_id + "'");
    }
    const auto c = judge(r, CorrectnessRule::ChoiceArgmax);
    if (!c.new_correct && r.pred_old.chosen() != r.pred_new.chosen()) ++count;
  }
  return fraction(count, records.size());
}

double instance_delta(const EvalRecord& record, const SimilarityMetric& metric) {
  return score(metric, record.pred_new, record) - score(metric, record.pred_old, record);
}

SmoothReport smooth_flip_rates(std::span<const EvalRecord> records, const SimilarityMetric& metric) {
  require_nonempty(records, "smoothed flip rates");
  SmoothReport out;
  out.d_values.reserve(records.size());
  std::size_t gains = 0;
  std::size_t regressions = 0;
  double gain_sum = 0.0;
  double regression_sum = 0.0;
  for (const auto& r : records) {
    const double d = instance_delta(r, metric);
    out.d_values.push_back(d);
    if (std::abs(d) < kDeltaTieTolerance) continue;
    if (d > 0.0) {
      ++gains;
      gain_sum += d;
    } else {
      ++regressions;
      regression_sum += -d;
    }
  }
  out.pfr_tilde = fraction(gains, records.size());
  out.nfr_tilde = fraction(regressions, records.size());
  out.m_g = gains ? gain_sum / static_cast<double>(gains) : 0.0;
  out.m_r = regressions ? regression_sum / static_cast<double>(regressions) : 0.0;
  return out;
}

double backward_trust_compatibility(std::span<const EvalRecord> records, CorrectnessRule rule) {
  const auto q = count_quadrants(records, rule);
  const auto old_correct = q[idx(FlipQuadrant::BothCorrect)] + q[idx(FlipQuadrant::NegativeFlip)];
  if (old_correct == 0) throw UndefinedRatioError("BTC is undefined: the old model has no correct records");
  return fraction(q[idx(FlipQuadrant::BothCorrect)], old_correct);
}

CompatibilityReport build_report(std::span<const EvalRecord> records, const SimilarityMetric& metric) {
  require_nonempty(records, "a compatibility report");
  CompatibilityReport report;
  report.task = records.front().task;
  report.metric = metric.name;
  report.n = records.size();
  for (const auto& r : records) {
    if (r.task != report.task) throw TaskMismatchError("log mixes task kinds");
  }
  if (!metric.applies_to(report.task)) {
    throw TaskMismatchError("metric '" + metric.name + "' does not apply to " +
                            std::string(to_string(report.task)) + " logs");
  }

  const auto rule = default_rule(report.task);
  report.quadrant_counts = count_quadrants(records, rule);
  const auto& q = report.quadrant_counts;
  report.nfr = fraction(q[idx(FlipQuadrant::NegativeFlip)], report.n);
  report.pfr = fraction(q[idx(FlipQuadrant::PositiveFlip)], report.n);
  const auto old_correct = q[idx(FlipQuadrant::BothCorrect)] + q[idx(FlipQuadrant::NegativeFlip)];
  const auto new_correct = q[idx(FlipQuadrant::BothCorrect)] + q[idx(FlipQuadrant::PositiveFlip)];
  if (old_correct > 0) report.btc = fraction(q[idx(FlipQuadrant::BothCorrect)], old_correct);

  if (report.task == TaskKind::MultipleChoice) report.nfr_mc = nfr_multiple_choice(records);
  report.smooth = smooth_flip_rates(records, metric);

  if (report.task == TaskKind::Generative) {
    double old_sum = 0.0;
    double new_sum = 0.0;
    for (const auto& r : records) {
      old_sum += score(metric, r.pred_old, r);
      new_sum += score(metric, r.pred_new, r);
    }
    report.acc_old = old_sum / static_cast<double>(report.n);
    report.acc_new = new_sum / static_cast<double>(report.n);
  } else {
    report.acc_old = fraction(old_correct, report.n);
    report.acc_new = fraction(new_correct, report.n);
  }
  return report;
}

DeltaReport compare_reports(const CompatibilityReport& base, const CompatibilityReport& candidate) {
  if (base.n != candidate.n) {
    throw MismatchError("reports cover different record counts (" + std::to_string(base.n) + " vs " +
                        std::to_string(candidate.n) + ")");
  }
  if (base.task != candidate.task) throw MismatchError("reports cover different task kinds");

  DeltaReport d;
  d.n = base.n;
  d.base_nfr = base.nfr;
  d.candidate_nfr = candidate.nfr;
  d.delta_nfr = candidate.nfr - base.nfr;
  if (base.nfr > 0.0) d.delta_pct_nfr = 100.0 * d.delta_nfr / base.nfr;
  d.delta_pfr = candidate.pfr - base.pfr;
  d.delta_acc = candidate.acc_new - base.acc_new;
  if (base.smooth && candidate.smooth) {
    d.delta_m_g = candidate.smooth->m_g - base.smooth->m_g;
    d.delta_m_r = candidate.smooth->m_r - base.smooth->m_r;
  }
  return d;
}

}  // namespace compatkit
