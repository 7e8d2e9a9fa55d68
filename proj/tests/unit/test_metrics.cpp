#include <doctest.h>

#include <cmath>
#include <random>

#include "compatkit/metrics.hpp"
#include "compatkit/report_io.hpp"
#include "oracles.hpp"

using namespace compatkit;

namespace {

std::vector<EvalRecord> to_log(const std::vector<oracle::McCase>& cases) {
  std::vector<EvalRecord> log;
  for (std::size_t i = 0; i < cases.size(); ++i) log.push_back(oracle::mc_record("r" + std::to_string(i), cases[i]));
  return log;
}

// Old model right on `old_ok` records, new right on `new_ok`, with exactly `nf` negative flips.
std::vector<oracle::McCase> quadrant_log(std::size_t n, std::size_t old_ok, std::size_t new_ok, std::size_t nf) {
  const std::size_t bc = old_ok - nf;
  const std::size_t pf = new_ok - bc;
  std::vector<oracle::McCase> cases;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < bc) cases.push_back({0, 0, 0});
    else if (i < bc + nf) cases.push_back({0, 0, 1});
    else if (i < bc + nf + pf) cases.push_back({0, 1, 0});
    else cases.push_back({0, 1, 2});
  }
  return cases;
}

}  // namespace

TEST_CASE("report matches the brute-force oracle on random multiple-choice logs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<oracle::McCase> cases(1 + rng() % 40);
    for (auto& c : cases) c = {rng() % 4, rng() % 4, rng() % 4};
    std::vector<EvalRecord> log;
    for (std::size_t i = 0; i < cases.size(); ++i) log.push_back(oracle::mc_record(std::to_string(i), cases[i], 4));
    const auto want = oracle::brute_force(cases);
    const auto got = build_report(log, default_metric(TaskKind::MultipleChoice));
    CHECK(got.n == want.n);
    CHECK(got.nfr == doctest::Approx(want.nfr).epsilon(1e-15));
    CHECK(got.pfr == doctest::Approx(want.pfr).epsilon(1e-15));
    CHECK(got.acc_old == doctest::Approx(want.acc_old).epsilon(1e-15));
    CHECK(got.acc_new == doctest::Approx(want.acc_new).epsilon(1e-15));
    CHECK(*got.nfr_mc == doctest::Approx(want.nfr_mc).epsilon(1e-15));
    CHECK(got.btc.has_value() == want.btc.has_value());
    if (want.btc) CHECK(*got.btc == doctest::Approx(*want.btc).epsilon(1e-15));
    CHECK(got.quadrant_counts[3] == want.negative);
    // acc_new - acc_old = PFR - NFR
    CHECK(got.acc_new - got.acc_old == doctest::Approx(got.pfr - got.nfr).epsilon(1e-12));
    CHECK(*got.nfr_mc <= 1.0 - got.acc_new + 1e-15);
    const auto& s = *got.smooth;
    double mean_d = 0;
    for (double d : s.d_values) mean_d += d;
    mean_d /= static_cast<double>(s.d_values.size());
    CHECK(mean_d == doctest::Approx(s.pfr_tilde * s.m_g - s.nfr_tilde * s.m_r).epsilon(1e-12));
  }
}

TEST_CASE("single-record and empty logs") {
  const auto nf = to_log({{0, 0, 1}});
  CHECK(negative_flip_rate(nf, CorrectnessRule::ChoiceArgmax) == 1.0);
  CHECK(positive_flip_rate(nf, CorrectnessRule::ChoiceArgmax) == 0.0);
  CHECK(backward_trust_compatibility(nf, CorrectnessRule::ChoiceArgmax) == 0.0);

  const auto none_old = to_log({{0, 1, 0}, {2, 1, 1}});
  CHECK_THROWS_AS(backward_trust_compatibility(none_old, CorrectnessRule::ChoiceArgmax), UndefinedRatioError);
  CHECK_FALSE(build_report(none_old, default_metric(TaskKind::MultipleChoice)).btc.has_value());

  const std::vector<EvalRecord> empty;
  CHECK_THROWS_AS(negative_flip_rate(empty, CorrectnessRule::ChoiceArgmax), EmptyLogError);
  CHECK_THROWS_AS(build_report(empty, default_metric(TaskKind::MultipleChoice)), EmptyLogError);
}

TEST_CASE("identical old and new predictions have no flips") {
  const auto log = to_log({{0, 0, 0}, {1, 2, 2}, {2, 2, 2}, {0, 1, 1}});
  const auto r = build_report(log, default_metric(TaskKind::MultipleChoice));
  CHECK(r.nfr == 0.0);
  CHECK(r.pfr == 0.0);
  CHECK(*r.nfr_mc == 0.0);
  CHECK(*r.btc == 1.0);
  CHECK(r.smooth->nfr_tilde == 0.0);
}

TEST_CASE("NFR_mc counts wrong-and-different only") {
  // new wrong but same as old: not inconsistent; new wrong and different: inconsistent.
  const auto log = to_log({{0, 1, 1}, {0, 1, 2}, {0, 0, 2}, {0, 2, 0}});
  CHECK(nfr_multiple_choice(log) == 0.5);
  const std::vector<EvalRecord> text{oracle::text_record("x", TaskKind::ExactMatch, "a", "a", "b")};
  CHECK_THROWS_AS(nfr_multiple_choice(text), TaskMismatchError);
}

TEST_CASE("smoothed flips on generative logs") {
  // D = 1 - 0.8 = 0.2 (gain), 0 - 1 = -1 (regression), 0.5 - 0.5 (tie), 1 - 0 (gain)
  std::vector<EvalRecord> log{
      oracle::text_record("a", TaskKind::Generative, "the cat sat", "the cat", "the cat sat"),
      oracle::text_record("b", TaskKind::Generative, "x y", "x y", "z"),
      oracle::text_record("c", TaskKind::Generative, "p q", "p", "q"),
      oracle::text_record("d", TaskKind::Generative, "k", "", "k"),
  };
  const auto s = smooth_flip_rates(log, parse_metric("rouge1-f1"));
  CHECK(s.pfr_tilde == 0.5);
  CHECK(s.nfr_tilde == 0.25);
  CHECK(s.m_g == doctest::Approx((0.2 + 1.0) / 2));
  CHECK(s.m_r == doctest::Approx(1.0));
  CHECK(s.d_values[2] == 0.0);

  const auto r = build_report(log, parse_metric("rouge1-f1"));
  CHECK(r.acc_old == doctest::Approx((0.8 + 1.0 + 2.0 / 3.0 + 0.0) / 4));
  CHECK(r.acc_new == doctest::Approx((1.0 + 0.0 + 2.0 / 3.0 + 1.0) / 4));
  // Binary flips use trimmed exact match.
  CHECK(r.nfr == 0.25);
  CHECK(r.pfr == 0.5);
  CHECK_FALSE(r.nfr_mc.has_value());
}

TEST_CASE("a tie below the tolerance counts toward neither rate") {
  std::vector<EvalRecord> log{oracle::text_record("a", TaskKind::ExactMatch, "x", "x", "x")};
  const auto s = smooth_flip_rates(log, parse_metric("exact-match"));
  CHECK(s.pfr_tilde == 0.0);
  CHECK(s.nfr_tilde == 0.0);
  CHECK(s.m_g == 0.0);
  CHECK(s.m_r == 0.0);
}

TEST_CASE("build_report rejects mixed tasks and foreign metrics") {
  std::vector<EvalRecord> log{oracle::mc_record("a", {0, 0, 0}),
                              oracle::text_record("b", TaskKind::ExactMatch, "x", "x", "x")};
  CHECK_THROWS_AS(build_report(log, default_metric(TaskKind::MultipleChoice)), TaskMismatchError);
  CHECK_THROWS_AS(build_report(std::span(log).first(1), parse_metric("rouge1-f1")), TaskMismatchError);
}

TEST_CASE("reference-row synthetic log implies PFR 10.44 and a -40.60 percent change") {
  const auto base = build_report(to_log(quadrant_log(10000, 7274, 7291, 1027)), default_metric(TaskKind::MultipleChoice));
  CHECK(base.acc_old == doctest::Approx(0.7274));
  CHECK(base.acc_new == doctest::Approx(0.7291));
  CHECK(base.nfr == doctest::Approx(0.1027));
  CHECK(base.pfr == doctest::Approx(0.1044));

  const auto cand = build_report(to_log(quadrant_log(10000, 7274, 7291, 610)), default_metric(TaskKind::MultipleChoice));
  const auto d = compare_reports(base, cand);
  CHECK(d.delta_nfr == doctest::Approx(-0.0417));
  CHECK(*d.delta_pct_nfr == doctest::Approx(-40.60).epsilon(0.05 / 40.60));
  CHECK(format_percent(d.delta_nfr) == "-4.17");
}

TEST_CASE("compare_reports") {
  CompatibilityReport a, b;
  a.n = b.n = 10;
  a.nfr = 0.2;
  b.nfr = 0.1;
  a.pfr = 0.1;
  b.pfr = 0.3;
  a.acc_new = 0.6;
  b.acc_new = 0.7;
  auto d = compare_reports(a, b);
  CHECK(d.delta_nfr == doctest::Approx(-0.1));
  CHECK(*d.delta_pct_nfr == doctest::Approx(-50.0));
  CHECK(d.delta_pfr == doctest::Approx(0.2));
  CHECK(d.delta_acc == doctest::Approx(0.1));
  CHECK_FALSE(d.delta_m_g.has_value());

  a.nfr = 0.0;
  d = compare_reports(a, b);
  CHECK_FALSE(d.delta_pct_nfr.has_value());
  CHECK(format_delta_table(d).find("undefined") != std::string::npos);

  b.n = 11;
  CHECK_THROWS_AS(compare_reports(a, b), MismatchError);
  b.n = 10;
  b.task = TaskKind::ExactMatch;
  CHECK_THROWS_AS(compare_reports(a, b), MismatchError);
}
