#include <doctest.h>

#include <random>

#include "compatkit/similarity.hpp"
#include "oracles.hpp"

using namespace compatkit;

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  const auto t = tokenize("The cat, the CAT's hat!!  42x");
  const std::vector<std::string> want{"the", "cat", "the", "cat", "s", "hat", "42x"};
  CHECK(t == want);
  CHECK(tokenize("  ...  ").empty());
}

TEST_CASE("rouge hand cases") {
  // Candidate is a strict subset of the reference: P = 1, R = 2/3, F1 = 0.8.
  CHECK(rouge_n("the cat", "the cat sat", 1, RougeStat::Precision) == 1.0);
  CHECK(rouge_n("the cat", "the cat sat", 1, RougeStat::Recall) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(rouge_n("the cat", "the cat sat", 1, RougeStat::F1) == doctest::Approx(0.8).epsilon(1e-15));

  // Clipping: "the" appears 3 times in the candidate but once in the reference.
  CHECK(rouge_n("the the the", "the cat", 1, RougeStat::Precision) == doctest::Approx(1.0 / 3.0));
  CHECK(rouge_n("the the the", "the cat", 1, RougeStat::Recall) == doctest::Approx(0.5));

  // Bigrams: {the cat, cat sat} vs {the cat, cat ran}.
  CHECK(rouge_n("the cat sat", "the cat ran", 2, RougeStat::F1) == doctest::Approx(0.5));
  CHECK(rouge_n("a b", "b a", 2, RougeStat::F1) == 0.0);
  CHECK(rouge_n("Hello, World", "hello world", 2, RougeStat::F1) == 1.0);
}

TEST_CASE("rouge empty conventions") {
  CHECK(rouge_n("", "", 1, RougeStat::F1) == 1.0);
  CHECK(rouge_n("!!", "  ", 2, RougeStat::Recall) == 1.0);
  CHECK(rouge_n("", "x", 1, RougeStat::F1) == 0.0);
  CHECK(rouge_n("x", "", 1, RougeStat::Precision) == 0.0);
  // One token has no bigrams while the other side has one.
  CHECK(rouge_n("x", "x y", 2, RougeStat::F1) == 0.0);
  CHECK_THROWS_AS(rouge_n("a", "a", 0, RougeStat::F1), DomainError);
}

TEST_CASE("exact match and mc accuracy") {
  CHECK(exact_match01("abc", "abc") == 1.0);
  CHECK(exact_match01(" abc ", "abc") == 1.0);
  CHECK(exact_match01("abd", "abc") == 0.0);
  CHECK(mc_correct(Prediction::from_loglikelihoods({-2.0, -0.1, -0.1}), 1));
  CHECK_FALSE(mc_correct(Prediction::from_loglikelihoods({-2.0, -0.1, -0.1}), 2));
  CHECK_THROWS_AS(mc_correct(Prediction::from_text("A"), 0), TaskMismatchError);
}

TEST_CASE("parse_metric") {
  CHECK(parse_metric("exact-match").kind == decltype(SimilarityMetric::kind){ExactMatch01{}});
  CHECK(parse_metric("mc-accuracy").kind == decltype(SimilarityMetric::kind){MultipleChoiceAccuracy{}});
  CHECK(parse_metric("rouge2-recall").kind == decltype(SimilarityMetric::kind){RougeN{2, RougeStat::Recall}});
  CHECK(parse_metric("rouge1-f1").name == "rouge1-f1");
  for (const char* bad : {"rouge", "rouge0-f1", "rouge1", "rouge1-f2", "bleu", ""}) {
    CAPTURE(bad);
    try {
      parse_metric(bad);
      FAIL("accepted");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "metric");
    }
  }
}

TEST_CASE("metrics apply only to matching tasks") {
  CHECK(parse_metric("mc-accuracy").applies_to(TaskKind::MultipleChoice));
  CHECK_FALSE(parse_metric("mc-accuracy").applies_to(TaskKind::Generative));
  CHECK(parse_metric("rouge1-f1").applies_to(TaskKind::Generative));
  CHECK_FALSE(parse_metric("exact-match").applies_to(TaskKind::MultipleChoice));
  CHECK(default_metric(TaskKind::Generative).name == "rouge1-f1");

  const auto r = oracle::text_record("x", TaskKind::Generative, "a b", "a", "a b");
  CHECK(score(parse_metric("rouge1-recall"), r.pred_old, r) == doctest::Approx(0.5));
  CHECK_THROWS_AS(score(parse_metric("mc-accuracy"), r.pred_old, r), TaskMismatchError);
}

TEST_CASE("rouge agrees with the merge-count oracle on random strings") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> vocab{"a", "b", "c", "dd", "E", "f1"};
  const std::vector<std::string> seps{" ", ", ", "-", "  "};
  auto sentence = [&] {
    std::string s;
    const auto len = rng() % 9;
    for (std::size_t i = 0; i < len; ++i) s += vocab[rng() % vocab.size()] + seps[rng() % seps.size()];
    return s;
  };
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = sentence();
    const auto b = sentence();
    const std::size_t n = 1 + rng() % 3;
    const auto want = oracle::rouge(a, b, n);
    CAPTURE(a);
    CAPTURE(b);
    CHECK(rouge_n(a, b, n, RougeStat::Precision) == doctest::Approx(want[0]).epsilon(1e-12));
    CHECK(rouge_n(a, b, n, RougeStat::Recall) == doctest::Approx(want[1]).epsilon(1e-12));
    CHECK(rouge_n(a, b, n, RougeStat::F1) == doctest::Approx(want[2]).epsilon(1e-12));
    CHECK(rouge_n(a, b, n, RougeStat::F1) == doctest::Approx(rouge_n(b, a, n, RougeStat::F1)).epsilon(1e-12));
  }
}
