// Independent reference implementations used by the unit and acceptance tests.
// They share no code with the library beyond the record types.
#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compatkit/core.hpp"
#include "compatkit/tensor.hpp"

namespace oracle {

/// One multiple-choice instance reduced to the three choices that matter.
struct McCase {
  std::size_t truth = 0;
  std::size_t old_choice = 0;
  std::size_t new_choice = 0;
};

struct FlipStats {
  std::size_t n = 0;
  std::size_t both_correct = 0, positive = 0, both_wrong = 0, negative = 0;
  std::size_t inconsistent = 0;  // new wrong and new != old
  double acc_old = 0, acc_new = 0, nfr = 0, pfr = 0, nfr_mc = 0;
  std::optional<double> btc;
};

inline FlipStats brute_force(const std::vector<McCase>& cases) {
  FlipStats s;
  s.n = cases.size();
  std::size_t old_ok = 0, new_ok = 0;
  for (const auto& c : cases) {
    const bool o = c.old_choice == c.truth;
    const bool n = c.new_choice == c.truth;
    old_ok += o;
    new_ok += n;
    if (o && n) ++s.both_correct;
    if (!o && n) ++s.positive;
    if (!o && !n) ++s.both_wrong;
    if (o && !n) ++s.negative;
    if (!n && c.new_choice != c.old_choice) ++s.inconsistent;
  }
  const double n = static_cast<double>(s.n);
  s.acc_old = old_ok / n;
  s.acc_new = new_ok / n;
  s.nfr = s.negative / n;
  s.pfr = s.positive / n;
  s.nfr_mc = s.inconsistent / n;
  if (old_ok > 0) s.btc = static_cast<double>(s.both_correct) / static_cast<double>(old_ok);
  return s;
}

/// Log-likelihoods whose unique argmax is `chosen`.
inline std::vector<double> peaked(std::size_t n_choices, std::size_t chosen) {
  std::vector<double> ll(n_choices, -3.0);
  ll[chosen] = -0.5;
  return ll;
}

inline compatkit::EvalRecord mc_record(std::string id, const McCase& c, std::size_t n_choices = 3) {
  compatkit::EvalRecord r;
  r.instance_id = std::move(id);
  r.task = compatkit::TaskKind::MultipleChoice;
  r.ground_truth = c.truth;
  r.pred_old = compatkit::Prediction::from_loglikelihoods(peaked(n_choices, c.old_choice));
  r.pred_new = compatkit::Prediction::from_loglikelihoods(peaked(n_choices, c.new_choice));
  return r;
}

inline compatkit::EvalRecord text_record(std::string id, compatkit::TaskKind task, std::string truth,
                                         std::string old_text, std::string new_text) {
  compatkit::EvalRecord r;
  r.instance_id = std::move(id);
  r.task = task;
  r.ground_truth = std::move(truth);
  r.pred_old = compatkit::Prediction::from_text(std::move(old_text));
  r.pred_new = compatkit::Prediction::from_text(std::move(new_text));
  return r;
}

/// Character-scanning tokenizer: maximal runs of ASCII letters and digits, lowercased.
inline std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    const bool alnum = (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z');
    if (alnum) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<std::string> sorted_ngrams(const std::vector<std::string>& toks, std::size_t n) {
  std::vector<std::string> grams;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string g;
    for (std::size_t j = 0; j < n; ++j) g += toks[i + j] + '\x1f';
    grams.push_back(g);
  }
  std::sort(grams.begin(), grams.end());
  return grams;
}

/// {precision, recall, f1} via a merge over sorted n-gram lists.
inline std::array<double, 3> rouge(std::string_view cand, std::string_view ref, std::size_t n) {
  const auto c = sorted_ngrams(words(cand), n);
  const auto r = sorted_ngrams(words(ref), n);
  if (c.empty() && r.empty()) return {1.0, 1.0, 1.0};
  if (c.empty() || r.empty()) return {0.0, 0.0, 0.0};
  std::size_t i = 0, j = 0, overlap = 0;
  while (i < c.size() && j < r.size()) {
    if (c[i] == r[j]) {
      ++overlap, ++i, ++j;
    } else if (c[i] < r[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const double p = static_cast<double>(overlap) / static_cast<double>(c.size());
  const double rc = static_cast<double>(overlap) / static_cast<double>(r.size());
  const double f = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
  return {p, rc, f};
}

/// Naive softmax without max subtraction; fine for the small logits used in tests.
inline std::vector<double> naive_softmax(const std::vector<double>& z, double t) {
  std::vector<double> e(z.size());
  double sum = 0;
  for (std::size_t k = 0; k < z.size(); ++k) sum += e[k] = std::exp(z[k] / t);
  for (auto& v : e) v /= sum;
  return e;
}

inline double naive_kl(const std::vector<double>& teacher, const std::vector<double>& student, double t) {
  const auto p = naive_softmax(teacher, t);
  const auto q = naive_softmax(student, t);
  double kl = 0;
  for (std::size_t k = 0; k < p.size(); ++k) kl += p[k] * std::log(p[k] / q[k]);
  return kl;
}

/// Central differences of `f` w.r.t. every entry of `x`, restoring `x` afterwards.
inline std::vector<double> finite_diff(compatkit::toy::Tensor2& x, const std::function<double()>& f, double h = 1e-6) {
  std::vector<double> out(x.size());
  auto v = x.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double up = f();
    v[i] = keep - h;
    const double down = f();
    v[i] = keep;
    out[i] = (up - down) / (2 * h);
  }
  return out;
}

/// ||a - b|| / max(||a||, ||b||, tiny).
inline double rel_err(const std::vector<double>& a, std::span<const double> b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(diff) / scale;
}

}  // namespace oracle
