#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "labrisk/evaluate.hpp"
#include "labrisk/rng.hpp"

using namespace labrisk;
using namespace labrisk::eval;

namespace {

// Independent concordance oracle: Mann-Whitney with half credit for ties.
double mann_whitney_auc(const std::vector<double>& s,
                        const std::vector<int>& y) {
  double num = 0.0;
  long np = 0, nn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    ++np;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] == 1) continue;
      if (s[i] > s[j]) num += 1.0;
      else if (s[i] == s[j]) num += 0.5;
    }
  }
  for (int v : y) nn += v != 1;
  return num / (static_cast<double>(np) * nn);
}

std::pair<std::vector<double>, std::vector<int>> random_fixture(Rng& rng,
                                                                int n,
                                                                bool ties) {
  std::vector<double> s(n);
  std::vector<int> y(n);
  bool pos = false, neg = false;
  for (int i = 0; i < n; ++i) {
    s[i] = ties ? std::floor(rng.uniform() * 8) / 8.0 : rng.uniform();
    y[i] = rng.uniform() < 0.4 ? 1 : 0;
    (y[i] ? pos : neg) = true;
  }
  if (!pos) y[0] = 1;
  if (!neg) y[n > 1 ? 1 : 0] = 0;
  return {s, y};
}

}  // namespace

TEST_CASE("confusion_at basics") {
  std::vector<double> s = {0.9, 0.1};
  std::vector<int> y = {1, 0};
  auto c = confusion_at(s, y, 0.5);
  REQUIRE(c.tp == 1);
  REQUIRE(c.tn == 1);
  REQUIRE(c.fp == 0);
  REQUIRE(c.fn == 0);

  // threshold 0: everything predicted positive
  std::vector<double> s2 = {0.2, 0.4, 0.6, 0.9};
  std::vector<int> y2 = {0, 1, 0, 1};
  auto c2 = confusion_at(s2, y2, 0.0);
  REQUIRE(c2.fp == 2);
  REQUIRE(c2.fn == 0);
  REQUIRE(c2.tp == 2);
}

TEST_CASE("confusion_at matches a brute-force row loop") {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    auto [s, y] = random_fixture(rng, 60, rep % 2 == 0);
    const double thr = rng.uniform();
    auto c = confusion_at(s, y, thr);
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool pred = s[i] >= thr;
      if (y[i] == 1 && pred) ++tp;
      if (y[i] == 0 && pred) ++fp;
      if (y[i] == 0 && !pred) ++tn;
      if (y[i] == 1 && !pred) ++fn;
    }
    REQUIRE(c.tp == tp);
    REQUIRE(c.fp == fp);
    REQUIRE(c.tn == tn);
    REQUIRE(c.fn == fn);
  }
}

TEST_CASE("mcc extremes and degenerate convention") {
  REQUIRE(mcc({10, 0, 10, 0}) == 1.0);
  REQUIRE(mcc({0, 10, 0, 10}) == -1.0);
  REQUIRE(mcc({20, 30, 0, 0}) == 0.0);  // everything predicted positive
  REQUIRE(mcc({0, 0, 35, 15}) == 0.0);  // everything predicted negative
}

TEST_CASE("final test-set confusion counts reproduce the reported metrics") {
  // Counts per 1e5 implied by recall .7917 / specificity .7102 / ppv .1464
  // at prevalence ~5.91%.
  ConfusionCounts c{4679, 27268, 66822, 1231};
  REQUIRE(mcc(c) == Catch::Approx(0.2537).margin(0.001));
  auto r = basic_rates(c);
  REQUIRE(r.ppv == Catch::Approx(0.146).margin(0.001));
  REQUIRE(r.npv == Catch::Approx(0.982).margin(0.001));
  REQUIRE(r.recall == Catch::Approx(0.792).margin(0.001));
  REQUIRE(r.specificity == Catch::Approx(0.710).margin(0.001));
  REQUIRE(r.accuracy == Catch::Approx(0.715).margin(0.001));
  const double prevalence =
      static_cast<double>(c.tp + c.fn) / static_cast<double>(c.total());
  REQUIRE(prevalence == Catch::Approx(0.0591).margin(0.0001));
}

TEST_CASE("basic rates definitional cases") {
  auto r = basic_rates({5, 3, 7, 5});  // tp == fn -> recall 0.5
  REQUIRE(r.recall == 0.5);
  Rng rng(9);
  for (int rep = 0; rep < 30; ++rep) {
    ConfusionCounts c{1 + static_cast<long>(rng.uniform_index(50)),
                      1 + static_cast<long>(rng.uniform_index(50)),
                      1 + static_cast<long>(rng.uniform_index(50)),
                      1 + static_cast<long>(rng.uniform_index(50))};
    auto rr = basic_rates(c);
    const double f1_direct =
        2.0 * c.tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
    REQUIRE(rr.f1 == Catch::Approx(f1_direct).epsilon(1e-12));
  }
  auto degenerate = basic_rates({0, 0, 10, 5});
  REQUIRE(degenerate.ppv == 0.0);
  REQUIRE(degenerate.degenerate);
}

TEST_CASE("roc on the four-point fixture") {
  std::vector<double> s = {0.8, 0.35, 0.4, 0.1};
  std::vector<int> y = {1, 1, 0, 0};
  auto roc = roc_curve(s, y);
  REQUIRE(roc.area == Catch::Approx(0.75).epsilon(1e-12));
  REQUIRE(roc.xs.front() == 0.0);
  REQUIRE(roc.ys.front() == 0.0);
  REQUIRE(roc.xs.back() == 1.0);
  REQUIRE(roc.ys.back() == 1.0);
}

TEST_CASE("roc extremes and symmetry") {
  std::vector<double> s = {0.9, 0.8, 0.3, 0.2};
  std::vector<int> y = {1, 1, 0, 0};
  REQUIRE(auc(s, y) == 1.0);
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    auto [sc, yy] = random_fixture(rng, 40, false);  // ties absent
    std::vector<double> neg(sc.size());
    for (std::size_t i = 0; i < sc.size(); ++i) neg[i] = -sc[i];
    REQUIRE(auc(sc, yy) + auc(neg, yy) == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("trapezoid roc area equals tie-corrected concordance") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    auto [s, y] = random_fixture(rng, 5 + static_cast<int>(rng.uniform_index(80)),
                                 rep % 3 == 0);
    REQUIRE(std::abs(auc(s, y) - mann_whitney_auc(s, y)) < 1e-12);
  }
}

TEST_CASE("roc and average precision invariant under monotone transforms") {
  Rng rng(23);
  auto [s, y] = random_fixture(rng, 150, true);
  std::vector<double> t(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    t[i] = std::exp(3.0 * s[i]) + 1.0;  // strictly monotone
  REQUIRE(auc(s, y) == Catch::Approx(auc(t, y)).epsilon(1e-12));
  REQUIRE(average_precision(s, y) ==
          Catch::Approx(average_precision(t, y)).epsilon(1e-12));
}

TEST_CASE("pr curve on small fixtures matches exhaustive enumeration") {
  std::vector<double> s = {0.9, 0.7, 0.5, 0.3, 0.1};
  std::vector<int> y = {1, 0, 1, 0, 0};
  auto pr = pr_curve(s, y);
  // Manual sweep: thresholds at each distinct score, descending.
  // t=0.9: tp=1 fp=0 -> R=.5 P=1; t=0.7: R=.5 P=.5; t=0.5: R=1 P=2/3; ...
  const double ap_manual = (0.5 - 0.0) * 1.0 + (0.5 - 0.5) * 0.5 +
                           (1.0 - 0.5) * (2.0 / 3.0);
  REQUIRE(pr.area == Catch::Approx(ap_manual).epsilon(1e-12));
  REQUIRE(pr.baseline == Catch::Approx(0.4));

  std::vector<double> s2 = {0.9, 0.8, 0.1, 0.2};
  std::vector<int> y2 = {1, 1, 0, 0};
  REQUIRE(average_precision(s2, y2) == 1.0);
}

TEST_CASE("pr baseline: random scores score near prevalence") {
  Rng rng(31);
  const int n = 10000;
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    s[i] = rng.uniform();
    y[i] = rng.uniform() < 0.063 ? 1 : 0;
  }
  REQUIRE(average_precision(s, y) == Catch::Approx(0.063).margin(0.02));
}

TEST_CASE("bootstrap interval brackets the point estimate and narrows") {
  Rng rng(37);
  auto make = [&](int n) {
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = i % 5 == 0 ? 1 : 0;
      s[i] = (y[i] ? 0.8 : 0.0) + rng.normal();
    }
    return std::make_pair(s, y);
  };
  auto [s400, y400] = make(400);
  auto [lo, hi] = bootstrap_auc_ci(s400, y400, 300, 0.95, 9);
  const double point = auc(s400, y400);
  REQUIRE(lo <= point);
  REQUIRE(point <= hi);
  auto [lo2, hi2] = bootstrap_auc_ci(s400, y400, 300, 0.95, 9);
  REQUIRE(lo == lo2);  // deterministic per seed
  REQUIRE(hi == hi2);

  auto [s4000, y4000] = make(4000);
  auto [lo3, hi3] = bootstrap_auc_ci(s4000, y4000, 300, 0.95, 9);
  REQUIRE(hi3 - lo3 < hi - lo);
}

TEST_CASE("select_threshold: separable, degenerate, exhaustive max") {
  std::vector<double> sep = {0.9, 0.8, 0.2, 0.1};
  std::vector<int> ysep = {1, 1, 0, 0};
  auto c = select_threshold(sep, ysep);
  REQUIRE(c.threshold == Catch::Approx(0.5));  // midpoint of the gap
  REQUIRE(c.mcc == 1.0);

  std::vector<double> flat = {0.3, 0.3, 0.3};
  std::vector<int> yflat = {1, 0, 1};
  auto cf = select_threshold(flat, yflat);
  REQUIRE(cf.degenerate);
  REQUIRE(cf.threshold == 0.3);

  Rng rng(41);
  for (int rep = 0; rep < 40; ++rep) {
    auto [s, y] = random_fixture(rng, 50, rep % 2 == 0);
    auto choice = select_threshold(s, y);
    // exhaustive scan over every candidate cut (all midpoints + extremes)
    std::vector<double> cand(s.begin(), s.end());
    std::sort(cand.begin(), cand.end());
    std::vector<double> cuts = {cand.front() - 1.0, cand.front()};
    for (std::size_t i = 0; i + 1 < cand.size(); ++i)
      cuts.push_back((cand[i] + cand[i + 1]) / 2.0);
    cuts.push_back(cand.back() + 1.0);
    double best = -2.0;
    for (double cut : cuts) best = std::max(best, mcc(confusion_at(s, y, cut)));
    REQUIRE(choice.mcc == Catch::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("fixed-half objective") {
  std::vector<double> s = {0.9, 0.4, 0.6, 0.2};
  std::vector<int> y = {1, 0, 1, 0};
  auto c = select_threshold(s, y, ThresholdObjective::fixed_half);
  REQUIRE(c.threshold == 0.5);
  REQUIRE(c.mcc == Catch::Approx(mcc(confusion_at(s, y, 0.5))));
}

TEST_CASE("auc is stable under majority subsampling while ap moves") {
  Rng rng(47);
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 600; ++i) {
    s.push_back(1.0 + rng.normal());
    y.push_back(1);
  }
  std::vector<double> neg_scores;
  for (int i = 0; i < 6000; ++i) neg_scores.push_back(rng.normal());
  std::vector<double> s_full = s;
  std::vector<int> y_full = y;
  for (double v : neg_scores) {
    s_full.push_back(v);
    y_full.push_back(0);
  }
  std::vector<double> s_sub = s;
  std::vector<int> y_sub = y;
  for (int i = 0; i < 600; ++i) {  // 10x majority subsample
    s_sub.push_back(neg_scores[i * 10]);
    y_sub.push_back(0);
  }
  REQUIRE(std::abs(auc(s_full, y_full) - auc(s_sub, y_sub)) < 0.02);
  REQUIRE(std::abs(average_precision(s_full, y_full) -
                   average_precision(s_sub, y_sub)) > 0.10);
}
