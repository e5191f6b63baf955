#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "labrisk/errors.hpp"
#include "labrisk/rng.hpp"

namespace labrisk::eval {

struct ConfusionCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

// Predicted positive iff score >= threshold (closed lower bound).
inline ConfusionCounts confusion_at(std::span<const double> scores,
                                    std::span<const int> labels,
                                    double threshold) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1)
      pred ? ++c.tp : ++c.fn;
    else
      pred ? ++c.fp : ++c.tn;
  }
  return c;
}

// Matthews correlation coefficient; 0 when any marginal is empty.
inline double mcc(const ConfusionCounts& c) {
  const double a = static_cast<double>(c.tp + c.fp);
  const double b = static_cast<double>(c.tp + c.fn);
  const double d = static_cast<double>(c.tn + c.fp);
  const double e = static_cast<double>(c.tn + c.fn);
  if (a == 0 || b == 0 || d == 0 || e == 0) return 0.0;
  const double num = static_cast<double>(c.tp) * c.tn -
                     static_cast<double>(c.fp) * c.fn;
  return num / std::sqrt(a * b * d * e);
}

struct BasicRates {
  double ppv = 0, npv = 0, recall = 0, specificity = 0, accuracy = 0, f1 = 0;
  bool degenerate = false;  // some rate hit a 0/0 and was reported as 0
};

inline BasicRates basic_rates(const ConfusionCounts& c) {
  BasicRates r;
  auto ratio = [&r](long num, long den) {
    if (den == 0) {
      r.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / den;
  };
  r.ppv = ratio(c.tp, c.tp + c.fp);
  r.npv = ratio(c.tn, c.tn + c.fn);
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.specificity = ratio(c.tn, c.tn + c.fp);
  r.accuracy = ratio(c.tp + c.tn, c.total());
  if (r.ppv + r.recall > 0)
    r.f1 = 2.0 * r.ppv * r.recall / (r.ppv + r.recall);
  else
    r.degenerate = true;
  return r;
}

struct CurvePoints {
  std::vector<double> thresholds;  // descending; one per curve point
  std::vector<double> xs;          // ROC: FPR, PR: recall
  std::vector<double> ys;          // ROC: TPR, PR: precision
  double area = 0.0;
  double baseline = 0.0;  // PR only: prevalence
};

namespace detail {
// Indices sorted by descending score; equal scores form one tie group.
inline std::vector<std::size_t> rank_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return idx;
}
inline std::pair<long, long> class_counts(std::span<const int> labels) {
  long pos = 0, neg = 0;
  for (int y : labels) (y == 1 ? pos : neg)++;
  return {pos, neg};
}
}  // namespace detail

// ROC by threshold sweep over distinct scores; tied scores collapse into a
// single step so the trapezoid area equals tie-corrected concordance.
inline CurvePoints roc_curve(std::span<const double> scores,
                             std::span<const int> labels) {
  auto [n_pos, n_neg] = detail::class_counts(labels);
  if (n_pos == 0 || n_neg == 0)
    throw UserError("roc_curve: both classes required");
  auto idx = detail::rank_desc(scores);
  CurvePoints out;
  out.thresholds.push_back(std::numeric_limits<double>::infinity());
  out.xs.push_back(0.0);
  out.ys.push_back(0.0);
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      labels[idx[i]] == 1 ? ++tp : ++fp;
      ++i;
    }
    out.thresholds.push_back(s);
    out.xs.push_back(static_cast<double>(fp) / n_neg);
    out.ys.push_back(static_cast<double>(tp) / n_pos);
  }
  double area = 0.0;
  for (std::size_t k = 1; k < out.xs.size(); ++k)
    area += (out.xs[k] - out.xs[k - 1]) * (out.ys[k] + out.ys[k - 1]) / 2.0;
  out.area = area;
  return out;
}

inline double auc(std::span<const double> scores, std::span<const int> labels) {
  return roc_curve(scores, labels).area;
}

// Precision-recall sweep; area is the step-wise average precision
// sum((R_k - R_{k-1}) * P_k). The no-skill baseline is the prevalence.
inline CurvePoints pr_curve(std::span<const double> scores,
                            std::span<const int> labels) {
  auto [n_pos, n_neg] = detail::class_counts(labels);
  if (n_pos == 0) throw UserError("pr_curve: no positive labels");
  auto idx = detail::rank_desc(scores);
  CurvePoints out;
  out.baseline = static_cast<double>(n_pos) / (n_pos + n_neg);
  long tp = 0, fp = 0;
  double prev_recall = 0.0, ap = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      labels[idx[i]] == 1 ? ++tp : ++fp;
      ++i;
    }
    const double recall = static_cast<double>(tp) / n_pos;
    const double precision = static_cast<double>(tp) / (tp + fp);
    out.thresholds.push_back(s);
    out.xs.push_back(recall);
    out.ys.push_back(precision);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  out.area = ap;
  return out;
}

inline double average_precision(std::span<const double> scores,
                                std::span<const int> labels) {
  return pr_curve(scores, labels).area;
}

// Percentile bootstrap over rows. Resamples that lose a class are redrawn
// (up to 10 attempts) and skipped if still degenerate. Iteration seeds are
// derived from (seed, iteration) so the loop parallelizes reproducibly.
inline std::pair<double, double> bootstrap_auc_ci(
    std::span<const double> scores, std::span<const int> labels,
    int n_boot = 2000, double level = 0.95, std::uint64_t seed = 1) {
  const std::size_t n = scores.size();
  if (n == 0) throw UserError("bootstrap_auc_ci: empty input");
  std::vector<double> boots;
  boots.reserve(n_boot);
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (int it = 0; it < n_boot; ++it) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(it)));
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      bool pos = false, neg = false;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = rng.uniform_index(n);
        s[i] = scores[j];
        y[i] = labels[j];
        (y[i] == 1 ? pos : neg) = true;
      }
      ok = pos && neg;
    }
    if (ok) boots.push_back(auc(s, y));
  }
  if (boots.empty()) throw UserError("bootstrap_auc_ci: all resamples degenerate");
  std::sort(boots.begin(), boots.end());
  auto quantile = [&](double q) {
    const double h = q * (boots.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, boots.size() - 1);
    return boots[lo] + (h - lo) * (boots[hi] - boots[lo]);
  };
  return {quantile((1.0 - level) / 2.0), quantile((1.0 + level) / 2.0)};
}

// Subject-level variant: whole subjects are resampled with replacement, so
// within-subject correlation widens the interval accordingly.
inline std::pair<double, double> bootstrap_auc_ci_subjects(
    std::span<const double> scores, std::span<const int> labels,
    const std::vector<std::string>& subject_ids, int n_boot = 2000,
    double level = 0.95, std::uint64_t seed = 1) {
  if (subject_ids.size() != scores.size())
    throw UserError("bootstrap_auc_ci_subjects: subject ids required per row");
  std::vector<std::vector<std::size_t>> groups;
  {
    std::vector<std::pair<std::string, std::size_t>> order;
    for (std::size_t i = 0; i < subject_ids.size(); ++i)
      order.emplace_back(subject_ids[i], i);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      groups.emplace_back();
      while (j < order.size() && order[j].first == order[i].first)
        groups.back().push_back(order[j++].second);
      i = j;
    }
  }
  std::vector<double> boots;
  boots.reserve(n_boot);
  for (int it = 0; it < n_boot; ++it) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(it)));
    std::vector<double> s;
    std::vector<int> y;
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      s.clear();
      y.clear();
      bool pos = false, neg = false;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& rows = groups[rng.uniform_index(groups.size())];
        for (std::size_t r : rows) {
          s.push_back(scores[r]);
          y.push_back(labels[r]);
          (labels[r] == 1 ? pos : neg) = true;
        }
      }
      ok = pos && neg;
    }
    if (ok) boots.push_back(auc(s, y));
  }
  if (boots.empty())
    throw UserError("bootstrap_auc_ci_subjects: all resamples degenerate");
  std::sort(boots.begin(), boots.end());
  auto quantile = [&](double q) {
    const double h = q * (boots.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, boots.size() - 1);
    return boots[lo] + (h - lo) * (boots[hi] - boots[lo]);
  };
  return {quantile((1.0 - level) / 2.0), quantile((1.0 + level) / 2.0)};
}

enum class ThresholdObjective { max_mcc, fixed_half };

struct ThresholdChoice {
  double threshold = 0.5;
  double mcc = 0.0;
  bool degenerate = false;  // constant scores
};

// Scan all cut points of the score distribution and return the threshold
// maximizing MCC; candidates are midpoints between adjacent distinct scores
// plus the all-positive cut, so separable data yields the gap midpoint.
inline ThresholdChoice select_threshold(
    std::span<const double> scores, std::span<const int> labels,
    ThresholdObjective objective = ThresholdObjective::max_mcc) {
  if (scores.empty()) throw UserError("select_threshold: empty input");
  if (objective == ThresholdObjective::fixed_half) {
    ThresholdChoice c;
    c.threshold = 0.5;
    c.mcc = mcc(confusion_at(scores, labels, 0.5));
    return c;
  }
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() == 1) return {distinct[0], 0.0, true};

  auto [n_pos, n_neg] = detail::class_counts(labels);
  auto idx = detail::rank_desc(scores);
  ThresholdChoice best;
  best.threshold = distinct.front();  // all-positive cut
  long tp = 0, fp = 0;
  std::size_t i = 0;
  bool first = true;
  // Cut after each descending tie group; threshold between group g and the
  // next is their midpoint, the final cut (everything positive) sits at the
  // minimum score.
  while (i < idx.size()) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      labels[idx[i]] == 1 ? ++tp : ++fp;
      ++i;
    }
    const double cut =
        i < idx.size() ? (s + scores[idx[i]]) / 2.0 : distinct.front();
    ConfusionCounts c{tp, fp, n_neg - fp, n_pos - tp};
    const double m = mcc(c);
    if (first || m > best.mcc) {
      best.mcc = m;
      best.threshold = cut;
      first = false;
    }
  }
  return best;
}

}  // namespace labrisk::eval
