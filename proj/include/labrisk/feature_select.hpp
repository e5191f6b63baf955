#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "labrisk/evaluate.hpp"
#include "labrisk/features.hpp"
#include "labrisk/matrix.hpp"
#include "labrisk/models/gbdt.hpp"
#include "labrisk/models/random_forest.hpp"
#include "labrisk/resample.hpp"
#include "labrisk/splits.hpp"

namespace labrisk::fsel {

enum class FeatureRoute { univariate, rfe, manual };

inline std::string to_string(FeatureRoute r) {
  switch (r) {
    case FeatureRoute::univariate: return "univariate";
    case FeatureRoute::rfe: return "rfe";
    case FeatureRoute::manual: return "manual";
  }
  return "?";
}

struct FeatureSetSpec {
  FeatureRoute route = FeatureRoute::manual;
  int k = 0;
  std::vector<std::string> selected;
  std::vector<std::string> elimination_order;  // rfe: dropped names, in order
  std::vector<double> scores;                  // univariate: F of selected
};

// One-way ANOVA F statistic of a column against the binary label.
inline double anova_f(const FeatureMatrix& m, std::size_t col) {
  double sum[2] = {0, 0}, sumsq[2] = {0, 0};
  long cnt[2] = {0, 0};
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    const int g = m.labels[r] == 1 ? 1 : 0;
    const double v = m.at(r, col);
    sum[g] += v;
    sumsq[g] += v * v;
    ++cnt[g];
  }
  if (cnt[0] == 0 || cnt[1] == 0)
    throw UserError("anova_f: both classes required");
  const long n = cnt[0] + cnt[1];
  if (n <= 2) return 0.0;
  const double mean0 = sum[0] / cnt[0], mean1 = sum[1] / cnt[1];
  const double grand = (sum[0] + sum[1]) / n;
  const double ssb = cnt[0] * (mean0 - grand) * (mean0 - grand) +
                     cnt[1] * (mean1 - grand) * (mean1 - grand);
  const double ssw = (sumsq[0] - cnt[0] * mean0 * mean0) +
                     (sumsq[1] - cnt[1] * mean1 * mean1);
  if (ssw <= 0.0)
    return ssb > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return ssb / (ssw / (n - 2));
}

// Top-k features by F score; ranking ties keep the original column order.
inline FeatureSetSpec univariate_top_k(const FeatureMatrix& m, int k) {
  if (k < 1 || k > static_cast<int>(m.n_cols))
    throw UserError("univariate_top_k: k out of range");
  std::vector<std::size_t> order(m.n_cols);
  std::vector<double> f(m.n_cols);
  for (std::size_t c = 0; c < m.n_cols; ++c) {
    f[c] = anova_f(m, c);
    order[c] = c;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
  FeatureSetSpec spec;
  spec.route = FeatureRoute::univariate;
  spec.k = k;
  for (int i = 0; i < k; ++i) {
    spec.selected.push_back(m.columns[order[i]]);
    spec.scores.push_back(f[order[i]]);
  }
  return spec;
}

struct RfeOptions {
  int n_estimators = 50;
  int max_depth = 0;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  std::uint64_t seed = 1;
};

// Recursive elimination with a class-weighted random forest: drop the single
// lowest-importance feature per step until k remain. Importance ties drop
// the later column, and per-step seeds derive from (seed, step) so runs at
// different k share the same elimination prefix.
inline FeatureSetSpec rfe(const FeatureMatrix& m, int k,
                          const RfeOptions& opt = {}) {
  if (k < 1 || k > static_cast<int>(m.n_cols))
    throw UserError("rfe: k out of range");
  auto weights_map = resample::class_weights(m.labels);
  std::vector<double> w(m.n_rows);
  for (std::size_t r = 0; r < m.n_rows; ++r) w[r] = weights_map[m.labels[r]];

  FeatureSetSpec spec;
  spec.route = FeatureRoute::rfe;
  spec.k = k;
  std::vector<std::string> remaining = m.columns;
  int step = 0;
  while (static_cast<int>(remaining.size()) > k) {
    FeatureMatrix sub = m.select_columns(remaining);
    models::DataView d(sub.values, sub.n_cols, sub.labels, w);
    models::ForestOptions fo;
    fo.n_estimators = opt.n_estimators;
    fo.max_depth = opt.max_depth;
    fo.min_samples_split = opt.min_samples_split;
    fo.min_samples_leaf = opt.min_samples_leaf;
    fo.seed = Rng::derive(opt.seed, static_cast<std::uint64_t>(step));
    auto forest = models::fit_random_forest(d, fo);
    std::size_t worst = 0;
    for (std::size_t j = 1; j < remaining.size(); ++j)
      if (forest.importances[j] <= forest.importances[worst]) worst = j;
    spec.elimination_order.push_back(remaining[worst]);
    remaining.erase(remaining.begin() + worst);
    ++step;
  }
  spec.selected = remaining;
  return spec;
}

inline FeatureSetSpec manual_panel() {
  FeatureSetSpec spec;
  spec.route = FeatureRoute::manual;
  spec.selected = manual_panel_features();
  spec.k = static_cast<int>(spec.selected.size());
  return spec;
}

struct RfecvOptions {
  int folds = 5;
  models::GbdtOptions estimator{.n_estimators = 50,
                                .max_depth = 3,
                                .learning_rate = 0.1,
                                .subsample = 1.0};
  std::uint64_t seed = 1;
};

// Choose the feature count for the automated routes: per grouped fold, run a
// full elimination path with the boosted-tree estimator and score ROC-AUC on
// the held-out side at every candidate k; return the k with the best mean
// AUC (ties go to the smaller k).
inline int rfecv_choose_k(const FeatureMatrix& m, const RfecvOptions& opt = {}) {
  if (m.subject_ids.empty())
    throw UserError("rfecv_choose_k: subject ids required for grouping");
  const int p = static_cast<int>(m.n_cols);
  std::vector<int> grid;
  if (p <= 30) {
    for (int k = 1; k <= p; ++k) grid.push_back(k);
  } else {
    // geometric ladder from p down to 1
    int k = p;
    while (k > 1) {
      grid.push_back(k);
      k = std::min(k - 1, static_cast<int>(std::ceil(k * 0.75)));
    }
    grid.push_back(1);
    std::sort(grid.begin(), grid.end());
  }

  auto folds = sweep::grouped_kfold(m.subject_ids, opt.folds,
                                    Rng::derive(opt.seed, 0x6f1d));
  std::vector<double> auc_sum(grid.size(), 0.0);
  std::vector<int> auc_cnt(grid.size(), 0);

  for (std::size_t f = 0; f < folds.size(); ++f) {
    FeatureMatrix fit = m.select_rows(folds[f].fit_idx);
    FeatureMatrix score = m.select_rows(folds[f].score_idx);
    bool score_has_both = false;
    {
      bool pos = false, neg = false;
      for (int y : score.labels) (y == 1 ? pos : neg) = true;
      score_has_both = pos && neg;
    }
    std::vector<std::string> remaining = m.columns;
    for (int size = p; size >= 1; --size) {
      FeatureMatrix sub = fit.select_columns(remaining);
      models::DataView d(sub.values, sub.n_cols, sub.labels);
      models::GbdtOptions go = opt.estimator;
      go.seed = Rng::derive(opt.seed, f, static_cast<std::uint64_t>(size));
      auto model = models::fit_gbdt(d, go);
      auto at = std::find(grid.begin(), grid.end(), size);
      if (at != grid.end() && score_has_both) {
        FeatureMatrix ssub = score.select_columns(remaining);
        std::vector<double> scores(ssub.n_rows);
        for (std::size_t r = 0; r < ssub.n_rows; ++r)
          scores[r] = model.margin(ssub.row(r));
        const std::size_t gi = at - grid.begin();
        auc_sum[gi] += eval::auc(scores, ssub.labels);
        auc_cnt[gi] += 1;
      }
      if (size > 1) {
        std::size_t worst = 0;
        for (std::size_t j = 1; j < remaining.size(); ++j)
          if (model.importances[j] <= model.importances[worst]) worst = j;
        remaining.erase(remaining.begin() + worst);
      }
    }
  }
  int best_k = grid.front();
  double best = -1.0;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    if (auc_cnt[gi] == 0) continue;
    const double mean = auc_sum[gi] / auc_cnt[gi];
    if (mean > best + 1e-12) {  // strict improvement; ties keep smaller k
      best = mean;
      best_k = grid[gi];
    }
  }
  return best_k;
}

}  // namespace labrisk::fsel
