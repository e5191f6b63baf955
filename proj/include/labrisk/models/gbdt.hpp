#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "labrisk/models/tree.hpp"

namespace labrisk::models {

struct GbdtOptions {
  int n_estimators = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  double subsample = 1.0;  // row fraction per round, without replacement
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  std::uint64_t seed = 1;
};

struct GbdtModel {
  double base_margin = 0.0;
  double learning_rate = 0.1;
  std::vector<Tree> trees;
  std::vector<double> importances;

  double margin(const double* x) const {
    double m = base_margin;
    for (const auto& t : trees) m += learning_rate * t.predict(x);
    return m;
  }
};

// Gradient boosting on the logistic loss. Each round fits a regression tree
// to the residuals y - p; leaves take the Newton step
//   sum w*(y - p) / sum w*p*(1 - p)
// and the accumulated margin is shrunk by learning_rate. Row subsampling is
// without replacement, drawn per round from a (seed, round) stream.
inline GbdtModel fit_gbdt(const DataView& d, const GbdtOptions& opt = {}) {
  d.require_both_classes("fit_gbdt");
  GbdtModel model;
  model.learning_rate = opt.learning_rate;
  model.importances.assign(d.p, 0.0);

  double wsum = 0.0, wy = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) {
    wsum += d.weight(i);
    wy += d.weight(i) * d.y[i];
  }
  model.base_margin = logit(wy / wsum);

  std::vector<double> margins(d.n, model.base_margin);
  detail::TreeData data;
  data.x = d.x;
  data.p = d.p;
  data.target.resize(d.n);
  data.weight.resize(d.n);
  data.num.resize(d.n);
  data.den.resize(d.n);

  TreeOptions topt;
  topt.max_depth = opt.max_depth;
  topt.min_samples_split = opt.min_samples_split;
  topt.min_samples_leaf = opt.min_samples_leaf;

  std::vector<std::size_t> all(d.n);
  for (std::size_t i = 0; i < d.n; ++i) all[i] = i;

  for (int round = 0; round < opt.n_estimators; ++round) {
    Rng rng(Rng::derive(opt.seed, static_cast<std::uint64_t>(round)));
    std::vector<std::size_t> rows = all;
    if (opt.subsample < 1.0) {
      rng.shuffle(rows);
      const std::size_t keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(opt.subsample * d.n));
      rows.resize(keep);
      std::sort(rows.begin(), rows.end());
    }
    for (std::size_t i = 0; i < d.n; ++i) {
      const double p = sigmoid(margins[i]);
      const double r = d.y[i] - p;
      data.target[i] = r;
      data.weight[i] = d.weight(i);
      data.num[i] = d.weight(i) * r;
      data.den[i] = d.weight(i) * p * (1.0 - p);
    }
    detail::TreeBuilder builder(data, topt, rng, &model.importances);
    Tree tree = builder.build(std::move(rows));
    for (std::size_t i = 0; i < d.n; ++i)
      margins[i] += opt.learning_rate * tree.predict(d.row(i));
    model.trees.push_back(std::move(tree));
  }
  double total = 0.0;
  for (double v : model.importances) total += v;
  if (total > 0)
    for (auto& v : model.importances) v /= total;
  return model;
}

}  // namespace labrisk::models
