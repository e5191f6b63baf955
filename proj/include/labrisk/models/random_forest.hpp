#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "labrisk/models/tree.hpp"

namespace labrisk::models {

struct ForestOptions {
  int n_estimators = 100;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  std::uint64_t seed = 1;
};

struct ForestModel {
  std::vector<Tree> trees;
  std::vector<double> importances;

  double prob(const double* x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return s / trees.size();
  }
};

// Bagged CART: bootstrap rows per tree, sqrt(p) candidate features per
// split, weighted Gini splits, leaves hold the weighted class-1 fraction.
// Tree seeds derive from (seed, tree index), so fits are reproducible even
// if trees are built in parallel.
inline ForestModel fit_random_forest(const DataView& d,
                                     const ForestOptions& opt = {}) {
  d.require_both_classes("fit_random_forest");
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
  topt.mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(d.p))));

  ForestModel model;
  model.importances.assign(d.p, 0.0);
  for (int t = 0; t < opt.n_estimators; ++t) {
    Rng rng(Rng::derive(opt.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(d.n);
    for (std::size_t i = 0; i < d.n; ++i) rows[i] = rng.uniform_index(d.n);
    for (std::size_t i = 0; i < d.n; ++i) {
      data.target[i] = d.y[i];
      data.weight[i] = d.weight(i);
      data.num[i] = d.weight(i) * d.y[i];
      data.den[i] = d.weight(i);
    }
    std::vector<double> imp(d.p, 0.0);
    detail::TreeBuilder builder(data, topt, rng, &imp);
    model.trees.push_back(builder.build(std::move(rows)));
    double total = 0.0;
    for (double v : imp) total += v;
    if (total > 0)
      for (std::size_t j = 0; j < d.p; ++j)
        model.importances[j] += imp[j] / total;
  }
  double total = 0.0;
  for (double v : model.importances) total += v;
  if (total > 0)
    for (auto& v : model.importances) v /= total;
  return model;
}

}  // namespace labrisk::models
