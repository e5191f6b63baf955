#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "labrisk/models/common.hpp"
#include "labrisk/rng.hpp"

namespace labrisk::models {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const double* x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                    : nodes[i].right;
    return nodes[i].value;
  }
};

struct TreeOptions {
  int max_depth = 0;  // 0 = grow until pure
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  int mtry = 0;  // candidate features per split; 0 = all
};

namespace detail {

// Per-row statistics driving growth. Splits minimize the weighted squared
// error of `target` (for 0/1 targets this is Gini up to a constant factor,
// so one criterion serves classification and boosting residuals alike).
// Leaf values are sum(num)/sum(den): class fraction for classification
// (num = w*y, den = w) or a Newton step for boosting.
struct TreeData {
  const double* x;
  std::size_t p;
  std::vector<double> target, weight, num, den;
  const double* row(std::size_t i) const { return x + i * p; }
};

class TreeBuilder {
 public:
  TreeBuilder(const TreeData& data, const TreeOptions& opt, Rng& rng,
              std::vector<double>* importances)
      : d_(data), opt_(opt), rng_(rng), importances_(importances) {}

  Tree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  struct BestSplit {
    double decrease = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };

  int grow(std::vector<std::size_t> rows, int depth) {
    const int node_id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    double sw = 0, swt = 0, swt2 = 0, snum = 0, sden = 0;
    for (std::size_t i : rows) {
      sw += d_.weight[i];
      swt += d_.weight[i] * d_.target[i];
      swt2 += d_.weight[i] * d_.target[i] * d_.target[i];
      snum += d_.num[i];
      sden += d_.den[i];
    }
    tree_.nodes[node_id].value = snum / std::max(sden, 1e-12);

    const double node_score = score(sw, swt, swt2);
    const bool can_split =
        static_cast<int>(rows.size()) >= opt_.min_samples_split &&
        rows.size() >= 2 * static_cast<std::size_t>(opt_.min_samples_leaf) &&
        (opt_.max_depth == 0 || depth < opt_.max_depth) && node_score > 1e-12;
    if (!can_split) return node_id;

    BestSplit best = find_split(rows, sw, swt, swt2, node_score);
    if (best.feature < 0) return node_id;

    std::vector<std::size_t> left, right;
    left.reserve(rows.size());
    right.reserve(rows.size());
    for (std::size_t i : rows)
      (d_.row(i)[best.feature] <= best.threshold ? left : right).push_back(i);
    rows.clear();
    rows.shrink_to_fit();

    if (importances_) (*importances_)[best.feature] += best.decrease;
    tree_.nodes[node_id].feature = best.feature;
    tree_.nodes[node_id].threshold = best.threshold;
    const int l = grow(std::move(left), depth + 1);
    tree_.nodes[node_id].left = l;
    const int r = grow(std::move(right), depth + 1);
    tree_.nodes[node_id].right = r;
    return node_id;
  }

  static double score(double sw, double swt, double swt2) {
    if (sw <= 0) return 0.0;
    return swt2 - swt * swt / sw;  // weighted SSE around the mean
  }

  BestSplit find_split(const std::vector<std::size_t>& rows, double sw,
                       double swt, double swt2, double node_score) {
    std::vector<int> features(d_.p);
    std::iota(features.begin(), features.end(), 0);
    if (opt_.mtry > 0 && opt_.mtry < static_cast<int>(d_.p)) {
      for (int j = 0; j < opt_.mtry; ++j) {
        const std::size_t pick =
            j + rng_.uniform_index(features.size() - j);
        std::swap(features[j], features[pick]);
      }
      features.resize(opt_.mtry);
      std::sort(features.begin(), features.end());
    }

    BestSplit best;
    std::vector<std::pair<double, std::size_t>> order(rows.size());
    for (int f : features) {
      for (std::size_t k = 0; k < rows.size(); ++k)
        order[k] = {d_.row(rows[k])[f], rows[k]};
      std::sort(order.begin(), order.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double lw = 0, lwt = 0, lwt2 = 0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t i = order[k].second;
        lw += d_.weight[i];
        lwt += d_.weight[i] * d_.target[i];
        lwt2 += d_.weight[i] * d_.target[i] * d_.target[i];
        if (order[k].first == order[k + 1].first) continue;  // tie group
        const std::size_t left_n = k + 1;
        if (left_n < static_cast<std::size_t>(opt_.min_samples_leaf) ||
            order.size() - left_n <
                static_cast<std::size_t>(opt_.min_samples_leaf))
          continue;
        const double decrease = node_score - score(lw, lwt, lwt2) -
                                score(sw - lw, swt - lwt, swt2 - lwt2);
        if (decrease > best.decrease + 1e-15) {
          best.decrease = decrease;
          best.feature = f;
          best.threshold = (order[k].first + order[k + 1].first) / 2.0;
        }
      }
    }
    return best;
  }

  const TreeData& d_;
  const TreeOptions& opt_;
  Rng& rng_;
  std::vector<double>* importances_;
  Tree tree_;
};

}  // namespace detail
}  // namespace labrisk::models
