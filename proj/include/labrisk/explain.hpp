#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "labrisk/csv.hpp"
#include "labrisk/errors.hpp"
#include "labrisk/matrix.hpp"
#include "labrisk/models/models.hpp"
#include "labrisk/rng.hpp"

namespace labrisk::shap {

// Additive attributions in margin (log-odds) space. For every explained row,
// base_value + sum of that row's attributions equals the model margin.
struct ShapExplanation {
  double base_value = 0.0;
  std::vector<std::string> feature_names;
  std::vector<double> attributions;  // n_rows * n_features, row-major
  std::size_t n_rows = 0;
  std::size_t n_features = 0;

  double at(std::size_t r, std::size_t f) const {
    return attributions[r * n_features + f];
  }
};

// Exact Shapley values for a linear margin: phi_j = beta_j * (x_j - mean of
// the background column).
inline ShapExplanation linear_shap(const models::LogRegModel& model,
                                   const FeatureMatrix& X,
                                   const FeatureMatrix& background) {
  if (background.n_rows == 0) throw UserError("linear_shap: empty background");
  if (background.n_cols != X.n_cols)
    throw UserError("linear_shap: background/X column mismatch");
  std::vector<double> mean(X.n_cols, 0.0);
  for (std::size_t r = 0; r < background.n_rows; ++r)
    for (std::size_t c = 0; c < X.n_cols; ++c) mean[c] += background.at(r, c);
  for (auto& v : mean) v /= background.n_rows;

  ShapExplanation e;
  e.feature_names = X.columns;
  e.n_rows = X.n_rows;
  e.n_features = X.n_cols;
  e.attributions.resize(X.n_rows * X.n_cols);
  e.base_value = model.intercept;
  for (std::size_t c = 0; c < X.n_cols; ++c)
    e.base_value += model.coef[c] * mean[c];
  for (std::size_t r = 0; r < X.n_rows; ++r)
    for (std::size_t c = 0; c < X.n_cols; ++c)
      e.attributions[r * X.n_cols + c] =
          model.coef[c] * (X.at(r, c) - mean[c]);
  return e;
}

// Permutation-sampling Shapley values for any fitted model, in clipped
// log-odds space. Permutations come in antithetic pairs (a draw and its
// reverse) and background rows are cycled so every row is used equally
// often; the telescoping sum makes base + sum(phi) = margin exact for each
// explained row.
inline ShapExplanation sampling_shap(const models::FittedModel& model,
                                     const FeatureMatrix& X,
                                     const FeatureMatrix& background,
                                     int n_permutations, std::uint64_t seed) {
  if (n_permutations < 2)
    throw UserError("sampling_shap: need at least 2 permutations");
  if (background.n_rows == 0)
    throw UserError("sampling_shap: empty background");
  if (background.n_cols != X.n_cols)
    throw UserError("sampling_shap: background/X column mismatch");

  const std::size_t p = X.n_cols;
  const std::size_t nb = background.n_rows;

  std::vector<double> bg_margin(nb);
  for (std::size_t b = 0; b < nb; ++b)
    bg_margin[b] = model.margin(background.row(b));
  double base = 0.0;
  for (int t = 0; t < n_permutations; ++t) base += bg_margin[t % nb];
  base /= n_permutations;

  ShapExplanation e;
  e.feature_names = X.columns;
  e.n_rows = X.n_rows;
  e.n_features = p;
  e.attributions.assign(X.n_rows * p, 0.0);
  e.base_value = base;

  std::vector<std::size_t> perm(p);
  std::vector<double> z(p);
  for (std::size_t r = 0; r < X.n_rows; ++r) {
    Rng rng(Rng::derive(seed, r));
    double* phi = e.attributions.data() + r * p;
    for (int t = 0; t < n_permutations; ++t) {
      if (t % 2 == 0) {
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
      } else {
        std::reverse(perm.begin(), perm.end());
      }
      const std::size_t b = t % nb;
      std::copy(background.row(b), background.row(b) + p, z.begin());
      double prev = bg_margin[b];
      for (std::size_t j : perm) {
        z[j] = X.at(r, j);
        const double cur = model.margin(z.data());
        phi[j] += cur - prev;
        prev = cur;
      }
    }
    for (std::size_t j = 0; j < p; ++j) phi[j] /= n_permutations;
  }
  return e;
}

// Features ranked by mean absolute attribution; ties sort by name.
inline std::vector<std::pair<std::string, double>> global_importance(
    const ShapExplanation& e) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(e.n_features);
  for (std::size_t f = 0; f < e.n_features; ++f) {
    double s = 0.0;
    for (std::size_t r = 0; r < e.n_rows; ++r) s += std::abs(e.at(r, f));
    out.emplace_back(e.feature_names[f], e.n_rows ? s / e.n_rows : 0.0);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

// Long-format dump for beeswarm-style plots: one record per (row, feature)
// with the attribution and the (scaled) feature value.
inline void beeswarm_export(const ShapExplanation& e, const FeatureMatrix& X,
                            const std::string& path) {
  if (X.n_rows != e.n_rows || X.n_cols != e.n_features)
    throw UserError("beeswarm_export: explanation/matrix shape mismatch");
  CsvWriter w(path);
  w.row({"feature", "row", "attribution", "feature_value"});
  for (std::size_t r = 0; r < e.n_rows; ++r)
    for (std::size_t f = 0; f < e.n_features; ++f)
      w.row({e.feature_names[f], std::to_string(r), fmt_double(e.at(r, f)),
             fmt_double(X.at(r, f))});
}

inline void write_global_importance_csv(const ShapExplanation& e,
                                        const std::string& path) {
  CsvWriter w(path);
  w.row({"feature", "mean_abs_attribution"});
  for (const auto& [name, value] : global_importance(e))
    w.row({name, fmt_double(value)});
}

inline void write_attributions_csv(const ShapExplanation& e,
                                   const std::string& path) {
  CsvWriter w(path);
  std::vector<std::string> header = {"row"};
  header.insert(header.end(), e.feature_names.begin(), e.feature_names.end());
  w.row(header);
  for (std::size_t r = 0; r < e.n_rows; ++r) {
    std::vector<std::string> row = {std::to_string(r)};
    for (std::size_t f = 0; f < e.n_features; ++f)
      row.push_back(fmt_double(e.at(r, f)));
    w.row(row);
  }
}

}  // namespace labrisk::shap
