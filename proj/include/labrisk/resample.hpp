#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "labrisk/errors.hpp"
#include "labrisk/rng.hpp"

namespace labrisk::resample {

// Row container for the balancers: dense features plus binary labels.
// Balancers run on scaled training-fold rows only; callers must never pass
// validation or test rows through them.
struct Rows {
  std::vector<double> x;  // n * p, row-major
  std::vector<int> y;
  std::size_t p = 0;

  std::size_t n() const { return y.size(); }
  const double* row(std::size_t i) const { return x.data() + i * p; }
  void push_row(const double* r, int label) {
    x.insert(x.end(), r, r + p);
    y.push_back(label);
  }
};

enum class BalancerKind {
  none,
  class_weight,
  random_over,
  random_under,
  smote,
  adasyn,
  smote_tomek,
  smote_enn,
};

inline std::string to_string(BalancerKind k) {
  switch (k) {
    case BalancerKind::none: return "none";
    case BalancerKind::class_weight: return "class_weight";
    case BalancerKind::random_over: return "random_over";
    case BalancerKind::random_under: return "random_under";
    case BalancerKind::smote: return "smote";
    case BalancerKind::adasyn: return "adasyn";
    case BalancerKind::smote_tomek: return "smote_tomek";
    case BalancerKind::smote_enn: return "smote_enn";
  }
  return "?";
}

struct BalancerSpec {
  BalancerKind kind = BalancerKind::none;
  int k_neighbors = 5;
  std::uint64_t seed = 1;
};

// Balanced scheme: w_c = n_total / (2 * n_c), so both classes carry equal
// total weight.
inline std::map<int, double> class_weights(const std::vector<int>& y) {
  long n0 = 0, n1 = 0;
  for (int v : y) (v == 1 ? n1 : n0)++;
  if (n0 == 0 || n1 == 0)
    throw UserError("class_weights: both classes required");
  const double total = static_cast<double>(n0 + n1);
  return {{0, total / (2.0 * n0)}, {1, total / (2.0 * n1)}};
}

namespace detail {

inline std::pair<long, long> counts(const std::vector<int>& y) {
  long n0 = 0, n1 = 0;
  for (int v : y) (v == 1 ? n1 : n0)++;
  return {n0, n1};
}

inline void require_both_classes(const Rows& rows, const char* who) {
  auto [n0, n1] = counts(rows.y);
  if (n0 == 0 || n1 == 0)
    throw UserError(std::string(who) + ": both classes required");
}

inline double sq_dist(const double* a, const double* b, std::size_t p) {
  double d = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    const double diff = a[j] - b[j];
    d += diff * diff;
  }
  return d;
}

// Indices of the k nearest candidates to `self` (self excluded when it
// appears among the candidates). Distance ties break toward the lower row
// index so results never depend on sort internals.
inline std::vector<std::size_t> k_nearest(
    const Rows& rows, const double* query, std::size_t self_index,
    const std::vector<std::size_t>& candidates, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(candidates.size());
  for (std::size_t idx : candidates) {
    if (idx == self_index) continue;
    d.emplace_back(sq_dist(query, rows.row(idx), rows.p), idx);
  }
  const std::size_t kk = std::min(k, d.size());
  std::partial_sort(d.begin(), d.begin() + kk, d.end());
  std::vector<std::size_t> out;
  out.reserve(kk);
  for (std::size_t i = 0; i < kk; ++i) out.push_back(d[i].second);
  return out;
}

inline std::vector<std::size_t> indices_of_class(const std::vector<int>& y,
                                                 int cls) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] == cls) idx.push_back(i);
  return idx;
}

// Minority is the rarer class; ties treat 1 as minority (the outcome class).
inline int minority_class(const std::vector<int>& y) {
  auto [n0, n1] = counts(y);
  return n1 <= n0 ? 1 : 0;
}

}  // namespace detail

// Duplicate minority rows with replacement until the classes match.
inline Rows random_over(const Rows& rows, std::uint64_t seed) {
  detail::require_both_classes(rows, "random_over");
  auto [n0, n1] = detail::counts(rows.y);
  const int min_cls = detail::minority_class(rows.y);
  const long deficit = std::labs(n0 - n1);
  Rows out = rows;
  auto min_idx = detail::indices_of_class(rows.y, min_cls);
  Rng rng(seed);
  for (long g = 0; g < deficit; ++g) {
    const std::size_t i = min_idx[rng.uniform_index(min_idx.size())];
    out.push_row(rows.row(i), min_cls);
  }
  return out;
}

// Subsample majority rows without replacement until the classes match.
inline Rows random_under(const Rows& rows, std::uint64_t seed) {
  detail::require_both_classes(rows, "random_under");
  const int min_cls = detail::minority_class(rows.y);
  const int maj_cls = 1 - min_cls;
  auto min_idx = detail::indices_of_class(rows.y, min_cls);
  auto maj_idx = detail::indices_of_class(rows.y, maj_cls);
  Rng rng(seed);
  rng.shuffle(maj_idx);
  maj_idx.resize(min_idx.size());
  std::vector<std::size_t> keep;
  keep.insert(keep.end(), min_idx.begin(), min_idx.end());
  keep.insert(keep.end(), maj_idx.begin(), maj_idx.end());
  std::sort(keep.begin(), keep.end());
  Rows out;
  out.p = rows.p;
  for (std::size_t i : keep) out.push_row(rows.row(i), rows.y[i]);
  return out;
}

// Synthetic minority oversampling: each synthetic point interpolates between
// a minority row and one of its k nearest minority neighbors,
// x_new = x_i + u * (x_nn - x_i) with u drawn in the open interval (0,1).
// Base rows cycle through the minority class so generation is even.
inline Rows smote(const Rows& rows, int k, std::uint64_t seed) {
  detail::require_both_classes(rows, "smote");
  auto [n0, n1] = detail::counts(rows.y);
  const int min_cls = detail::minority_class(rows.y);
  auto min_idx = detail::indices_of_class(rows.y, min_cls);
  const long deficit = std::labs(n0 - n1);
  if (deficit == 0) return rows;
  if (static_cast<long>(min_idx.size()) <= k)
    throw UserError("smote: minority count " +
                    std::to_string(min_idx.size()) +
                    " must exceed k_neighbors " + std::to_string(k) +
                    "; use a smaller k");
  std::vector<std::vector<std::size_t>> nn(min_idx.size());
  for (std::size_t i = 0; i < min_idx.size(); ++i)
    nn[i] = detail::k_nearest(rows, rows.row(min_idx[i]), min_idx[i], min_idx,
                              static_cast<std::size_t>(k));
  Rng rng(seed);
  Rows out = rows;
  std::vector<double> synth(rows.p);
  for (long g = 0; g < deficit; ++g) {
    const std::size_t i = static_cast<std::size_t>(g) % min_idx.size();
    const std::size_t j = nn[i][rng.uniform_index(nn[i].size())];
    const double u = rng.uniform_open();
    const double* a = rows.row(min_idx[i]);
    const double* b = rows.row(j);
    for (std::size_t c = 0; c < rows.p; ++c) synth[c] = a[c] + u * (b[c] - a[c]);
    out.push_row(synth.data(), min_cls);
  }
  return out;
}

// Largest-remainder apportionment of `total` units proportionally to
// nonnegative weights. Floors first, then hands the leftover units to the
// largest fractional remainders (ties to the lower index). A zero weight
// never receives a unit.
inline std::vector<long> largest_remainder_allocation(
    const std::vector<double>& weights, long total) {
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0) throw UserError("largest_remainder_allocation: negative weight");
    sum += w;
  }
  std::vector<long> alloc(weights.size(), 0);
  if (sum <= 0.0 || total <= 0) return alloc;
  std::vector<double> exact(weights.size());
  long assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    exact[i] = weights[i] / sum * total;
    alloc[i] = static_cast<long>(std::floor(exact[i]));
    assigned += alloc[i];
  }
  std::vector<std::size_t> by_rem(weights.size());
  std::iota(by_rem.begin(), by_rem.end(), 0);
  std::stable_sort(by_rem.begin(), by_rem.end(),
                   [&](std::size_t a, std::size_t b) {
                     const double ra = exact[a] - std::floor(exact[a]);
                     const double rb = exact[b] - std::floor(exact[b]);
                     if (ra != rb) return ra > rb;
                     return a < b;
                   });
  for (std::size_t g = 0; assigned < total; ++assigned, ++g)
    ++alloc[by_rem[g % by_rem.size()]];
  return alloc;
}

// Adaptive synthetic sampling: generation is allocated toward minority rows
// with majority-heavy neighborhoods (r_i = majority share of the k nearest
// overall neighbors), apportioned by largest remainder so the total is
// exactly the class gap. Interpolation itself works as in SMOTE.
inline Rows adasyn(const Rows& rows, int k, std::uint64_t seed,
                   std::vector<std::string>* warnings = nullptr) {
  detail::require_both_classes(rows, "adasyn");
  auto [n0, n1] = detail::counts(rows.y);
  const int min_cls = detail::minority_class(rows.y);
  const int maj_cls = 1 - min_cls;
  auto min_idx = detail::indices_of_class(rows.y, min_cls);
  const long deficit = std::labs(n0 - n1);
  if (deficit == 0) return rows;
  if (static_cast<long>(min_idx.size()) <= k)
    throw UserError("adasyn: minority count must exceed k_neighbors");

  std::vector<std::size_t> all_idx(rows.n());
  std::iota(all_idx.begin(), all_idx.end(), 0);
  std::vector<double> r(min_idx.size(), 0.0);
  double r_sum = 0.0;
  for (std::size_t i = 0; i < min_idx.size(); ++i) {
    auto neigh = detail::k_nearest(rows, rows.row(min_idx[i]), min_idx[i],
                                   all_idx, static_cast<std::size_t>(k));
    long maj = 0;
    for (std::size_t idx : neigh)
      if (rows.y[idx] == maj_cls) ++maj;
    r[i] = neigh.empty() ? 0.0 : static_cast<double>(maj) / neigh.size();
    r_sum += r[i];
  }
  std::vector<long> alloc;
  if (r_sum == 0.0) {
    // No borderline minority points; fall back to SMOTE's even allocation.
    if (warnings)
      warnings->push_back(
          "adasyn: no minority point has majority neighbors; falling back to "
          "uniform allocation");
    alloc.assign(min_idx.size(), 0);
    for (long g = 0; g < deficit; ++g) ++alloc[g % min_idx.size()];
  } else {
    alloc = largest_remainder_allocation(r, deficit);
  }

  std::vector<std::vector<std::size_t>> nn(min_idx.size());
  for (std::size_t i = 0; i < min_idx.size(); ++i)
    if (alloc[i] > 0)
      nn[i] = detail::k_nearest(rows, rows.row(min_idx[i]), min_idx[i],
                                min_idx, static_cast<std::size_t>(k));
  Rng rng(seed);
  Rows out = rows;
  std::vector<double> synth(rows.p);
  for (std::size_t i = 0; i < min_idx.size(); ++i) {
    for (long g = 0; g < alloc[i]; ++g) {
      const std::size_t j = nn[i][rng.uniform_index(nn[i].size())];
      const double u = rng.uniform_open();
      const double* a = rows.row(min_idx[i]);
      const double* b = rows.row(j);
      for (std::size_t c = 0; c < rows.p; ++c)
        synth[c] = a[c] + u * (b[c] - a[c]);
      out.push_row(synth.data(), min_cls);
    }
  }
  return out;
}

// Remove the majority member of every Tomek link (a mutual-nearest-neighbor
// pair with opposite labels). With tied class counts the negative class is
// treated as the majority.
inline Rows tomek_clean(const Rows& rows) {
  const std::size_t n = rows.n();
  if (n < 2) return rows;
  auto [n0, n1] = detail::counts(rows.y);
  const int maj_cls = n1 > n0 ? 1 : 0;
  std::vector<std::size_t> all_idx(n);
  std::iota(all_idx.begin(), all_idx.end(), 0);
  std::vector<std::size_t> nn(n);
  for (std::size_t i = 0; i < n; ++i)
    nn[i] = detail::k_nearest(rows, rows.row(i), i, all_idx, 1).front();
  std::vector<char> remove(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = nn[i];
    if (j > i && nn[j] == i && rows.y[i] != rows.y[j]) {
      remove[rows.y[i] == maj_cls ? i : j] = 1;
    }
  }
  Rows out;
  out.p = rows.p;
  for (std::size_t i = 0; i < n; ++i)
    if (!remove[i]) out.push_row(rows.row(i), rows.y[i]);
  return out;
}

// Edited nearest neighbors: drop any sample (either class) whose label loses
// the majority vote of its k nearest neighbors.
inline Rows enn_clean(const Rows& rows, int k = 3) {
  const std::size_t n = rows.n();
  if (n < 2) return rows;
  std::vector<std::size_t> all_idx(n);
  std::iota(all_idx.begin(), all_idx.end(), 0);
  std::vector<char> remove(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto neigh = detail::k_nearest(rows, rows.row(i), i, all_idx,
                                   static_cast<std::size_t>(k));
    long agree = 0;
    for (std::size_t j : neigh)
      if (rows.y[j] == rows.y[i]) ++agree;
    if (2 * agree < static_cast<long>(neigh.size())) remove[i] = 1;
  }
  Rows out;
  out.p = rows.p;
  for (std::size_t i = 0; i < n; ++i)
    if (!remove[i]) out.push_row(rows.row(i), rows.y[i]);
  return out;
}

inline Rows smote_tomek(const Rows& rows, int k, std::uint64_t seed) {
  return tomek_clean(smote(rows, k, seed));
}

inline Rows smote_enn(const Rows& rows, int k, std::uint64_t seed) {
  return enn_clean(smote(rows, k, seed));
}

struct Balanced {
  Rows rows;
  std::map<int, double> weights;  // per class; 1.0 unless class_weight
};

// Dispatch used by the sweep. none/class_weight leave rows untouched;
// class_weight additionally returns the balanced weight map.
inline Balanced apply_balancer(const Rows& rows, const BalancerSpec& spec,
                               std::vector<std::string>* warnings = nullptr) {
  Balanced out;
  out.weights = {{0, 1.0}, {1, 1.0}};
  switch (spec.kind) {
    case BalancerKind::none:
      out.rows = rows;
      break;
    case BalancerKind::class_weight:
      out.rows = rows;
      out.weights = class_weights(rows.y);
      break;
    case BalancerKind::random_over:
      out.rows = random_over(rows, spec.seed);
      break;
    case BalancerKind::random_under:
      out.rows = random_under(rows, spec.seed);
      break;
    case BalancerKind::smote:
      out.rows = smote(rows, spec.k_neighbors, spec.seed);
      break;
    case BalancerKind::adasyn:
      out.rows = adasyn(rows, spec.k_neighbors, spec.seed, warnings);
      break;
    case BalancerKind::smote_tomek:
      out.rows = smote_tomek(rows, spec.k_neighbors, spec.seed);
      break;
    case BalancerKind::smote_enn:
      out.rows = smote_enn(rows, spec.k_neighbors, spec.seed);
      break;
  }
  return out;
}

}  // namespace labrisk::resample
