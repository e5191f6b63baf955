#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "labrisk/errors.hpp"
#include "labrisk/linalg.hpp"
#include "labrisk/matrix.hpp"

namespace labrisk::preprocess {

// Appends the two inflammation ratios. A ratio is missing whenever an
// operand is missing or the lymphocyte count is nonpositive; imputation
// fills those downstream, so ratio missingness mirrors source missingness.
inline FeatureMatrix engineer_ratios(const FeatureMatrix& m) {
  for (const char* req : {"neutrophils", "lymphocytes", "platelets"})
    if (m.col(req) < 0)
      throw UserError(std::string("engineer_ratios: required column '") + req +
                      "' absent");
  const std::size_t c_neut = m.require_col("neutrophils");
  const std::size_t c_lymph = m.require_col("lymphocytes");
  const std::size_t c_plt = m.require_col("platelets");
  std::vector<double> nlr(m.n_rows, FeatureMatrix::missing());
  std::vector<double> plr(m.n_rows, FeatureMatrix::missing());
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    const double lymph = m.at(r, c_lymph);
    if (FeatureMatrix::is_missing(lymph) || lymph <= 0.0) continue;
    const double neut = m.at(r, c_neut);
    if (!FeatureMatrix::is_missing(neut)) nlr[r] = neut / lymph;
    const double plt = m.at(r, c_plt);
    if (!FeatureMatrix::is_missing(plt)) plr[r] = plt / lymph;
  }
  FeatureMatrix out = m;
  out.append_column("nlr", nlr);
  out.append_column("plr", plr);
  return out;
}

struct MissingnessFilter {
  std::vector<std::string> kept;
  std::vector<std::string> dropped;
};

// Drop features whose training missing fraction strictly exceeds the
// threshold.
inline MissingnessFilter fit_missingness_filter(const FeatureMatrix& train,
                                                double threshold = 0.70) {
  if (threshold <= 0.0 || threshold > 1.0)
    throw UserError("missingness threshold must be in (0,1]");
  MissingnessFilter f;
  for (std::size_t c = 0; c < train.n_cols; ++c) {
    const double frac =
        train.n_rows == 0
            ? 0.0
            : static_cast<double>(train.missing_count(c)) / train.n_rows;
    if (frac > threshold)
      f.dropped.push_back(train.columns[c]);
    else
      f.kept.push_back(train.columns[c]);
  }
  if (f.kept.empty())
    throw UserError("missingness filter dropped every feature");
  return f;
}

inline FeatureMatrix filter_missingness(const FeatureMatrix& m,
                                        double threshold = 0.70) {
  return m.select_columns(fit_missingness_filter(m, threshold).kept);
}

struct MiceOptions {
  int max_iters = 10;
  double tol = 1e-3;      // stop when max relative change of imputed cells
  double ridge = 1e-3;    // penalty on slopes; intercept unpenalized
};

// One chained pass: a ridge regression per incomplete feature, in the fixed
// fit-time order. The full schedule is stored so apply() replays the exact
// fit-time arithmetic.
struct MiceRegression {
  std::size_t target = 0;
  double intercept = 0.0;
  std::vector<double> coef;  // one per column; coef[target] == 0
};

struct MiceState {
  std::vector<std::string> columns;
  std::vector<double> medians;             // initial fill per column
  std::vector<std::size_t> order;          // incomplete columns, by rising missingness
  std::vector<std::vector<MiceRegression>> rounds;
  std::vector<double> round_max_change;    // convergence trace, per round
  std::uint64_t fit_seed = 0;
};

namespace detail {

inline double column_median(const FeatureMatrix& m, std::size_t c) {
  std::vector<double> vals;
  for (std::size_t r = 0; r < m.n_rows; ++r)
    if (!FeatureMatrix::is_missing(m.at(r, c))) vals.push_back(m.at(r, c));
  if (vals.empty()) return FeatureMatrix::missing();
  std::sort(vals.begin(), vals.end());
  const std::size_t n = vals.size();
  return n % 2 ? vals[n / 2] : (vals[n / 2 - 1] + vals[n / 2]) / 2.0;
}

// Ridge fit of `target` on every other column, over rows where the target
// was observed. Predictors are centered so only slopes are penalized.
inline MiceRegression fit_feature_regression(
    const FeatureMatrix& completed, const std::vector<char>& observed_mask,
    std::size_t target, double ridge) {
  const std::size_t p = completed.n_cols;
  std::vector<std::size_t> predictors;
  predictors.reserve(p - 1);
  for (std::size_t c = 0; c < p; ++c)
    if (c != target) predictors.push_back(c);
  const std::size_t q = predictors.size();

  std::vector<double> xm(q, 0.0);
  double ym = 0.0;
  std::size_t n_obs = 0;
  for (std::size_t r = 0; r < completed.n_rows; ++r) {
    if (!observed_mask[r * p + target]) continue;
    ++n_obs;
    ym += completed.at(r, target);
    for (std::size_t j = 0; j < q; ++j) xm[j] += completed.at(r, predictors[j]);
  }
  ym /= n_obs;
  for (auto& v : xm) v /= n_obs;

  std::vector<double> xtx(q * q, 0.0), xty(q, 0.0);
  for (std::size_t r = 0; r < completed.n_rows; ++r) {
    if (!observed_mask[r * p + target]) continue;
    const double yc = completed.at(r, target) - ym;
    for (std::size_t j = 0; j < q; ++j) {
      const double xj = completed.at(r, predictors[j]) - xm[j];
      xty[j] += xj * yc;
      for (std::size_t k = 0; k <= j; ++k)
        xtx[j * q + k] += xj * (completed.at(r, predictors[k]) - xm[k]);
    }
  }
  for (std::size_t j = 0; j < q; ++j) {
    for (std::size_t k = j + 1; k < q; ++k) xtx[j * q + k] = xtx[k * q + j];
    xtx[j * q + j] += ridge;
  }
  std::vector<double> beta = linalg::cholesky_solve(std::move(xtx), xty);

  MiceRegression reg;
  reg.target = target;
  reg.coef.assign(p, 0.0);
  reg.intercept = ym;
  for (std::size_t j = 0; j < q; ++j) {
    reg.coef[predictors[j]] = beta[j];
    reg.intercept -= beta[j] * xm[j];
  }
  return reg;
}

inline double predict_regression(const MiceRegression& reg,
                                 const FeatureMatrix& m, std::size_t r) {
  double v = reg.intercept;
  for (std::size_t c = 0; c < m.n_cols; ++c)
    if (c != reg.target) v += reg.coef[c] * m.at(r, c);
  return v;
}

}  // namespace detail

// Chained-equations imputation, single completed dataset. Observed cells are
// never touched. Features are visited in increasing-missingness order; each
// round refits the ridge regressions against the current completed matrix
// until imputed cells move less than tol (relative to the feature's observed
// magnitude) or max_iters rounds have run.
inline std::pair<MiceState, FeatureMatrix> mice_fit_transform(
    const FeatureMatrix& train, std::uint64_t seed,
    const MiceOptions& opt = {}) {
  if (train.n_cols < 2)
    throw UserError("mice: at least 2 features required");
  MiceState state;
  state.columns = train.columns;
  state.fit_seed = seed;

  const std::size_t p = train.n_cols;
  std::vector<char> observed(train.n_rows * p);
  std::vector<std::pair<std::size_t, std::size_t>> incomplete;  // (missing, col)
  for (std::size_t c = 0; c < p; ++c) {
    const std::size_t miss = train.missing_count(c);
    if (miss == train.n_rows)
      throw UserError("mice: feature '" + train.columns[c] +
                      "' has no observed training values");
    if (miss > 0) incomplete.emplace_back(miss, c);
  }
  std::sort(incomplete.begin(), incomplete.end());
  for (const auto& [miss, c] : incomplete) state.order.push_back(c);

  state.medians.resize(p);
  FeatureMatrix completed = train;
  for (std::size_t c = 0; c < p; ++c) {
    state.medians[c] = detail::column_median(train, c);
    for (std::size_t r = 0; r < train.n_rows; ++r) {
      observed[r * p + c] = !FeatureMatrix::is_missing(train.at(r, c));
      if (!observed[r * p + c]) completed.at(r, c) = state.medians[c];
    }
  }
  if (state.order.empty()) return {std::move(state), std::move(completed)};

  std::vector<double> scale(p, 1.0);
  for (std::size_t c = 0; c < p; ++c) {
    double mx = 0.0;
    for (std::size_t r = 0; r < train.n_rows; ++r)
      if (observed[r * p + c]) mx = std::max(mx, std::abs(train.at(r, c)));
    scale[c] = mx > 0 ? mx : 1.0;
  }

  for (int round = 0; round < opt.max_iters; ++round) {
    std::vector<MiceRegression> regs;
    double max_change = 0.0;
    for (std::size_t c : state.order) {
      MiceRegression reg =
          detail::fit_feature_regression(completed, observed, c, opt.ridge);
      for (std::size_t r = 0; r < completed.n_rows; ++r) {
        if (observed[r * p + c]) continue;
        const double next = detail::predict_regression(reg, completed, r);
        max_change =
            std::max(max_change, std::abs(next - completed.at(r, c)) / scale[c]);
        completed.at(r, c) = next;
      }
      regs.push_back(std::move(reg));
    }
    state.rounds.push_back(std::move(regs));
    state.round_max_change.push_back(max_change);
    if (max_change < opt.tol) break;
  }
  return {std::move(state), std::move(completed)};
}

// Replays the frozen fit-time schedule on new rows: median fill, then every
// stored round in order. Applying to the training matrix reproduces the
// fit-time output bit for bit.
inline FeatureMatrix mice_apply(const MiceState& state,
                                const FeatureMatrix& m) {
  if (m.columns != state.columns)
    throw UserError("mice_apply: column mismatch with fitted state");
  const std::size_t p = m.n_cols;
  std::vector<char> observed(m.n_rows * p);
  FeatureMatrix completed = m;
  for (std::size_t c = 0; c < p; ++c)
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      observed[r * p + c] = !FeatureMatrix::is_missing(m.at(r, c));
      if (!observed[r * p + c]) completed.at(r, c) = state.medians[c];
    }
  for (const auto& round : state.rounds) {
    for (const auto& reg : round) {
      for (std::size_t r = 0; r < completed.n_rows; ++r) {
        if (observed[r * p + reg.target]) continue;
        completed.at(r, reg.target) =
            detail::predict_regression(reg, completed, r);
      }
    }
  }
  return completed;
}

struct ScaleState {
  std::vector<std::string> columns;
  std::vector<double> center;  // median
  std::vector<double> scale;   // Q3 - Q1, or 1 when degenerate / excluded
};

namespace detail {
// Linear-interpolation quantile (the common "type 7" rule).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double h = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}
}  // namespace detail

// Center on the median, scale by the interquartile range. The binary sex
// column passes through untouched. Expects a complete matrix.
inline ScaleState robust_scale_fit(const FeatureMatrix& train) {
  ScaleState s;
  s.columns = train.columns;
  s.center.assign(train.n_cols, 0.0);
  s.scale.assign(train.n_cols, 1.0);
  for (std::size_t c = 0; c < train.n_cols; ++c) {
    if (train.columns[c] == "sex") continue;
    std::vector<double> vals;
    vals.reserve(train.n_rows);
    for (std::size_t r = 0; r < train.n_rows; ++r) {
      if (FeatureMatrix::is_missing(train.at(r, c)))
        throw UserError("robust_scale_fit: missing value in column '" +
                        train.columns[c] + "'; impute first");
      vals.push_back(train.at(r, c));
    }
    std::sort(vals.begin(), vals.end());
    s.center[c] = detail::quantile_sorted(vals, 0.5);
    const double iqr = detail::quantile_sorted(vals, 0.75) -
                       detail::quantile_sorted(vals, 0.25);
    s.scale[c] = iqr != 0.0 ? iqr : 1.0;
  }
  return s;
}

inline FeatureMatrix robust_scale_apply(const ScaleState& s,
                                        const FeatureMatrix& m) {
  if (m.columns != s.columns)
    throw UserError("robust_scale_apply: column mismatch with fitted state");
  FeatureMatrix out = m;
  for (std::size_t c = 0; c < m.n_cols; ++c) {
    if (m.columns[c] == "sex") continue;
    for (std::size_t r = 0; r < m.n_rows; ++r)
      out.at(r, c) = (m.at(r, c) - s.center[c]) / s.scale[c];
  }
  return out;
}

// The full fitted preprocessing chain: ratio engineering, missingness
// filter, imputation, scaling. Fitted on training rows only and frozen.
struct PreprocessState {
  bool with_ratios = true;
  double missing_threshold = 0.70;
  std::vector<std::string> kept;
  std::vector<std::string> dropped;
  MiceState mice;
  ScaleState scaler;
};

struct PreprocessOptions {
  bool with_ratios = true;
  double missing_threshold = 0.70;
  MiceOptions mice;
  std::uint64_t seed = 0;
};

inline std::pair<PreprocessState, FeatureMatrix> preprocess_fit_transform(
    const FeatureMatrix& train, const PreprocessOptions& opt = {}) {
  PreprocessState st;
  st.with_ratios = opt.with_ratios;
  st.missing_threshold = opt.missing_threshold;
  FeatureMatrix m = opt.with_ratios ? engineer_ratios(train) : train;
  auto filter = fit_missingness_filter(m, opt.missing_threshold);
  st.kept = filter.kept;
  st.dropped = filter.dropped;
  m = m.select_columns(st.kept);
  auto [mice_state, completed] = mice_fit_transform(m, opt.seed, opt.mice);
  st.mice = std::move(mice_state);
  st.scaler = robust_scale_fit(completed);
  FeatureMatrix scaled = robust_scale_apply(st.scaler, completed);
  return {std::move(st), std::move(scaled)};
}

inline FeatureMatrix preprocess_apply(const PreprocessState& st,
                                      const FeatureMatrix& m) {
  FeatureMatrix x = st.with_ratios ? engineer_ratios(m) : m;
  x = x.select_columns(st.kept);
  x = mice_apply(st.mice, x);
  return robust_scale_apply(st.scaler, x);
}

// Audit dump of everything the fit learned.
inline nlohmann::json to_json(const PreprocessState& st) {
  nlohmann::json j;
  j["with_ratios"] = st.with_ratios;
  j["missing_threshold"] = st.missing_threshold;
  j["kept_features"] = st.kept;
  j["dropped_features"] = st.dropped;
  j["medians"] = st.mice.medians;
  j["mice_order"] = st.mice.order;
  j["mice_round_max_change"] = st.mice.round_max_change;
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& round : st.mice.rounds) {
    nlohmann::json regs = nlohmann::json::array();
    for (const auto& reg : round) {
      regs.push_back({{"target", reg.target},
                      {"intercept", reg.intercept},
                      {"coef", reg.coef}});
    }
    rounds.push_back(std::move(regs));
  }
  j["mice_rounds"] = std::move(rounds);
  j["scale_center"] = st.scaler.center;
  j["scale_iqr"] = st.scaler.scale;
  return j;
}

}  // namespace labrisk::preprocess
