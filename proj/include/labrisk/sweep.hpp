#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "labrisk/evaluate.hpp"
#include "labrisk/feature_select.hpp"
#include "labrisk/matrix.hpp"
#include "labrisk/models/models.hpp"
#include "labrisk/preprocess.hpp"
#include "labrisk/report.hpp"
#include "labrisk/resample.hpp"
#include "labrisk/rng.hpp"
#include "labrisk/splits.hpp"

namespace labrisk::sweep {

using fsel::FeatureRoute;
using resample::BalancerKind;

enum class Partition : int { train = 0, val = 1, test = 2 };

inline std::string partition_name(int tag) {
  switch (tag) {
    case 0: return "train";
    case 1: return "val";
    case 2: return "test";
  }
  return "untagged";
}

// Append-only record of which partitions each fit-stage call consumed.
class FitAudit {
 public:
  void log(const std::string& stage, const std::set<int>& parts) {
    std::string line = stage + " partitions={";
    bool first = true;
    for (int p : parts) {
      if (!first) line += ",";
      line += partition_name(p);
      first = false;
    }
    line += "}";
    std::lock_guard<std::mutex> lock(mu_);
    events_.push_back(std::move(line));
  }
  std::vector<std::string> entries() const {
    std::lock_guard<std::mutex> lock(mu_);
    return events_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> events_;
};

// Hard gate on leakage: a fit-stage call that sees a row tagged outside the
// allowed partitions aborts the run.
inline void ensure_fit_partitions(const FeatureMatrix& m,
                                  const std::set<int>& allowed,
                                  const std::string& stage,
                                  FitAudit* audit = nullptr) {
  if (m.tags.empty()) return;  // untagged fixture data
  std::set<int> seen(m.tags.begin(), m.tags.end());
  for (int t : seen)
    if (!allowed.count(t))
      throw std::runtime_error("leakage: fit stage '" + stage +
                               "' consumed partition '" + partition_name(t) +
                               "'");
  if (audit) audit->log(stage, seen);
}

// ---------------------------------------------------------------------------
// Pipeline grid: 6 model roles x 3 feature routes x 7 balancer slots.
// ---------------------------------------------------------------------------

enum class ModelRole { logreg, rf, xgb, lgbm, mlp, nb };

inline const std::array<ModelRole, 6>& all_roles() {
  static const std::array<ModelRole, 6> roles = {
      ModelRole::logreg, ModelRole::rf,  ModelRole::xgb,
      ModelRole::lgbm,   ModelRole::mlp, ModelRole::nb};
  return roles;
}

inline std::string role_id(ModelRole r) {
  switch (r) {
    case ModelRole::logreg: return "logreg";
    case ModelRole::rf: return "rf";
    case ModelRole::xgb: return "xgb";
    case ModelRole::lgbm: return "lgbm";
    case ModelRole::mlp: return "mlp";
    case ModelRole::nb: return "nb";
  }
  return "?";
}

inline std::string role_display(ModelRole r) {
  switch (r) {
    case ModelRole::logreg: return "LogisticRegression";
    case ModelRole::rf: return "RandomForest";
    case ModelRole::xgb: return "XGB";
    case ModelRole::lgbm: return "LGBM";
    case ModelRole::mlp: return "MLP";
    case ModelRole::nb: return "NaiveBayes";
  }
  return "?";
}

inline std::optional<ModelRole> role_from_id(const std::string& id) {
  for (ModelRole r : all_roles())
    if (role_id(r) == id) return r;
  return std::nullopt;
}

// Balancer slots in enumeration order; the last slot is the baseline, which
// means class weighting for the linear/forest models and no resampling for
// the rest.
inline const std::array<std::string, 7>& balancer_slot_ids() {
  static const std::array<std::string, 7> ids = {
      "smote",      "adasyn",     "randomover", "randomunder",
      "smotetomek", "smoteenn",   "none"};
  return ids;
}

inline BalancerKind resolve_balancer(int slot, ModelRole role) {
  switch (slot) {
    case 0: return BalancerKind::smote;
    case 1: return BalancerKind::adasyn;
    case 2: return BalancerKind::random_over;
    case 3: return BalancerKind::random_under;
    case 4: return BalancerKind::smote_tomek;
    case 5: return BalancerKind::smote_enn;
    default:
      return (role == ModelRole::logreg || role == ModelRole::rf)
                 ? BalancerKind::class_weight
                 : BalancerKind::none;
  }
}

inline std::string balancer_display(int slot, ModelRole role) {
  switch (slot) {
    case 0: return "SMOTE";
    case 1: return "ADASYN";
    case 2: return "RandomOverSampler";
    case 3: return "RandomUnderSampler";
    case 4: return "SMOTETomek";
    case 5: return "SMOTEENN";
    default:
      return (role == ModelRole::logreg || role == ModelRole::rf)
                 ? "ClassWeight"
                 : "None";
  }
}

inline const std::array<FeatureRoute, 3>& all_routes() {
  static const std::array<FeatureRoute, 3> routes = {
      FeatureRoute::univariate, FeatureRoute::rfe, FeatureRoute::manual};
  return routes;
}

struct PipelineCell {
  ModelRole model;
  FeatureRoute route;
  int balancer_slot;
  int index;  // position in the full 126-cell enumeration
};

inline std::string pipeline_id(const PipelineCell& c) {
  return role_id(c.model) + "-" + fsel::to_string(c.route) + "-" +
         balancer_slot_ids()[c.balancer_slot];
}

inline std::optional<PipelineCell> cell_from_id(const std::string& id) {
  for (std::size_t m = 0; m < all_roles().size(); ++m)
    for (std::size_t r = 0; r < all_routes().size(); ++r)
      for (int b = 0; b < 7; ++b) {
        PipelineCell c{all_roles()[m], all_routes()[r], b,
                       static_cast<int>(m * 21 + r * 7 + b)};
        if (pipeline_id(c) == id) return c;
      }
  return std::nullopt;
}

// Full enumeration with optional filters; indices always refer to the full
// grid so per-cell seeds do not depend on the filter.
inline std::vector<PipelineCell> enumerate_cells(
    const std::vector<ModelRole>& models = {},
    const std::vector<FeatureRoute>& routes = {},
    const std::vector<std::string>& balancers = {}) {
  auto want_model = [&](ModelRole m) {
    return models.empty() ||
           std::find(models.begin(), models.end(), m) != models.end();
  };
  auto want_route = [&](FeatureRoute r) {
    return routes.empty() ||
           std::find(routes.begin(), routes.end(), r) != routes.end();
  };
  auto want_slot = [&](int b) {
    return balancers.empty() ||
           std::find(balancers.begin(), balancers.end(),
                     balancer_slot_ids()[b]) != balancers.end();
  };
  std::vector<PipelineCell> cells;
  int index = 0;
  for (ModelRole m : all_roles())
    for (FeatureRoute r : all_routes())
      for (int b = 0; b < 7; ++b, ++index)
        if (want_model(m) && want_route(r) && want_slot(b))
          cells.push_back({m, r, b, index});
  return cells;
}

// ---------------------------------------------------------------------------
// Hyperparameter grids.
// ---------------------------------------------------------------------------

struct ParamSet {
  double C = 1.0;
  int n_estimators = 100;
  int max_depth = 0;  // 0 renders as None / no limit
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  double learning_rate = 0.1;
  double subsample = 1.0;
  std::vector<int> hidden = {100};
  double alpha = 1e-4;
  bool adaptive_lr = false;
};

inline std::string params_to_string(ModelRole role, const ParamSet& p) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  std::ostringstream s;
  switch (role) {
    case ModelRole::logreg:
      s << "C: " << num(p.C);
      break;
    case ModelRole::rf:
      s << "max_depth: " << (p.max_depth == 0 ? "None" : std::to_string(p.max_depth))
        << ", min_samples_leaf: " << p.min_samples_leaf
        << ", min_samples_split: " << p.min_samples_split
        << ", n_estimators: " << p.n_estimators;
      break;
    case ModelRole::xgb:
      s << "learning_rate: " << num(p.learning_rate)
        << ", max_depth: " << p.max_depth << ", n_estimators: " << p.n_estimators
        << ", subsample: " << num(p.subsample);
      break;
    case ModelRole::lgbm:
      s << "learning_rate: " << num(p.learning_rate)
        << ", max_depth: " << p.max_depth << ", n_estimators: " << p.n_estimators;
      break;
    case ModelRole::mlp: {
      s << "alpha: " << num(p.alpha) << ", hidden_layer_sizes: (";
      for (std::size_t i = 0; i < p.hidden.size(); ++i) {
        s << p.hidden[i];
        if (i + 1 < p.hidden.size()) s << ", ";
      }
      if (p.hidden.size() == 1) s << ",";
      s << "), learning_rate: '" << (p.adaptive_lr ? "adaptive" : "constant")
        << "'";
      break;
    }
    case ModelRole::nb:
      s << "None";
      break;
  }
  return s.str();
}

enum class GridPreset { full, reduced };

// The full preset is the benchmark's exhaustive search space; the reduced
// preset is a desk-scale subset for smoke runs and development.
inline std::vector<ParamSet> grid_for(ModelRole role, GridPreset preset) {
  std::vector<ParamSet> grid;
  ParamSet base;
  switch (role) {
    case ModelRole::logreg: {
      const std::vector<double> cs =
          preset == GridPreset::full
              ? std::vector<double>{0.001, 0.01, 0.1, 1, 10, 100}
              : std::vector<double>{0.1, 1};
      for (double c : cs) {
        base.C = c;
        grid.push_back(base);
      }
      break;
    }
    case ModelRole::rf: {
      const auto ests = preset == GridPreset::full
                            ? std::vector<int>{50, 100, 200}
                            : std::vector<int>{50};
      const auto depths = preset == GridPreset::full
                              ? std::vector<int>{3, 5, 10, 15, 0}
                              : std::vector<int>{5, 0};
      const auto splits = preset == GridPreset::full ? std::vector<int>{2, 5, 10}
                                                     : std::vector<int>{2};
      const auto leaves = preset == GridPreset::full ? std::vector<int>{1, 2, 4}
                                                     : std::vector<int>{1};
      for (int e : ests)
        for (int d : depths)
          for (int s : splits)
            for (int l : leaves) {
              base.n_estimators = e;
              base.max_depth = d;
              base.min_samples_split = s;
              base.min_samples_leaf = l;
              grid.push_back(base);
            }
      break;
    }
    case ModelRole::xgb:
    case ModelRole::lgbm: {
      const auto ests = preset == GridPreset::full
                            ? std::vector<int>{100, 200, 300}
                            : std::vector<int>{50};
      const auto depths = preset == GridPreset::full ? std::vector<int>{3, 6, 9}
                                                     : std::vector<int>{3};
      const auto lrs = preset == GridPreset::full
                           ? std::vector<double>{0.01, 0.1, 0.2}
                           : std::vector<double>{0.1};
      const auto subs = role == ModelRole::xgb
                            ? (preset == GridPreset::full
                                   ? std::vector<double>{0.8, 0.9, 1.0}
                                   : std::vector<double>{0.9})
                            : std::vector<double>{1.0};
      for (int e : ests)
        for (int d : depths)
          for (double lr : lrs)
            for (double sub : subs) {
              base.n_estimators = e;
              base.max_depth = d;
              base.learning_rate = lr;
              base.subsample = sub;
              grid.push_back(base);
            }
      break;
    }
    case ModelRole::mlp: {
      const auto hiddens =
          preset == GridPreset::full
              ? std::vector<std::vector<int>>{{50}, {100}, {50, 50}, {100, 50},
                                              {100, 50, 25}}
              : std::vector<std::vector<int>>{{25}};
      const auto alphas = preset == GridPreset::full
                              ? std::vector<double>{0.0001, 0.001, 0.01, 0.1}
                              : std::vector<double>{0.001};
      const auto schedules = preset == GridPreset::full
                                 ? std::vector<bool>{false, true}
                                 : std::vector<bool>{false};
      for (const auto& h : hiddens)
        for (double a : alphas)
          for (bool ad : schedules) {
            base.hidden = h;
            base.alpha = a;
            base.adaptive_lr = ad;
            grid.push_back(base);
          }
      break;
    }
    case ModelRole::nb:
      grid.push_back(base);
      break;
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Options and results.
// ---------------------------------------------------------------------------

struct SweepOptions {
  SplitSpec split;
  int folds = 5;
  GridPreset preset = GridPreset::full;
  eval::ThresholdObjective fold_threshold = eval::ThresholdObjective::max_mcc;
  int smote_k = 5;
  preprocess::PreprocessOptions prep;
  fsel::RfeOptions rfe;
  fsel::RfecvOptions rfecv;
  int mlp_max_epochs = 200;
  double mlp_learning_rate0 = 0.05;
  int mlp_batch_size = 32;
  int jobs = 1;
  std::uint64_t seed = 1;
  std::vector<ModelRole> models;        // empty = all six
  std::vector<FeatureRoute> routes;     // empty = all three
  std::vector<std::string> balancers;   // slot ids; empty = all seven
};

struct LeaderboardRow {
  int cell_index = 0;
  std::string id;
  ModelRole model = ModelRole::logreg;
  FeatureRoute route = FeatureRoute::manual;
  std::string balancer;
  ParamSet best;
  std::string best_params;
  double cv_mcc = std::numeric_limits<double>::quiet_NaN();
  double val_mcc = std::numeric_limits<double>::quiet_NaN();
  double val_auc = std::numeric_limits<double>::quiet_NaN();
  std::size_t evaluated = 0;
  std::vector<double> fold_mcc;  // per CV fold, for the best combination
  std::vector<std::string> selected_features;
  bool failed = false;
  std::string error;
};

struct BenchmarkResult {
  Split split;
  int resolved_k = 0;
  std::vector<LeaderboardRow> rows;
  std::vector<std::string> warnings;
  std::vector<std::string> audit;
};

// ---------------------------------------------------------------------------
// Shared per-run machinery: fold preprocessing and feature selection caches.
// ---------------------------------------------------------------------------

namespace detail {

struct PreppedFold {
  preprocess::PreprocessState state;
  FeatureMatrix fit;    // preprocessed fit-side rows
  FeatureMatrix score;  // frozen-transform applied score-side rows
};

struct RunContext {
  std::vector<PreppedFold> folds;  // [0..F-1] CV folds, [F] full-fit vs holdout
  int resolved_k = 0;
  // selections[f][route as index]
  std::vector<std::array<fsel::FeatureSetSpec, 3>> selections;
  std::vector<std::string> warnings;
};

inline void parallel_for(std::size_t n, int jobs,
                         const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min<int>(jobs, static_cast<int>(n));
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline resample::Rows to_rows(const FeatureMatrix& m) {
  resample::Rows rows;
  rows.x = m.values;
  rows.y = m.labels;
  rows.p = m.n_cols;
  return rows;
}

inline bool route_active(const SweepOptions& opt, FeatureRoute r) {
  return opt.routes.empty() ||
         std::find(opt.routes.begin(), opt.routes.end(), r) !=
             opt.routes.end();
}

// Preprocess all folds (and the full fit vs holdout pair), resolve the
// automated feature count once, and fit the per-fold feature selections.
inline RunContext build_context(const FeatureMatrix& fit_raw,
                                const FeatureMatrix& holdout_raw,
                                const std::set<int>& allowed_fit,
                                const SweepOptions& opt, FitAudit* audit) {
  RunContext ctx;
  auto folds = grouped_kfold(fit_raw.subject_ids, opt.folds,
                             Rng::derive(opt.seed, 0xF01D));
  const std::size_t F = folds.size();
  ctx.folds.resize(F + 1);

  parallel_for(F + 1, opt.jobs, [&](std::size_t f) {
    FeatureMatrix fit_rows, score_rows;
    if (f < F) {
      fit_rows = fit_raw.select_rows(folds[f].fit_idx);
      score_rows = fit_raw.select_rows(folds[f].score_idx);
    } else {
      fit_rows = fit_raw;
      score_rows = holdout_raw;
    }
    ensure_fit_partitions(fit_rows, allowed_fit, "preprocess_fit", audit);
    preprocess::PreprocessOptions popt = opt.prep;
    popt.seed = Rng::derive(opt.seed, 0x93E9, f);
    auto [state, fitX] = preprocess::preprocess_fit_transform(fit_rows, popt);
    ctx.folds[f].state = std::move(state);
    ctx.folds[f].fit = std::move(fitX);
    ctx.folds[f].score = score_rows.n_rows
                             ? preprocess::preprocess_apply(ctx.folds[f].state,
                                                            score_rows)
                             : score_rows;
  });

  const bool automated = route_active(opt, FeatureRoute::univariate) ||
                         route_active(opt, FeatureRoute::rfe);
  if (automated) {
    fsel::RfecvOptions ropt = opt.rfecv;
    ropt.folds = opt.folds;
    ropt.seed = Rng::derive(opt.seed, 0xFCE2);
    ctx.resolved_k = fsel::rfecv_choose_k(ctx.folds[F].fit, ropt);
  }

  ctx.selections.resize(F + 1);
  std::mutex warn_mu;
  parallel_for(F + 1, opt.jobs, [&](std::size_t f) {
    const FeatureMatrix& fitX = ctx.folds[f].fit;
    ensure_fit_partitions(fitX, allowed_fit, "feature_select_fit", audit);
    if (route_active(opt, FeatureRoute::univariate))
      ctx.selections[f][0] = fsel::univariate_top_k(
          fitX, std::min<int>(ctx.resolved_k, static_cast<int>(fitX.n_cols)));
    if (route_active(opt, FeatureRoute::rfe)) {
      fsel::RfeOptions ropt = opt.rfe;
      ropt.seed = Rng::derive(opt.seed, 0x4FE, f);
      ctx.selections[f][1] = fsel::rfe(
          fitX, std::min<int>(ctx.resolved_k, static_cast<int>(fitX.n_cols)),
          ropt);
    }
    if (route_active(opt, FeatureRoute::manual)) {
      fsel::FeatureSetSpec spec = fsel::manual_panel();
      std::vector<std::string> present;
      for (const auto& name : spec.selected)
        if (fitX.col(name) >= 0) present.push_back(name);
      if (present.size() != spec.selected.size()) {
        std::lock_guard<std::mutex> lock(warn_mu);
        ctx.warnings.push_back(
            "manual panel: some features unavailable after filtering; using " +
            std::to_string(present.size()) + " of " +
            std::to_string(spec.selected.size()));
      }
      spec.selected = std::move(present);
      spec.k = static_cast<int>(spec.selected.size());
      ctx.selections[f][2] = std::move(spec);
    }
  });
  return ctx;
}

inline const fsel::FeatureSetSpec& selection_for(const RunContext& ctx,
                                                 std::size_t fold,
                                                 FeatureRoute route) {
  return ctx.selections[fold][static_cast<int>(route)];
}

inline models::FittedModel fit_model(ModelRole role,
                                     const resample::Balanced& balanced,
                                     const ParamSet& ps, std::uint64_t seed,
                                     const SweepOptions& opt) {
  const auto& rows = balanced.rows;
  std::vector<double> weights;
  if (balanced.weights.at(0) != 1.0 || balanced.weights.at(1) != 1.0) {
    weights.resize(rows.n());
    for (std::size_t i = 0; i < rows.n(); ++i)
      weights[i] = balanced.weights.at(rows.y[i]);
  }
  models::DataView d(rows.x, rows.p, rows.y, weights);
  models::FittedModel fm;
  switch (role) {
    case ModelRole::logreg: {
      models::LogRegOptions o;
      o.C = ps.C;
      fm.family = models::ModelFamily::logreg;
      fm.impl = models::fit_logreg(d, o);
      break;
    }
    case ModelRole::rf: {
      models::ForestOptions o;
      o.n_estimators = ps.n_estimators;
      o.max_depth = ps.max_depth;
      o.min_samples_split = ps.min_samples_split;
      o.min_samples_leaf = ps.min_samples_leaf;
      o.seed = seed;
      fm.family = models::ModelFamily::random_forest;
      fm.impl = models::fit_random_forest(d, o);
      break;
    }
    case ModelRole::xgb:
    case ModelRole::lgbm: {
      models::GbdtOptions o;
      o.n_estimators = ps.n_estimators;
      o.max_depth = ps.max_depth;
      o.learning_rate = ps.learning_rate;
      o.subsample = role == ModelRole::xgb ? ps.subsample : 1.0;
      o.seed = seed;
      fm.family = models::ModelFamily::gbdt;
      fm.impl = models::fit_gbdt(d, o);
      break;
    }
    case ModelRole::mlp: {
      models::MlpOptions o;
      o.hidden = ps.hidden;
      o.alpha = ps.alpha;
      o.adaptive = ps.adaptive_lr;
      o.max_epochs = opt.mlp_max_epochs;
      o.learning_rate0 = opt.mlp_learning_rate0;
      o.batch_size = opt.mlp_batch_size;
      o.seed = seed;
      fm.family = models::ModelFamily::mlp;
      fm.impl = models::fit_mlp(d, o);
      break;
    }
    case ModelRole::nb: {
      fm.family = models::ModelFamily::gaussian_nb;
      fm.impl = models::fit_gaussian_nb(d);
      break;
    }
  }
  return fm;
}

struct ComboScore {
  double mean_mcc = 0.0;
  std::vector<double> fold_mcc;
  std::vector<std::string> warnings;
};

// Score one hyperparameter combination across the CV folds.
inline ComboScore score_combo(const RunContext& ctx, const PipelineCell& cell,
                              const ParamSet& ps, std::size_t combo_index,
                              const SweepOptions& opt, FitAudit* audit) {
  ComboScore out;
  const std::size_t F = ctx.folds.size() - 1;
  const std::uint64_t cell_seed =
      Rng::derive(opt.seed, static_cast<std::uint64_t>(cell.index));
  double sum = 0.0;
  for (std::size_t f = 0; f < F; ++f) {
    const auto& sel = selection_for(ctx, f, cell.route);
    FeatureMatrix fitX = ctx.folds[f].fit.select_columns(sel.selected);
    ensure_fit_partitions(fitX, {static_cast<int>(Partition::train)},
                          "balance", audit);
    resample::BalancerSpec bspec;
    bspec.kind = resolve_balancer(cell.balancer_slot, cell.model);
    bspec.k_neighbors = opt.smote_k;
    bspec.seed = Rng::derive(cell_seed, combo_index, f);
    auto balanced = resample::apply_balancer(to_rows(fitX), bspec,
                                             &out.warnings);
    ensure_fit_partitions(fitX, {static_cast<int>(Partition::train)},
                          "model_fit", audit);
    auto model = fit_model(cell.model, balanced, ps,
                           Rng::derive(cell_seed, combo_index, f + 1000), opt);

    FeatureMatrix scoreX = ctx.folds[f].score.select_columns(sel.selected);
    std::vector<double> scores = models::predict_proba(model, scoreX);
    bool pos = false, neg = false;
    for (int y : scoreX.labels) (y == 1 ? pos : neg) = true;
    double fold_mcc = 0.0;
    if (!pos || !neg) {
      out.warnings.push_back("fold " + std::to_string(f) +
                             ": single-class score side, MCC set to 0");
    } else {
      fold_mcc =
          eval::select_threshold(scores, scoreX.labels, opt.fold_threshold).mcc;
    }
    out.fold_mcc.push_back(fold_mcc);
    sum += fold_mcc;
  }
  out.mean_mcc = F ? sum / F : 0.0;
  return out;
}

}  // namespace detail

// The fitted end of a pipeline: frozen preprocessing, the selected feature
// names, and the trained model.
struct FittedPipeline {
  preprocess::PreprocessState prep;
  std::vector<std::string> features;
  models::FittedModel model;
};

struct GridSearchOutcome {
  ParamSet best;
  double mean_mcc = 0.0;
  std::size_t evaluated = 0;
  std::vector<double> fold_mcc;
  std::vector<std::string> warnings;
};

namespace detail {

inline GridSearchOutcome grid_search_in_context(const RunContext& ctx,
                                                const PipelineCell& cell,
                                                const SweepOptions& opt,
                                                FitAudit* audit) {
  const auto grid = grid_for(cell.model, opt.preset);
  GridSearchOutcome out;
  bool first = true;
  for (std::size_t ci = 0; ci < grid.size(); ++ci) {
    ComboScore score = score_combo(ctx, cell, grid[ci], ci, opt, audit);
    ++out.evaluated;
    for (auto& w : score.warnings) out.warnings.push_back(std::move(w));
    if (first || score.mean_mcc > out.mean_mcc) {
      out.mean_mcc = score.mean_mcc;
      out.best = grid[ci];
      out.fold_mcc = std::move(score.fold_mcc);
      first = false;
    }
  }
  return out;
}

// Refit the winning combination on the full fit side; returns the pipeline
// and its scores on the holdout side of the context.
inline std::pair<FittedPipeline, std::vector<double>> refit_and_score(
    const RunContext& ctx, const PipelineCell& cell, const ParamSet& ps,
    const std::set<int>& allowed_fit, const SweepOptions& opt,
    FitAudit* audit) {
  const std::size_t full = ctx.folds.size() - 1;
  const auto& sel = selection_for(ctx, full, cell.route);
  FeatureMatrix fitX = ctx.folds[full].fit.select_columns(sel.selected);
  ensure_fit_partitions(fitX, allowed_fit, "balance", audit);
  const std::uint64_t cell_seed =
      Rng::derive(opt.seed, static_cast<std::uint64_t>(cell.index));
  resample::BalancerSpec bspec;
  bspec.kind = resolve_balancer(cell.balancer_slot, cell.model);
  bspec.k_neighbors = opt.smote_k;
  bspec.seed = Rng::derive(cell_seed, 0x8EF17, 0);
  std::vector<std::string> warnings;
  auto balanced = resample::apply_balancer(to_rows(fitX), bspec, &warnings);
  ensure_fit_partitions(fitX, allowed_fit, "model_fit", audit);
  auto model =
      fit_model(cell.model, balanced, ps, Rng::derive(cell_seed, 0xF17), opt);

  FittedPipeline fp;
  fp.prep = ctx.folds[full].state;
  fp.features = sel.selected;
  fp.model = std::move(model);

  std::vector<double> holdout_scores;
  if (ctx.folds[full].score.n_rows) {
    FeatureMatrix scoreX = ctx.folds[full].score.select_columns(sel.selected);
    holdout_scores = models::predict_proba(fp.model, scoreX);
  }
  return {std::move(fp), std::move(holdout_scores)};
}

}  // namespace detail

// Standalone grid search for one pipeline cell on training rows only.
inline GridSearchOutcome grid_search(ModelRole model, FeatureRoute route,
                                     int balancer_slot,
                                     const FeatureMatrix& train,
                                     const SweepOptions& opt,
                                     FitAudit* audit = nullptr) {
  SweepOptions local = opt;
  local.routes = {route};
  FeatureMatrix empty;
  empty.columns = train.columns;
  empty.n_cols = train.n_cols;
  auto ctx = detail::build_context(
      train, empty, {static_cast<int>(Partition::train)}, local, audit);
  PipelineCell cell{model, route, balancer_slot, 0};
  for (std::size_t m = 0; m < all_roles().size(); ++m)
    if (all_roles()[m] == model)
      for (std::size_t r = 0; r < all_routes().size(); ++r)
        if (all_routes()[r] == route)
          cell.index = static_cast<int>(m * 21 + r * 7 + balancer_slot);
  return detail::grid_search_in_context(ctx, cell, local, audit);
}

// Execute the pipeline benchmark: grid-search every enumerated cell on the
// training folds, refit each winner on the full training set, and rank by
// validation MCC. Individual cell failures are recorded, not fatal.
inline BenchmarkResult run_benchmark(const FeatureMatrix& data,
                                     const SweepOptions& opt) {
  BenchmarkResult result;
  FitAudit audit;
  FeatureMatrix tagged = data;
  result.split = group_shuffle_split(tagged.subject_ids, opt.split);
  tagged.tags.assign(tagged.n_rows, -1);
  for (std::size_t i : result.split.train_idx)
    tagged.tags[i] = static_cast<int>(Partition::train);
  for (std::size_t i : result.split.val_idx)
    tagged.tags[i] = static_cast<int>(Partition::val);
  for (std::size_t i : result.split.test_idx)
    tagged.tags[i] = static_cast<int>(Partition::test);

  FeatureMatrix train = tagged.select_rows(result.split.train_idx);
  FeatureMatrix val = tagged.select_rows(result.split.val_idx);

  auto ctx = detail::build_context(
      train, val, {static_cast<int>(Partition::train)}, opt, &audit);
  result.resolved_k = ctx.resolved_k;
  result.warnings = ctx.warnings;

  auto cells = enumerate_cells(opt.models, opt.routes, opt.balancers);
  result.rows.resize(cells.size());
  std::mutex warn_mu;

  detail::parallel_for(cells.size(), opt.jobs, [&](std::size_t i) {
    const PipelineCell& cell = cells[i];
    LeaderboardRow row;
    row.cell_index = cell.index;
    row.id = pipeline_id(cell);
    row.model = cell.model;
    row.route = cell.route;
    row.balancer = balancer_display(cell.balancer_slot, cell.model);
    try {
      auto outcome = detail::grid_search_in_context(ctx, cell, opt, &audit);
      row.best = outcome.best;
      row.best_params = params_to_string(cell.model, outcome.best);
      row.cv_mcc = outcome.mean_mcc;
      row.evaluated = outcome.evaluated;
      row.fold_mcc = outcome.fold_mcc;
      {
        std::lock_guard<std::mutex> lock(warn_mu);
        for (auto& w : outcome.warnings)
          result.warnings.push_back(row.id + ": " + w);
      }
      auto [pipeline, val_scores] = detail::refit_and_score(
          ctx, cell, outcome.best, {static_cast<int>(Partition::train)}, opt,
          &audit);
      row.selected_features = pipeline.features;
      const auto& val_labels = ctx.folds.back().score.labels;
      bool pos = false, neg = false;
      for (int y : val_labels) (y == 1 ? pos : neg) = true;
      if (pos && neg) {
        row.val_mcc = eval::select_threshold(val_scores, val_labels,
                                             opt.fold_threshold)
                          .mcc;
        row.val_auc = eval::auc(val_scores, val_labels);
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    result.rows[i] = std::move(row);
  });

  // NaN-safe ranking key: failed cells last, unscored cells just above them.
  auto sort_key = [](const LeaderboardRow& r) {
    if (r.failed) return -std::numeric_limits<double>::infinity();
    if (std::isnan(r.val_mcc)) return -std::numeric_limits<double>::max();
    return r.val_mcc;
  };
  std::stable_sort(result.rows.begin(), result.rows.end(),
                   [&](const LeaderboardRow& a, const LeaderboardRow& b) {
                     const double ka = sort_key(a), kb = sort_key(b);
                     if (ka != kb) return ka > kb;
                     return a.cell_index < b.cell_index;
                   });
  result.audit = audit.entries();
  return result;
}

struct FinalEvalOptions {
  eval::ThresholdObjective threshold = eval::ThresholdObjective::max_mcc;
  int n_boot = 2000;
  double ci_level = 0.95;
  bool subject_bootstrap = false;  // resample subjects instead of visits
};

struct FinalResult {
  eval::EvaluationReport report;
  FittedPipeline pipeline;
  FeatureMatrix test_features;  // preprocessed, selected columns
  std::vector<double> test_scores;
  int resolved_k = 0;
  std::vector<std::string> audit;
};

// Final protocol: refit preprocessing, selection, balancing, and the model
// on train+val, pick the threshold from grouped out-of-fold scores (or use
// 0.5), then touch the test partition exactly once, for scoring.
inline FinalResult final_evaluate(const FeatureMatrix& data,
                                  const Split& split, ModelRole model,
                                  FeatureRoute route, int balancer_slot,
                                  const ParamSet& params,
                                  const SweepOptions& opt,
                                  const FinalEvalOptions& fopt = {}) {
  FitAudit audit;
  FeatureMatrix tagged = data;
  if (tagged.tags.empty()) {
    tagged.tags.assign(tagged.n_rows, -1);
    for (std::size_t i : split.train_idx)
      tagged.tags[i] = static_cast<int>(Partition::train);
    for (std::size_t i : split.val_idx)
      tagged.tags[i] = static_cast<int>(Partition::val);
    for (std::size_t i : split.test_idx)
      tagged.tags[i] = static_cast<int>(Partition::test);
  }
  std::vector<std::size_t> trainval = split.train_idx;
  trainval.insert(trainval.end(), split.val_idx.begin(), split.val_idx.end());
  FeatureMatrix tv = tagged.select_rows(trainval);
  FeatureMatrix test = tagged.select_rows(split.test_idx);

  const std::set<int> allowed = {static_cast<int>(Partition::train),
                                 static_cast<int>(Partition::val)};
  SweepOptions local = opt;
  local.routes = {route};
  local.seed = Rng::derive(opt.seed, 0xF1A1);

  auto ctx = detail::build_context(tv, test, allowed, local, &audit);
  PipelineCell cell{model, route, balancer_slot, 0};
  for (std::size_t m = 0; m < all_roles().size(); ++m)
    if (all_roles()[m] == model)
      for (std::size_t r = 0; r < all_routes().size(); ++r)
        if (all_routes()[r] == route)
          cell.index = static_cast<int>(m * 21 + r * 7 + balancer_slot);

  FinalResult out;
  out.resolved_k = ctx.resolved_k;

  // Threshold from pooled out-of-fold scores on train+val.
  eval::ThresholdChoice choice;
  if (fopt.threshold == eval::ThresholdObjective::fixed_half) {
    choice.threshold = 0.5;
    out.report.threshold_mode = "fixed_0.5";
  } else {
    std::vector<double> oof_scores;
    std::vector<int> oof_labels;
    const std::size_t F = ctx.folds.size() - 1;
    for (std::size_t f = 0; f < F; ++f) {
      const auto& sel = detail::selection_for(ctx, f, route);
      FeatureMatrix fitX = ctx.folds[f].fit.select_columns(sel.selected);
      ensure_fit_partitions(fitX, allowed, "balance", &audit);
      resample::BalancerSpec bspec;
      bspec.kind = resolve_balancer(balancer_slot, model);
      bspec.k_neighbors = opt.smote_k;
      bspec.seed = Rng::derive(local.seed, 0x0F0F, f);
      auto balanced = resample::apply_balancer(detail::to_rows(fitX), bspec);
      ensure_fit_partitions(fitX, allowed, "model_fit", &audit);
      auto fold_model = detail::fit_model(
          model, balanced, params, Rng::derive(local.seed, 0x1F1F, f), local);
      FeatureMatrix scoreX = ctx.folds[f].score.select_columns(sel.selected);
      auto scores = models::predict_proba(fold_model, scoreX);
      oof_scores.insert(oof_scores.end(), scores.begin(), scores.end());
      oof_labels.insert(oof_labels.end(), scoreX.labels.begin(),
                        scoreX.labels.end());
    }
    choice = eval::select_threshold(oof_scores, oof_labels,
                                    eval::ThresholdObjective::max_mcc);
    out.report.threshold_mode = "oof_mcc";
  }

  auto [pipeline, test_scores] =
      detail::refit_and_score(ctx, cell, params, allowed, local, &audit);
  out.pipeline = std::move(pipeline);
  out.test_scores = std::move(test_scores);
  out.test_features =
      ctx.folds.back().score.select_columns(out.pipeline.features);

  const auto& labels = out.test_features.labels;
  auto counts = eval::confusion_at(out.test_scores, labels, choice.threshold);
  out.report.threshold = choice.threshold;
  out.report.threshold_degenerate = choice.degenerate;
  out.report.mcc = eval::mcc(counts);
  out.report.rates = eval::basic_rates(counts);
  out.report.roc = eval::roc_curve(out.test_scores, labels);
  out.report.pr = eval::pr_curve(out.test_scores, labels);
  out.report.auc = out.report.roc.area;
  auto [lo, hi] =
      fopt.subject_bootstrap
          ? eval::bootstrap_auc_ci_subjects(out.test_scores, labels,
                                            out.test_features.subject_ids,
                                            fopt.n_boot, fopt.ci_level,
                                            Rng::derive(opt.seed, 0xB007))
          : eval::bootstrap_auc_ci(out.test_scores, labels, fopt.n_boot,
                                   fopt.ci_level,
                                   Rng::derive(opt.seed, 0xB007));
  out.report.auc_ci_low = lo;
  out.report.auc_ci_high = hi;
  long pos = 0;
  for (int y : labels) pos += y == 1;
  out.report.prevalence =
      labels.empty() ? 0.0 : static_cast<double>(pos) / labels.size();
  out.audit = audit.entries();
  return out;
}

// ---------------------------------------------------------------------------
// Leaderboard serialization.
// ---------------------------------------------------------------------------

inline void write_leaderboard_csv(const std::vector<LeaderboardRow>& rows,
                                  const std::string& path) {
  CsvWriter w(path);
  w.row({"rank", "pipeline", "base_model", "data_balancer", "feature_set",
         "mcc", "auc", "cv_mcc", "status", "best_hyperparams"});
  int rank = 1;
  for (const auto& r : rows) {
    w.row({std::to_string(rank++), r.id, role_display(r.model),
           r.balancer, fsel::to_string(r.route),
           r.failed ? "" : fmt_double(r.val_mcc),
           r.failed ? "" : fmt_double(r.val_auc),
           r.failed ? "" : fmt_double(r.cv_mcc),
           r.failed ? "failed" : "ok",
           r.failed ? r.error : r.best_params});
  }
}

inline nlohmann::json leaderboard_to_json(const BenchmarkResult& res) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : res.rows) {
    nlohmann::json j;
    j["cell_index"] = r.cell_index;
    j["pipeline"] = r.id;
    j["base_model"] = role_display(r.model);
    j["data_balancer"] = r.balancer;
    j["feature_set"] = fsel::to_string(r.route);
    j["failed"] = r.failed;
    if (r.failed) {
      j["error"] = r.error;
    } else {
      j["val_mcc"] = r.val_mcc;
      j["val_auc"] = r.val_auc;
      j["cv_mcc"] = r.cv_mcc;
      j["fold_mcc"] = r.fold_mcc;
      j["evaluated_combinations"] = r.evaluated;
      j["best_hyperparams"] = r.best_params;
      j["selected_features"] = r.selected_features;
    }
    rows.push_back(std::move(j));
  }
  nlohmann::json out;
  out["resolved_k"] = res.resolved_k;
  out["rows"] = std::move(rows);
  out["warnings"] = res.warnings;
  return out;
}

}  // namespace labrisk::sweep
