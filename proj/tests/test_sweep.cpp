#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "labrisk/cohort.hpp"
#include "labrisk/sweep.hpp"
#include "labrisk/synth.hpp"

using namespace labrisk;
using namespace labrisk::sweep;

namespace {

FeatureMatrix signal_matrix(std::uint64_t seed, int n_subjects = 120,
                            int visits = 800) {
  cohort::SynthConfig cfg;
  cfg.n_subjects = n_subjects;
  cfg.target_visits = visits;
  cfg.age_bracket_rates = {{0.0, 0.0, 0.15}};
  cfg.signal_effects = {{"hemoglobin", -1.2}, {"wbc", 0.9}};
  cfg.seed = seed;
  return cohort::cohort_to_matrix(cohort::synthesize_cohort(cfg));
}

SweepOptions small_options(std::uint64_t seed) {
  SweepOptions opt;
  opt.preset = GridPreset::reduced;
  opt.seed = seed;
  opt.split.seed = seed;
  opt.mlp_max_epochs = 30;
  opt.rfe.n_estimators = 15;
  opt.rfecv.estimator.n_estimators = 15;
  return opt;
}

}  // namespace

TEST_CASE("group shuffle split: fractions and disjointness") {
  std::vector<std::string> ids;
  for (int s = 0; s < 10; ++s)
    for (int v = 0; v < 3; ++v) ids.push_back("S" + std::to_string(s));
  SplitSpec spec;
  spec.seed = 4;
  auto split = group_shuffle_split(ids, spec);
  auto subjects_of = [&](const std::vector<std::size_t>& idx) {
    std::set<std::string> out;
    for (auto i : idx) out.insert(ids[i]);
    return out;
  };
  auto tr = subjects_of(split.train_idx);
  auto va = subjects_of(split.val_idx);
  auto te = subjects_of(split.test_idx);
  REQUIRE(tr.size() == 6);
  REQUIRE(va.size() == 2);
  REQUIRE(te.size() == 2);
  for (const auto& s : va) REQUIRE(tr.count(s) == 0);
  for (const auto& s : te) {
    REQUIRE(tr.count(s) == 0);
    REQUIRE(va.count(s) == 0);
  }
  REQUIRE_THROWS_AS(
      group_shuffle_split(std::vector<std::string>{"A", "A", "B"}, spec),
      UserError);
}

TEST_CASE("group shuffle split keeps partitions representative") {
  cohort::SynthConfig cfg;
  cfg.seed = 12;
  auto c = cohort::synthesize_cohort(cfg);  // full 3044-subject shape
  auto m = cohort::cohort_to_matrix(c);
  long pos = 0;
  for (int y : m.labels) pos += y;
  const double overall = static_cast<double>(pos) / m.n_rows;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SplitSpec spec;
    spec.seed = seed;
    auto split = group_shuffle_split(m.subject_ids, spec);
    for (const auto* part : {&split.train_idx, &split.val_idx, &split.test_idx}) {
      long p = 0;
      for (auto i : *part) p += m.labels[i];
      const double frac = static_cast<double>(p) / part->size();
      REQUIRE(frac == Catch::Approx(overall).margin(0.02));
    }
  }
}

TEST_CASE("grouped kfold: boundary and partition contract") {
  std::vector<std::string> ids = {"A", "B", "C", "D", "E"};
  auto folds = grouped_kfold(ids, 5, 3);
  REQUIRE(folds.size() == 5);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    REQUIRE(f.score_idx.size() == 1);  // one subject each
    for (auto i : f.score_idx) REQUIRE(seen.insert(i).second);
  }
  REQUIRE(seen.size() == 5);
  REQUIRE_THROWS_AS(grouped_kfold(std::vector<std::string>{"A", "B"}, 5, 1),
                    UserError);
}

TEST_CASE("grouped kfold never leaks a subject across fold sides") {
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<std::string> ids;
    const int n_subjects = 8 + static_cast<int>(rng.uniform_index(30));
    for (int s = 0; s < n_subjects; ++s) {
      const int visits = 1 + static_cast<int>(rng.uniform_index(6));
      for (int v = 0; v < visits; ++v) ids.push_back("S" + std::to_string(s));
    }
    auto folds = grouped_kfold(ids, 5, rep);
    std::size_t covered = 0;
    for (const auto& f : folds) {
      std::set<std::string> fit, score;
      for (auto i : f.fit_idx) fit.insert(ids[i]);
      for (auto i : f.score_idx) score.insert(ids[i]);
      for (const auto& s : score) REQUIRE(fit.count(s) == 0);
      REQUIRE(f.fit_idx.size() + f.score_idx.size() == ids.size());
      covered += f.score_idx.size();
    }
    REQUIRE(covered == ids.size());  // score sides partition the data
  }
}

TEST_CASE("cell enumeration covers the full 126-cell grid") {
  auto all = enumerate_cells();
  REQUIRE(all.size() == 126);
  std::set<std::string> ids;
  for (const auto& c : all) ids.insert(pipeline_id(c));
  REQUIRE(ids.size() == 126);
  // filters reduce multiplicatively
  auto some = enumerate_cells({ModelRole::logreg},
                              {fsel::FeatureRoute::manual,
                               fsel::FeatureRoute::rfe},
                              {"none", "smote"});
  REQUIRE(some.size() == 4);
  // id round trip
  for (const auto& c : some) {
    auto back = cell_from_id(pipeline_id(c));
    REQUIRE(back);
    REQUIRE(back->index == c.index);
  }
}

TEST_CASE("hyperparameter grids enumerate the full search space") {
  REQUIRE(grid_for(ModelRole::logreg, GridPreset::full).size() == 6);
  REQUIRE(grid_for(ModelRole::rf, GridPreset::full).size() == 135);
  REQUIRE(grid_for(ModelRole::xgb, GridPreset::full).size() == 81);
  REQUIRE(grid_for(ModelRole::lgbm, GridPreset::full).size() == 27);
  REQUIRE(grid_for(ModelRole::mlp, GridPreset::full).size() == 40);
  REQUIRE(grid_for(ModelRole::nb, GridPreset::full).size() == 1);
  const auto logreg = grid_for(ModelRole::logreg, GridPreset::full);
  REQUIRE(logreg.front().C == 0.001);
  REQUIRE(logreg.back().C == 100.0);
  REQUIRE(params_to_string(ModelRole::logreg, logreg[2]) == "C: 0.1");
  auto rf = grid_for(ModelRole::rf, GridPreset::full);
  REQUIRE(params_to_string(ModelRole::rf, rf.back()) ==
          "max_depth: None, min_samples_leaf: 4, min_samples_split: 10, "
          "n_estimators: 200");
  auto mlp = grid_for(ModelRole::mlp, GridPreset::full);
  REQUIRE(params_to_string(ModelRole::mlp, mlp.front()) ==
          "alpha: 0.0001, hidden_layer_sizes: (50,), learning_rate: "
          "'constant'");
}

TEST_CASE("grid search evaluates the exact combination counts") {
  auto m = signal_matrix(3);
  SweepOptions opt = small_options(3);
  opt.preset = GridPreset::full;  // the real grids

  FitAudit audit;
  FeatureMatrix train = m;  // untagged rows act as training data
  auto lr = grid_search(ModelRole::logreg, fsel::FeatureRoute::manual, 6,
                        train, opt, &audit);
  REQUIRE(lr.evaluated == 6);
  auto nb = grid_search(ModelRole::nb, fsel::FeatureRoute::manual, 6, train,
                        opt, &audit);
  REQUIRE(nb.evaluated == 1);
}

TEST_CASE("grid search prefers weak regularization when shrinkage hurts") {
  // The label depends on z = x1 - x2 while x2 is a shared nuisance; the
  // cancelling weight pattern needs large coefficients, so every step of
  // extra shrinkage strictly degrades the ranking.
  Rng rng(21);
  FeatureMatrix m({"sodium", "calcium"}, 900);
  m.labels.resize(900);
  m.subject_ids.resize(900);
  for (std::size_t r = 0; r < 900; ++r) {
    const double z = rng.normal();
    const double nuisance = 2.0 * rng.normal();
    m.at(r, 0) = z + nuisance;
    m.at(r, 1) = nuisance;
    m.labels[r] = rng.uniform() < models::sigmoid(4.0 * z) ? 1 : 0;
    m.subject_ids[r] = "G" + std::to_string(r / 4);
  }
  SweepOptions opt = small_options(21);
  opt.preset = GridPreset::full;
  opt.prep.with_ratios = false;
  auto res = grid_search(ModelRole::logreg, fsel::FeatureRoute::manual, 6, m,
                         opt);
  REQUIRE(res.best.C >= 10.0);
}

TEST_CASE("benchmark: filtered runs, ranking, determinism, parallelism") {
  auto m = signal_matrix(5);
  SweepOptions opt = small_options(5);
  opt.models = {ModelRole::logreg, ModelRole::nb};
  opt.routes = {fsel::FeatureRoute::manual};
  opt.balancers = {"none", "randomunder", "smote"};

  auto res = run_benchmark(m, opt);
  REQUIRE(res.rows.size() == 6);
  for (std::size_t i = 1; i < res.rows.size(); ++i) {
    if (res.rows[i - 1].failed || res.rows[i].failed) continue;
    REQUIRE(res.rows[i - 1].val_mcc >= res.rows[i].val_mcc);
  }
  for (const auto& row : res.rows) {
    REQUIRE_FALSE(row.failed);
    REQUIRE(row.val_auc > 0.5);  // the planted signal is learnable
  }

  // identical rerun, and identical at a different parallelism degree
  auto res2 = run_benchmark(m, opt);
  SweepOptions opt4 = opt;
  opt4.jobs = 4;
  auto res4 = run_benchmark(m, opt4);
  REQUIRE(res.rows.size() == res4.rows.size());
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    REQUIRE(res.rows[i].id == res2.rows[i].id);
    REQUIRE(res.rows[i].id == res4.rows[i].id);
    REQUIRE(res.rows[i].val_mcc == res2.rows[i].val_mcc);
    REQUIRE(res.rows[i].val_mcc == res4.rows[i].val_mcc);
    REQUIRE(res.rows[i].val_auc == res4.rows[i].val_auc);
    REQUIRE(res.rows[i].best_params == res4.rows[i].best_params);
  }

  // the audit saw only training-partition fits
  for (const auto& line : res.audit)
    REQUIRE(line.find("{train}") != std::string::npos);
}

TEST_CASE("linear signal keeps class-weighted logreg in the top quartile") {
  // Full 126-cell competition on planted linear signal; the expected rank
  // of the best class-weighted logistic cell across seeds sits inside the
  // top quartile (individual-seed ranks are noisy at this cohort size).
  double rank_sum = 0.0;
  for (std::uint64_t seed : {31ULL, 32ULL, 33ULL, 34ULL, 35ULL}) {
    cohort::SynthConfig cfg;
    cfg.n_subjects = 90;
    cfg.target_visits = 580;
    cfg.seed = seed;
    cfg.age_bracket_rates = {{0.0, 0.0, 0.18}};
    cfg.signal_effects = {{"hemoglobin", -1.2},
                          {"albumin", -0.8},
                          {"wbc", 0.8}};
    auto m = cohort::cohort_to_matrix(cohort::synthesize_cohort(cfg));
    SweepOptions opt;
    opt.preset = GridPreset::reduced;
    opt.seed = seed;
    opt.split.seed = seed;
    opt.mlp_max_epochs = 30;
    opt.rfe.n_estimators = 10;
    opt.rfecv.estimator.n_estimators = 10;
    opt.jobs = 4;
    auto res = run_benchmark(m, opt);
    REQUIRE(res.rows.size() == 126);
    int best_rank = 127;
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const auto& r = res.rows[i];
      if (!r.failed && r.model == ModelRole::logreg &&
          r.balancer == "ClassWeight")
        best_rank = std::min(best_rank, static_cast<int>(i) + 1);
    }
    REQUIRE(best_rank <= 126);
    rank_sum += best_rank;
  }
  REQUIRE(rank_sum / 5.0 <= 126.0 / 4.0);
}

TEST_CASE("fit stages abort on test-partition rows") {
  auto m = signal_matrix(7);
  SweepOptions opt = small_options(7);
  FeatureMatrix poisoned = m;
  poisoned.tags.assign(poisoned.n_rows, static_cast<int>(Partition::train));
  poisoned.tags[0] = static_cast<int>(Partition::test);
  REQUIRE_THROWS_WITH(
      grid_search(ModelRole::nb, fsel::FeatureRoute::manual, 6, poisoned, opt),
      Catch::Matchers::ContainsSubstring("leakage"));
}

TEST_CASE("final evaluation: protocol, leakage audit, determinism") {
  auto m = signal_matrix(9, 160, 1100);
  SweepOptions opt = small_options(9);
  auto split = group_shuffle_split(m.subject_ids, opt.split);
  ParamSet ps;
  ps.C = 1.0;
  FinalEvalOptions fopt;
  fopt.n_boot = 100;
  auto fin = final_evaluate(m, split, ModelRole::logreg,
                            fsel::FeatureRoute::manual, 6, ps, opt, fopt);
  REQUIRE(fin.report.auc > 0.6);
  REQUIRE(fin.report.auc_ci_low <= fin.report.auc);
  REQUIRE(fin.report.auc <= fin.report.auc_ci_high);
  REQUIRE(fin.report.threshold_mode == "oof_mcc");
  REQUIRE(fin.report.prevalence > 0.05);
  REQUIRE(fin.report.roc.xs.front() == 0.0);
  REQUIRE(fin.report.roc.xs.back() == 1.0);
  // fit stages saw only train/val rows
  for (const auto& line : fin.audit) {
    REQUIRE(line.find("test") == std::string::npos);
  }
  // byte-level determinism of the serialized report
  auto fin2 = final_evaluate(m, split, ModelRole::logreg,
                             fsel::FeatureRoute::manual, 6, ps, opt, fopt);
  REQUIRE(eval::to_json(fin.report).dump() == eval::to_json(fin2.report).dump());

  // fixed-threshold mode
  FinalEvalOptions fixed;
  fixed.threshold = eval::ThresholdObjective::fixed_half;
  fixed.n_boot = 50;
  auto finf = final_evaluate(m, split, ModelRole::logreg,
                             fsel::FeatureRoute::manual, 6, ps, opt, fixed);
  REQUIRE(finf.report.threshold == 0.5);
  REQUIRE(finf.report.threshold_mode == "fixed_0.5");

  // subject-level bootstrap widens (or at least changes) the interval
  FinalEvalOptions grouped = fixed;
  grouped.subject_bootstrap = true;
  auto fing = final_evaluate(m, split, ModelRole::logreg,
                             fsel::FeatureRoute::manual, 6, ps, opt, grouped);
  REQUIRE(fing.report.auc == finf.report.auc);
  REQUIRE(fing.report.auc_ci_low <= fing.report.auc);
  REQUIRE(fing.report.auc <= fing.report.auc_ci_high);
  REQUIRE_FALSE((fing.report.auc_ci_low == finf.report.auc_ci_low &&
                 fing.report.auc_ci_high == finf.report.auc_ci_high));
}

TEST_CASE("balancers leave holdout row counts untouched") {
  auto m = signal_matrix(13);
  SweepOptions opt = small_options(13);
  opt.models = {ModelRole::logreg};
  opt.routes = {fsel::FeatureRoute::manual};
  opt.balancers = {"smote"};
  auto split = group_shuffle_split(m.subject_ids, opt.split);
  auto res = run_benchmark(m, opt);
  REQUIRE(res.split.val_idx.size() == split.val_idx.size());
  REQUIRE(res.split.test_idx.size() == split.test_idx.size());
}

TEST_CASE("automated routes share one resolved feature count") {
  auto m = signal_matrix(17, 150, 1000);
  SweepOptions opt = small_options(17);
  opt.models = {ModelRole::nb};
  opt.routes = {fsel::FeatureRoute::univariate, fsel::FeatureRoute::rfe};
  opt.balancers = {"none"};
  auto res = run_benchmark(m, opt);
  REQUIRE(res.resolved_k >= 1);
  for (const auto& row : res.rows) {
    REQUIRE_FALSE(row.failed);
    REQUIRE(static_cast<int>(row.selected_features.size()) == res.resolved_k);
  }
}
