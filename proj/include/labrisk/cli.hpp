#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include <json.hpp>

#include "labrisk/config.hpp"
#include "labrisk/explain.hpp"
#include "labrisk/report.hpp"

namespace labrisk::cli {

namespace fs = std::filesystem;

inline std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

// Resolve (and create) the run directory: explicit run_dir wins, otherwise
// out_dir/<timestamp>-<seed>.
inline fs::path ensure_run_dir(const RunConfig& cfg) {
  fs::path dir = cfg.run_dir.empty()
                     ? fs::path(cfg.out_dir) /
                           (timestamp_now() + "-" + std::to_string(cfg.seed))
                     : fs::path(cfg.run_dir);
  fs::create_directories(dir);
  return dir;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw UserError("cannot write " + path.string());
  out << text;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

// Load the labeled cohort: from the configured CSV files when a visits path
// is set, otherwise from the synthetic generator.
inline std::pair<cohort::Cohort, cohort::CurationLog> load_cohort(
    const RunConfig& cfg) {
  if (!cfg.visits.empty()) {
    if (cfg.demographics.empty())
      throw UserError("paths.demographics required alongside paths.visits");
    return cohort::curate(cfg.visits, cfg.demographics, cfg.endpoint,
                          cfg.condition);
  }
  cohort::SynthConfig sc = cfg.synth;
  sc.seed = cfg.seed;
  cohort::CurationLog log;
  return {cohort::synthesize_cohort(sc), std::move(log)};
}

inline nlohmann::json cohort_manifest(const cohort::Cohort& c) {
  long positives = 0;
  for (const auto& v : c.visits) positives += v.tumor_label;
  nlohmann::json j;
  j["subjects"] = c.subjects.size();
  j["visits"] = c.visits.size();
  j["cancer_subjects"] = c.diagnoses.size();
  j["positive_visits"] = positives;
  j["positive_fraction"] =
      c.visits.empty() ? 0.0
                       : static_cast<double>(positives) / c.visits.size();
  return j;
}

inline nlohmann::json bracket_rates_observed(
    const cohort::Cohort& c, const std::vector<cohort::AgeBracketRate>& brackets) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : brackets) {
    long n = 0, pos = 0;
    const bool open = b.age_hi <= b.age_lo;
    for (const auto& v : c.visits) {
      if (v.age_at_visit >= b.age_lo && (open || v.age_at_visit < b.age_hi)) {
        ++n;
        pos += v.tumor_label;
      }
    }
    nlohmann::json row;
    row["age_lo"] = b.age_lo;
    row["age_hi"] = open ? nlohmann::json() : nlohmann::json(b.age_hi);
    row["target_rate"] = b.rate;
    row["visits"] = n;
    row["positive_visits"] = pos;
    row["observed_rate"] = n ? static_cast<double>(pos) / n : 0.0;
    out.push_back(std::move(row));
  }
  return out;
}

// synth: generate a cohort and write the four raw tables plus a manifest.
inline int cmd_synth(const RunConfig& cfg) {
  cohort::SynthConfig sc = cfg.synth;
  sc.seed = cfg.seed;
  cohort::Cohort c = cohort::synthesize_cohort(sc);
  fs::path dir = ensure_run_dir(cfg);
  cohort::write_visits_csv(c, (dir / "visits.csv").string());
  cohort::write_demographics_csv(c, (dir / "demographics.csv").string());
  cohort::write_endpoint_csv(c.diagnoses, (dir / "endpoint.csv").string());
  cohort::write_condition_csv(c.diagnoses, (dir / "condition.csv").string());

  nlohmann::json manifest = cohort_manifest(c);
  manifest["seed"] = cfg.seed;
  manifest["bracket_rates"] = bracket_rates_observed(
      c, sc.age_bracket_rates.empty()
             ? std::vector<cohort::AgeBracketRate>{{0.0, 0.0, sc.prevalence_visit}}
             : sc.age_bracket_rates);
  manifest["generated_at"] = timestamp_now();
  write_json(dir / "manifest.json", manifest);
  write_text(dir / "config.resolved.ini", config_to_string(cfg));
  std::cout << "synth: wrote " << c.visits.size() << " visits / "
            << c.subjects.size() << " subjects to " << dir.string() << "\n";
  return 0;
}

// curate: ingest, merge diagnosis sources, apply temporal labels.
inline int cmd_curate(const RunConfig& cfg) {
  if (cfg.visits.empty() || cfg.demographics.empty())
    throw UserError("curate requires paths.visits and paths.demographics");
  auto [c, log] = cohort::curate(cfg.visits, cfg.demographics, cfg.endpoint,
                                 cfg.condition);
  fs::path dir = ensure_run_dir(cfg);
  cohort::write_curated_csv(c, (dir / "curated.csv").string());

  long positives = 0;
  for (const auto& v : c.visits) positives += v.tumor_label;
  std::ostringstream lg;
  lg << "visits_ingested = " << log.visits_ingested << "\n";
  lg << "duplicates_dropped = " << log.duplicates_dropped << "\n";
  lg << "rows_dropped = " << log.rows_dropped << "\n";
  lg << "cancer_subjects = " << c.diagnoses.size() << "\n";
  lg << "positive_visits = " << positives << "\n";
  lg << "positive_fraction = "
     << (c.visits.empty() ? 0.0 : static_cast<double>(positives) / c.visits.size())
     << "\n";
  lg << "warnings = " << log.warnings.size() << "\n";
  for (const auto& w : log.warnings) lg << "warning: " << w << "\n";
  write_text(dir / "curation_log.txt", lg.str());
  write_text(dir / "config.resolved.ini", config_to_string(cfg));
  std::cout << "curate: " << c.visits.size() << " visits, " << positives
            << " positive (" << dir.string() << ")\n";
  return 0;
}

// sweep: the full pipeline benchmark; writes leaderboard + per-cell files.
inline int cmd_sweep(const RunConfig& cfg) {
  auto [c, log] = load_cohort(cfg);
  FeatureMatrix m = cohort::cohort_to_matrix(c);
  auto opt = sweep_options(cfg);
  auto res = sweep::run_benchmark(m, opt);

  fs::path dir = ensure_run_dir(cfg);
  sweep::write_leaderboard_csv(res.rows, (dir / "leaderboard.csv").string());
  write_json(dir / "leaderboard.json", sweep::leaderboard_to_json(res));
  write_text(dir / "config.resolved.ini", config_to_string(cfg));
  {
    std::ostringstream audit;
    for (const auto& line : res.audit) audit << line << "\n";
    write_text(dir / "fit_audit.log", audit.str());
  }
  fs::create_directories(dir / "cells");
  for (const auto& row : res.rows) {
    nlohmann::json j;
    j["pipeline"] = row.id;
    j["cell_index"] = row.cell_index;
    j["failed"] = row.failed;
    if (row.failed) {
      j["error"] = row.error;
    } else {
      j["best_hyperparams"] = row.best_params;
      j["cv_mcc"] = row.cv_mcc;
      j["fold_mcc"] = row.fold_mcc;
      j["val_mcc"] = row.val_mcc;
      j["val_auc"] = row.val_auc;
      j["evaluated_combinations"] = row.evaluated;
      j["selected_features"] = row.selected_features;
    }
    write_json(dir / "cells" / (row.id + ".json"), j);
  }

  // Top-10 summary table.
  std::ostringstream top;
  top << "Base Model,Data Balancer,Feature Set,MCC,AUC\n";
  int shown = 0;
  for (const auto& row : res.rows) {
    if (row.failed || shown >= 10) continue;
    char line[256];
    std::snprintf(line, sizeof line, "%s,%s,%s,%.4f,%.4f\n",
                  sweep::role_display(row.model).c_str(), row.balancer.c_str(),
                  fsel::to_string(row.route).c_str(), row.val_mcc, row.val_auc);
    top << line;
    ++shown;
  }
  write_text(dir / "top10.csv", top.str());
  std::cout << top.str();
  std::cout << "sweep: " << res.rows.size() << " pipeline cells -> "
            << dir.string() << "\n";
  return 0;
}

namespace detail {

struct ResolvedPipeline {
  sweep::PipelineCell cell;
  sweep::ParamSet params;
  sweep::GridSearchOutcome outcome;
};

// Reconstruct a cell's tuned hyperparameters by re-running its grid search
// on the training partition; seeds make this bit-identical to the sweep.
inline ResolvedPipeline resolve_pipeline(const FeatureMatrix& m,
                                         const sweep::Split& split,
                                         const std::string& pipeline_id,
                                         const sweep::SweepOptions& opt) {
  auto cell = sweep::cell_from_id(pipeline_id);
  if (!cell)
    throw UserError("unknown pipeline id '" + pipeline_id +
                    "' (expected <model>-<features>-<balancer>)");
  FeatureMatrix tagged = m;
  tagged.tags.assign(tagged.n_rows, -1);
  for (std::size_t i : split.train_idx)
    tagged.tags[i] = static_cast<int>(sweep::Partition::train);
  for (std::size_t i : split.val_idx)
    tagged.tags[i] = static_cast<int>(sweep::Partition::val);
  for (std::size_t i : split.test_idx)
    tagged.tags[i] = static_cast<int>(sweep::Partition::test);
  FeatureMatrix train = tagged.select_rows(split.train_idx);
  ResolvedPipeline out;
  out.cell = *cell;
  out.outcome = sweep::grid_search(cell->model, cell->route,
                                   cell->balancer_slot, train, opt);
  out.params = out.outcome.best;
  return out;
}

}  // namespace detail

// evaluate: retrain the chosen pipeline on train+val, score the test set
// once, and write report.json / roc.csv / pr.csv.
inline int cmd_evaluate(const RunConfig& cfg, const std::string& pipeline_id) {
  auto [c, log] = load_cohort(cfg);
  FeatureMatrix m = cohort::cohort_to_matrix(c);
  auto opt = sweep_options(cfg);

  fs::path dir = ensure_run_dir(cfg);
  const fs::path report_path = dir / "report.json";
  if (fs::exists(report_path) && !cfg.force)
    throw UserError("report.json already exists in " + dir.string() +
                    "; the test set is evaluated once (use --force to redo)");

  auto split = sweep::group_shuffle_split(m.subject_ids, opt.split);
  auto resolved = detail::resolve_pipeline(m, split, pipeline_id, opt);

  sweep::FinalEvalOptions fopt;
  fopt.threshold = cfg.final_threshold_oof
                       ? eval::ThresholdObjective::max_mcc
                       : eval::ThresholdObjective::fixed_half;
  fopt.n_boot = cfg.n_boot;
  fopt.ci_level = cfg.ci_level;
  fopt.subject_bootstrap = cfg.subject_bootstrap;
  auto fin = sweep::final_evaluate(m, split, resolved.cell.model,
                                   resolved.cell.route,
                                   resolved.cell.balancer_slot,
                                   resolved.params, opt, fopt);

  nlohmann::json j = eval::to_json(fin.report);
  j["pipeline"] = pipeline_id;
  j["best_hyperparams"] =
      sweep::params_to_string(resolved.cell.model, resolved.params);
  j["selected_features"] = fin.pipeline.features;
  j["resolved_k"] = fin.resolved_k;
  j["bootstrap_unit"] = cfg.subject_bootstrap ? "subjects" : "visits";
  write_json(report_path, j);
  eval::write_curve_csv(fin.report.roc, "fpr", "tpr", (dir / "roc.csv").string());
  eval::write_curve_csv(fin.report.pr, "recall", "precision",
                        (dir / "pr.csv").string());
  write_json(dir / "model.json", models::to_json(fin.pipeline.model));
  write_json(dir / "preprocess_state.json", preprocess::to_json(fin.pipeline.prep));
  write_text(dir / "config.resolved.ini", config_to_string(cfg));
  {
    std::ostringstream audit;
    for (const auto& line : fin.audit) audit << line << "\n";
    write_text(dir / "fit_audit.log", audit.str());
  }
  std::printf(
      "evaluate %s: MCC %.4f AUC %.4f (CI %.3f-%.3f) PPV %.4f NPV %.4f "
      "recall %.4f specificity %.4f accuracy %.4f\n",
      pipeline_id.c_str(), fin.report.mcc, fin.report.auc,
      fin.report.auc_ci_low, fin.report.auc_ci_high, fin.report.rates.ppv,
      fin.report.rates.npv, fin.report.rates.recall,
      fin.report.rates.specificity, fin.report.rates.accuracy);
  return 0;
}

// explain: Shapley attributions for the final pipeline on held-out rows.
inline int cmd_explain(const RunConfig& cfg, const std::string& pipeline_id) {
  auto [c, log] = load_cohort(cfg);
  FeatureMatrix m = cohort::cohort_to_matrix(c);
  auto opt = sweep_options(cfg);

  auto split = sweep::group_shuffle_split(m.subject_ids, opt.split);
  auto resolved = detail::resolve_pipeline(m, split, pipeline_id, opt);
  sweep::FinalEvalOptions fopt;
  fopt.threshold = eval::ThresholdObjective::fixed_half;  // threshold unused
  fopt.n_boot = 50;
  auto fin = sweep::final_evaluate(m, split, resolved.cell.model,
                                   resolved.cell.route,
                                   resolved.cell.balancer_slot,
                                   resolved.params, opt, fopt);

  // Background: seeded subsample of the (train+val) rows the model was fit
  // on, in the model's own feature space.
  std::vector<std::size_t> tv = split.train_idx;
  tv.insert(tv.end(), split.val_idx.begin(), split.val_idx.end());
  FeatureMatrix tv_scaled = preprocess::preprocess_apply(
      fin.pipeline.prep, m.select_rows(tv));
  FeatureMatrix bg_all = tv_scaled.select_columns(fin.pipeline.features);
  Rng rng(Rng::derive(cfg.seed, 0xB6));
  std::vector<std::size_t> bg_idx(bg_all.n_rows);
  std::iota(bg_idx.begin(), bg_idx.end(), 0);
  rng.shuffle(bg_idx);
  bg_idx.resize(std::min<std::size_t>(bg_idx.size(),
                                      std::max(1, cfg.background_size)));
  std::sort(bg_idx.begin(), bg_idx.end());
  FeatureMatrix background = bg_all.select_rows(bg_idx);

  FeatureMatrix explained = fin.test_features;
  if (static_cast<int>(explained.n_rows) > cfg.explain_max_rows) {
    std::vector<std::size_t> keep(explained.n_rows);
    std::iota(keep.begin(), keep.end(), 0);
    rng.shuffle(keep);
    keep.resize(cfg.explain_max_rows);
    std::sort(keep.begin(), keep.end());
    explained = explained.select_rows(keep);
  }

  shap::ShapExplanation expl;
  std::string method;
  if (fin.pipeline.model.family == models::ModelFamily::logreg) {
    expl = shap::linear_shap(
        std::get<models::LogRegModel>(fin.pipeline.model.impl), explained,
        background);
    method = "linear";
  } else {
    expl = shap::sampling_shap(fin.pipeline.model, explained, background,
                               cfg.n_permutations,
                               Rng::derive(cfg.seed, 0x5A9));
    method = "permutation_sampling";
  }

  fs::path dir = ensure_run_dir(cfg);
  shap::write_global_importance_csv(expl, (dir / "shap_global.csv").string());
  shap::beeswarm_export(expl, explained, (dir / "shap_beeswarm.csv").string());
  shap::write_attributions_csv(expl, (dir / "shap_attributions.csv").string());
  nlohmann::json meta;
  meta["pipeline"] = pipeline_id;
  meta["method"] = method;
  meta["explained_split"] = "test";
  meta["explained_rows"] = expl.n_rows;
  meta["background"] = "train+val subsample";
  meta["background_rows"] = background.n_rows;
  meta["base_value"] = expl.base_value;
  meta["margin_space"] = "log_odds";
  write_json(dir / "shap_meta.json", meta);
  write_text(dir / "config.resolved.ini", config_to_string(cfg));

  auto ranking = shap::global_importance(expl);
  std::cout << "explain " << pipeline_id << " (" << method << "), top features:\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ranking.size()); ++i)
    std::cout << "  " << ranking[i].first << " " << fmt_double(ranking[i].second)
              << "\n";
  std::cout << "explain: wrote attributions for " << expl.n_rows
            << " rows to " << dir.string() << "\n";
  return 0;
}

inline int cmd_print_config(const RunConfig& cfg) {
  std::cout << config_to_string(cfg);
  return 0;
}

}  // namespace labrisk::cli
