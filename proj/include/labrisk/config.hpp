#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "labrisk/csv.hpp"
#include "labrisk/errors.hpp"
#include "labrisk/evaluate.hpp"
#include "labrisk/sweep.hpp"
#include "labrisk/synth.hpp"

namespace labrisk::cli {

// Plain-text key-value configuration with [sections]. Every run writes its
// fully resolved config back out, so a run directory is self-documenting.
struct RunConfig {
  // [paths]
  std::string visits, demographics, endpoint, condition;
  std::string out_dir = "runs";
  std::string run_dir;  // optional explicit run directory

  // [run]
  std::uint64_t seed = 1;
  int jobs = 1;

  // [synth]
  cohort::SynthConfig synth;

  // [preprocess]
  bool ratios = true;
  double missing_threshold = 0.70;
  preprocess::MiceOptions mice;

  // [split]
  double train_frac = 0.60, val_frac = 0.20, test_frac = 0.20;
  int folds = 5;

  // [sweep]
  sweep::GridPreset preset = sweep::GridPreset::full;
  bool fold_threshold_optimal = true;  // false = fixed 0.5 inside CV
  std::vector<std::string> models, balancers, features;  // filters
  int smote_k = 5;
  int mlp_max_epochs = 200;
  double mlp_learning_rate = 0.05;
  int mlp_batch_size = 32;
  int rfe_trees = 50;
  int rfecv_trees = 50;

  // [evaluate]
  int n_boot = 2000;
  double ci_level = 0.95;
  bool final_threshold_oof = true;   // false = fixed 0.5
  bool subject_bootstrap = false;    // resample subjects instead of visits
  bool force = false;                // allow overwriting report files

  // [explain]
  int n_permutations = 200;
  int background_size = 100;
  int explain_max_rows = 500;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  auto d = parse_double(v);
  if (!d) throw UserError("config: bad number for " + key + ": '" + v + "'");
  return *d;
}

inline long to_long(const std::string& key, const std::string& v) {
  auto d = parse_long(v);
  if (!d) throw UserError("config: bad integer for " + key + ": '" + v + "'");
  return *d;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UserError("config: bad boolean for " + key + ": '" + v + "'");
}

// "lo:hi:rate" triples, comma separated; hi of "inf" (or <= lo) is open.
inline std::vector<cohort::AgeBracketRate> parse_brackets(
    const std::string& v) {
  std::vector<cohort::AgeBracketRate> out;
  for (const auto& item : split_list(v)) {
    std::stringstream ss(item);
    std::string lo, hi, rate;
    if (!std::getline(ss, lo, ':') || !std::getline(ss, hi, ':') ||
        !std::getline(ss, rate, ':'))
      throw UserError("config: bad bracket spec '" + item +
                      "' (want lo:hi:rate)");
    cohort::AgeBracketRate b;
    b.age_lo = to_double("bracket_rates", trim(lo));
    b.age_hi = trim(hi) == "inf" ? b.age_lo : to_double("bracket_rates",
                                                        trim(hi));
    b.rate = to_double("bracket_rates", trim(rate));
    out.push_back(b);
  }
  return out;
}

inline std::string brackets_to_string(
    const std::vector<cohort::AgeBracketRate>& brackets) {
  std::string out;
  for (const auto& b : brackets) {
    if (!out.empty()) out += ",";
    out += fmt_double(b.age_lo) + ":" +
           (b.age_hi <= b.age_lo ? "inf" : fmt_double(b.age_hi)) + ":" +
           fmt_double(b.rate);
  }
  return out;
}

}  // namespace detail

// Parse an INI-style config file into flat "section.key" -> value pairs.
inline std::map<std::string, std::string> read_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line, section;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UserError("config: expected key = value, got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    kv[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

inline void apply_ini(RunConfig& cfg,
                      const std::map<std::string, std::string>& kv) {
  using namespace detail;
  for (const auto& [key, v] : kv) {
    if (key == "paths.visits") cfg.visits = v;
    else if (key == "paths.demographics") cfg.demographics = v;
    else if (key == "paths.endpoint") cfg.endpoint = v;
    else if (key == "paths.condition") cfg.condition = v;
    else if (key == "paths.out_dir") cfg.out_dir = v;
    else if (key == "paths.run_dir") cfg.run_dir = v;
    else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(to_long(key, v));
    else if (key == "run.jobs") cfg.jobs = static_cast<int>(to_long(key, v));
    else if (key == "synth.n_subjects") cfg.synth.n_subjects = static_cast<int>(to_long(key, v));
    else if (key == "synth.target_visits") cfg.synth.target_visits = static_cast<int>(to_long(key, v));
    else if (key == "synth.bracket_rates") cfg.synth.age_bracket_rates = parse_brackets(v);
    else if (key == "synth.prevalence") cfg.synth.prevalence_visit = to_double(key, v);
    else if (key.rfind("synth.signal.", 0) == 0)
      cfg.synth.signal_effects[key.substr(13)] = to_double(key, v);
    else if (key.rfind("synth.missing.", 0) == 0)
      cfg.synth.missingness_rates[key.substr(14)] = to_double(key, v);
    else if (key == "preprocess.ratios") cfg.ratios = to_bool(key, v);
    else if (key == "preprocess.missing_threshold") cfg.missing_threshold = to_double(key, v);
    else if (key == "preprocess.mice_max_iters") cfg.mice.max_iters = static_cast<int>(to_long(key, v));
    else if (key == "preprocess.mice_tol") cfg.mice.tol = to_double(key, v);
    else if (key == "preprocess.mice_ridge") cfg.mice.ridge = to_double(key, v);
    else if (key == "split.train") cfg.train_frac = to_double(key, v);
    else if (key == "split.val") cfg.val_frac = to_double(key, v);
    else if (key == "split.test") cfg.test_frac = to_double(key, v);
    else if (key == "split.folds") cfg.folds = static_cast<int>(to_long(key, v));
    else if (key == "sweep.preset") {
      if (v == "full") cfg.preset = sweep::GridPreset::full;
      else if (v == "reduced") cfg.preset = sweep::GridPreset::reduced;
      else throw UserError("config: sweep.preset must be full or reduced");
    } else if (key == "sweep.threshold") {
      if (v == "fold_optimal") cfg.fold_threshold_optimal = true;
      else if (v == "fixed") cfg.fold_threshold_optimal = false;
      else throw UserError("config: sweep.threshold must be fold_optimal or fixed");
    } else if (key == "sweep.models") cfg.models = split_list(v);
    else if (key == "sweep.balancers") cfg.balancers = split_list(v);
    else if (key == "sweep.features") cfg.features = split_list(v);
    else if (key == "sweep.smote_k") cfg.smote_k = static_cast<int>(to_long(key, v));
    else if (key == "sweep.mlp_max_epochs") cfg.mlp_max_epochs = static_cast<int>(to_long(key, v));
    else if (key == "sweep.mlp_learning_rate") cfg.mlp_learning_rate = to_double(key, v);
    else if (key == "sweep.mlp_batch_size") cfg.mlp_batch_size = static_cast<int>(to_long(key, v));
    else if (key == "sweep.rfe_trees") cfg.rfe_trees = static_cast<int>(to_long(key, v));
    else if (key == "sweep.rfecv_trees") cfg.rfecv_trees = static_cast<int>(to_long(key, v));
    else if (key == "evaluate.n_boot") cfg.n_boot = static_cast<int>(to_long(key, v));
    else if (key == "evaluate.ci_level") cfg.ci_level = to_double(key, v);
    else if (key == "evaluate.threshold") {
      if (v == "oof_mcc") cfg.final_threshold_oof = true;
      else if (v == "fixed") cfg.final_threshold_oof = false;
      else throw UserError("config: evaluate.threshold must be oof_mcc or fixed");
    } else if (key == "evaluate.bootstrap") {
      if (v == "visits") cfg.subject_bootstrap = false;
      else if (v == "subjects") cfg.subject_bootstrap = true;
      else throw UserError("config: evaluate.bootstrap must be visits or subjects");
    } else if (key == "explain.n_permutations") cfg.n_permutations = static_cast<int>(to_long(key, v));
    else if (key == "explain.background_size") cfg.background_size = static_cast<int>(to_long(key, v));
    else if (key == "explain.max_rows") cfg.explain_max_rows = static_cast<int>(to_long(key, v));
    else throw UserError("config: unknown key '" + key + "'");
  }
}

inline RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (!path.empty()) apply_ini(cfg, read_ini(path));
  return cfg;
}

// Emit the fully resolved configuration in the same format it is read.
inline std::string config_to_string(const RunConfig& cfg) {
  std::ostringstream s;
  s << "[paths]\n";
  s << "visits = " << cfg.visits << "\n";
  s << "demographics = " << cfg.demographics << "\n";
  s << "endpoint = " << cfg.endpoint << "\n";
  s << "condition = " << cfg.condition << "\n";
  s << "out_dir = " << cfg.out_dir << "\n";
  s << "run_dir = " << cfg.run_dir << "\n";
  s << "\n[run]\n";
  s << "seed = " << cfg.seed << "\n";
  s << "jobs = " << cfg.jobs << "\n";
  s << "\n[synth]\n";
  s << "n_subjects = " << cfg.synth.n_subjects << "\n";
  s << "target_visits = " << cfg.synth.target_visits << "\n";
  s << "bracket_rates = "
    << detail::brackets_to_string(cfg.synth.age_bracket_rates) << "\n";
  s << "prevalence = " << fmt_double(cfg.synth.prevalence_visit) << "\n";
  for (const auto& [k, v] : cfg.synth.signal_effects)
    s << "signal." << k << " = " << fmt_double(v) << "\n";
  for (const auto& [k, v] : cfg.synth.missingness_rates)
    s << "missing." << k << " = " << fmt_double(v) << "\n";
  s << "\n[preprocess]\n";
  s << "ratios = " << (cfg.ratios ? "true" : "false") << "\n";
  s << "missing_threshold = " << fmt_double(cfg.missing_threshold) << "\n";
  s << "mice_max_iters = " << cfg.mice.max_iters << "\n";
  s << "mice_tol = " << fmt_double(cfg.mice.tol) << "\n";
  s << "mice_ridge = " << fmt_double(cfg.mice.ridge) << "\n";
  s << "\n[split]\n";
  s << "train = " << fmt_double(cfg.train_frac) << "\n";
  s << "val = " << fmt_double(cfg.val_frac) << "\n";
  s << "test = " << fmt_double(cfg.test_frac) << "\n";
  s << "folds = " << cfg.folds << "\n";
  s << "\n[sweep]\n";
  s << "preset = " << (cfg.preset == sweep::GridPreset::full ? "full" : "reduced") << "\n";
  s << "threshold = " << (cfg.fold_threshold_optimal ? "fold_optimal" : "fixed") << "\n";
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& x : v) {
      if (!out.empty()) out += ",";
      out += x;
    }
    return out;
  };
  s << "models = " << join(cfg.models) << "\n";
  s << "balancers = " << join(cfg.balancers) << "\n";
  s << "features = " << join(cfg.features) << "\n";
  s << "smote_k = " << cfg.smote_k << "\n";
  s << "mlp_max_epochs = " << cfg.mlp_max_epochs << "\n";
  s << "mlp_learning_rate = " << fmt_double(cfg.mlp_learning_rate) << "\n";
  s << "mlp_batch_size = " << cfg.mlp_batch_size << "\n";
  s << "rfe_trees = " << cfg.rfe_trees << "\n";
  s << "rfecv_trees = " << cfg.rfecv_trees << "\n";
  s << "\n[evaluate]\n";
  s << "n_boot = " << cfg.n_boot << "\n";
  s << "ci_level = " << fmt_double(cfg.ci_level) << "\n";
  s << "threshold = " << (cfg.final_threshold_oof ? "oof_mcc" : "fixed") << "\n";
  s << "bootstrap = " << (cfg.subject_bootstrap ? "subjects" : "visits") << "\n";
  s << "\n[explain]\n";
  s << "n_permutations = " << cfg.n_permutations << "\n";
  s << "background_size = " << cfg.background_size << "\n";
  s << "max_rows = " << cfg.explain_max_rows << "\n";
  return s.str();
}

// Translate the flat config into the sweep module's option bundle.
inline sweep::SweepOptions sweep_options(const RunConfig& cfg) {
  sweep::SweepOptions opt;
  opt.split.train = cfg.train_frac;
  opt.split.val = cfg.val_frac;
  opt.split.test = cfg.test_frac;
  opt.split.seed = cfg.seed;
  opt.folds = cfg.folds;
  opt.preset = cfg.preset;
  opt.fold_threshold = cfg.fold_threshold_optimal
                           ? eval::ThresholdObjective::max_mcc
                           : eval::ThresholdObjective::fixed_half;
  opt.smote_k = cfg.smote_k;
  opt.prep.with_ratios = cfg.ratios;
  opt.prep.missing_threshold = cfg.missing_threshold;
  opt.prep.mice = cfg.mice;
  opt.rfe.n_estimators = cfg.rfe_trees;
  opt.rfecv.estimator.n_estimators = cfg.rfecv_trees;
  opt.mlp_max_epochs = cfg.mlp_max_epochs;
  opt.mlp_learning_rate0 = cfg.mlp_learning_rate;
  opt.mlp_batch_size = cfg.mlp_batch_size;
  opt.jobs = cfg.jobs;
  opt.seed = cfg.seed;
  for (const auto& id : cfg.models) {
    auto role = sweep::role_from_id(id);
    if (!role) throw UserError("unknown model '" + id + "'");
    opt.models.push_back(*role);
  }
  for (const auto& id : cfg.features) {
    if (id == "univariate") opt.routes.push_back(fsel::FeatureRoute::univariate);
    else if (id == "rfe") opt.routes.push_back(fsel::FeatureRoute::rfe);
    else if (id == "manual") opt.routes.push_back(fsel::FeatureRoute::manual);
    else throw UserError("unknown feature route '" + id + "'");
  }
  for (const auto& id : cfg.balancers) {
    const auto& slots = sweep::balancer_slot_ids();
    if (std::find(slots.begin(), slots.end(), id) == slots.end())
      throw UserError("unknown balancer '" + id + "'");
    opt.balancers.push_back(id);
  }
  return opt;
}

}  // namespace labrisk::cli
