#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "labrisk/cli.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string run_dir;
  long seed = -1;
  int jobs = 0;
  std::string models, balancers, features;
  bool force = false;

  void attach(CLI::App* cmd, bool with_filters) {
    cmd->add_option("--config", config_path, "Config file (INI format)");
    cmd->add_option("--seed", seed, "Master seed (overrides config)");
    cmd->add_option("--jobs", jobs, "Worker threads (overrides config)");
    cmd->add_option("--run-dir", run_dir,
                    "Exact run directory (default: <out_dir>/<stamp>-<seed>)");
    if (with_filters) {
      cmd->add_option("--models", models,
                      "Comma list: logreg,rf,xgb,lgbm,mlp,nb");
      cmd->add_option("--balancers", balancers,
                      "Comma list: none,smote,adasyn,randomover,randomunder,"
                      "smotetomek,smoteenn");
      cmd->add_option("--features", features,
                      "Comma list: univariate,rfe,manual");
    }
    cmd->add_flag("--force", force, "Allow overwriting final report files");
  }

  labrisk::cli::RunConfig resolve() const {
    labrisk::cli::RunConfig cfg = labrisk::cli::load_config(config_path);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (jobs > 0) cfg.jobs = jobs;
    if (!run_dir.empty()) cfg.run_dir = run_dir;
    if (!models.empty()) cfg.models = labrisk::cli::detail::split_list(models);
    if (!balancers.empty())
      cfg.balancers = labrisk::cli::detail::split_list(balancers);
    if (!features.empty())
      cfg.features = labrisk::cli::detail::split_list(features);
    if (force) cfg.force = true;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "labrisk: lab-panel cancer-risk benchmark harness "
      "(synthetic cohorts, curation, pipeline sweep, evaluation, SHAP)"};
  app.require_subcommand(1);

  CommonFlags synth_f, curate_f, sweep_f, eval_f, explain_f, print_f;
  std::string eval_pipeline, explain_pipeline;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  synth_f.attach(synth, false);
  auto* curate = app.add_subcommand(
      "curate", "Ingest raw CSVs, merge diagnoses, label visits");
  curate_f.attach(curate, false);
  auto* sweepc =
      app.add_subcommand("sweep", "Run the pipeline benchmark grid");
  sweep_f.attach(sweepc, true);
  auto* evaluate = app.add_subcommand(
      "evaluate", "Retrain a pipeline on train+val and score the test set");
  eval_f.attach(evaluate, true);
  evaluate->add_option("pipeline", eval_pipeline,
                       "Pipeline id, e.g. logreg-rfe-none")
      ->required();
  auto* explain = app.add_subcommand(
      "explain", "Shapley attributions for a fitted pipeline");
  explain_f.attach(explain, true);
  explain->add_option("pipeline", explain_pipeline, "Pipeline id")->required();
  auto* print_config =
      app.add_subcommand("print-config", "Print the resolved configuration");
  print_f.attach(print_config, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return labrisk::cli::cmd_synth(synth_f.resolve());
    if (curate->parsed()) return labrisk::cli::cmd_curate(curate_f.resolve());
    if (sweepc->parsed()) return labrisk::cli::cmd_sweep(sweep_f.resolve());
    if (evaluate->parsed())
      return labrisk::cli::cmd_evaluate(eval_f.resolve(), eval_pipeline);
    if (explain->parsed())
      return labrisk::cli::cmd_explain(explain_f.resolve(), explain_pipeline);
    if (print_config->parsed())
      return labrisk::cli::cmd_print_config(print_f.resolve());
  } catch (const labrisk::UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
