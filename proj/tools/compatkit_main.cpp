// compatkit: backward-compatibility metrics for model updates and the toy
// compatibility-adapter experiments.

#include <iostream>

#include <CLI11.hpp>

#include "compatkit/commands.hpp"

int main(int argc, char** argv) {
  namespace cli = compatkit::cli;

  CLI::App app{"Model-update compatibility toolkit"};
  app.require_subcommand(1);

  cli::EvaluateOptions eval;
  std::string eval_output;
  auto* evaluate = app.add_subcommand("evaluate", "Compute a compatibility report from a JSONL prediction log");
  evaluate->add_option("log", eval.log, "Prediction log (JSON lines)")->required();
  evaluate->add_option("--metric", eval.metric, "exact-match | mc-accuracy | rouge<N>-<f1|precision|recall>");
  evaluate->add_option("--output", eval_output, "Write the report JSON here");

  cli::CompareOptions cmp;
  std::string cmp_output;
  auto* compare = app.add_subcommand("compare", "Compare a candidate report against a base report");
  compare->add_option("base", cmp.base, "Base report (vanilla update)")->required();
  compare->add_option("candidate", cmp.candidate, "Candidate report")->required();
  compare->add_option("--thresholds", cmp.thresholds, "rule=value[,...] or a JSON file");
  compare->add_option("--output", cmp_output, "Write the delta report JSON here");

  cli::ExperimentOptions exp;
  std::uint64_t seed = 0;
  auto* experiment = app.add_subcommand("experiment", "Run the toy model-update experiment");
  experiment->add_option("--config", exp.config, "Experiment config JSON (default: bundled MoreData scenario)");
  experiment->add_option("--output", exp.output, "Output directory")->required();
  auto* seed_opt = experiment->add_option("--seed", seed, "Run a single seed instead of the configured list");

  std::filesystem::path validate_log;
  auto* validate = app.add_subcommand("validate", "Check a prediction log against the record invariants");
  validate->add_option("log", validate_log, "Prediction log (JSON lines)")->required();

  CLI11_PARSE(app, argc, argv);

  if (evaluate->parsed()) {
    if (!eval_output.empty()) eval.output = eval_output;
    return cli::cmd_evaluate(eval, std::cout, std::cerr);
  }
  if (compare->parsed()) {
    if (!cmp_output.empty()) cmp.output = cmp_output;
    return cli::cmd_compare(cmp, std::cout, std::cerr);
  }
  if (experiment->parsed()) {
    if (*seed_opt) exp.seed = seed;
    return cli::cmd_experiment(exp, std::cout, std::cerr);
  }
  return cli::cmd_validate(validate_log, std::cout, std::cerr);
}
