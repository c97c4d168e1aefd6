#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "lncass/commands.hpp"
#include "lncass/error.hpp"

namespace {

// Finds --config before full parsing so file values become the defaults that
// flags then override.
std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  lncass::RunConfig config;
  if (const std::string path = find_config_path(argc, argv); !path.empty()) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "lncass: cannot open config file '" << path << "'\n";
      return 2;
    }
    try {
      lncass::apply_json(config, nlohmann::json::parse(in));
    } catch (const std::exception& e) {
      std::cerr << "lncass: config file '" << path << "': " << e.what() << '\n';
      return 2;
    }
  }

  CLI::App app{"LN-CASS sparse Bayesian regression toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with option values keyed by flag name");

  app.add_option("--data", config.data, "Input CSV (header row, numeric cells)");
  app.add_option("--response", config.response, "Response column name")->capture_default_str();
  app.add_option("--model", config.model, "linear or logistic")
      ->check(CLI::IsMember({"linear", "logistic"}))
      ->capture_default_str();
  app.add_option("--prior", config.prior, "lncass, lncass-grouped, lncass-gam or horseshoe")
      ->check(CLI::IsMember({"lncass", "lncass-grouped", "lncass-gam", "horseshoe"}))
      ->capture_default_str();
  app.add_option("--groups", config.groups, "JSON array of group labels, one per covariate");
  app.add_option("--knots", config.knots, "Knot count M for lncass-gam")->capture_default_str();
  app.add_option("--tau", config.tau, "Slab scale")->capture_default_str();
  app.add_option("--mu-lambda", config.mu_lambda, "Location of logit(lambda)")
      ->capture_default_str();
  app.add_option("--sigma-lambda", config.sigma_lambda, "Scale of logit(lambda)")
      ->capture_default_str();
  app.add_option("--inclusion-prob", config.inclusion_prob,
                 "Prior inclusion probability a; sets mu-lambda = logit(a)");
  app.add_option("--parameterization", config.parameterization,
                 "Slab storage: noncentered or centered")
      ->check(CLI::IsMember({"noncentered", "centered"}))
      ->capture_default_str();
  app.add_option("--intercept-sd", config.intercept_sd)->capture_default_str();
  app.add_option("--noise-scale-sd", config.noise_scale_sd)->capture_default_str();

  app.add_option("--chains", config.chains)->capture_default_str();
  app.add_option("--warmup", config.warmup)->capture_default_str();
  app.add_option("--draws", config.draws)->capture_default_str();
  app.add_option("--target-accept", config.target_accept)->capture_default_str();
  app.add_option("--max-tree-depth", config.max_tree_depth)->capture_default_str();
  app.add_option("--seed", config.seed)->capture_default_str();
  app.add_option("--threads", config.threads, "Worker threads; results do not depend on it")
      ->capture_default_str();
  app.add_option("--out", config.out, "Output directory")->capture_default_str();

  app.add_flag("--impute", config.impute, "Replace missing cells by column means");
  app.add_flag("--log1p", config.log1p, "Apply log(1 + x) to covariates");
  app.add_flag("--standardize", config.standardize, "Center and scale covariates");
  app.add_flag("--scale-unit", config.scale_unit, "Rescale covariates to [0, 1]");

  auto* simulate = app.add_subcommand("simulate", "Generate a simulation-study dataset");
  simulate->add_option("--case", config.sim_case, "p20, p70 or p120")
      ->check(CLI::IsMember({"p20", "p70", "p120"}))
      ->capture_default_str();
  simulate->add_option("--noise-sd", config.noise_sd)->capture_default_str();

  auto* fit = app.add_subcommand("fit", "Sample the posterior and summarize it");
  fit->add_option("--draws-format", config.draws_format, "csv or binary")
      ->check(CLI::IsMember({"csv", "binary"}))
      ->capture_default_str();
  fit->add_option("--interval", config.interval, "Central credible interval mass")
      ->capture_default_str();
  fit->add_option("--curve-points", config.curve_points, "Grid size of GAM curve files")
      ->capture_default_str();

  auto* cv = app.add_subcommand("cv", "Cross-validated AUC of a logistic fit");
  cv->add_option("--folds", config.folds)->capture_default_str();
  cv->add_option("--runs", config.runs, "Repetitions of k-fold")->capture_default_str();
  cv->add_flag("--loocv", config.loocv, "Balanced leave-one-out instead of k-fold");
  cv->add_option("--screen-top-k", config.screen_top_k, "Wald-screen to k columns (0: off)")
      ->capture_default_str();
  cv->add_flag("--global-screen", config.global_screen,
               "Screen once on all rows instead of inside each fold");

  auto* screen = app.add_subcommand("screen", "Univariate logistic Wald screening");
  screen->add_option("--top-k", config.top_k)->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "MAE and recovery AUC against a known truth");
  evaluate->add_option("--summary", config.summary, "summary.csv from fit, or JSON with 'beta'");
  evaluate->add_option("--truth", config.truth, "truth.json from simulate");

  auto* predict = app.add_subcommand("predict", "Posterior-mean predictions from a fit directory");
  predict->add_option("--fit-dir", config.fit_dir, "Output directory of a previous fit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return lncass::run_command(app.get_subcommands().front()->get_name(), config);
}
