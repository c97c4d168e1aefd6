#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lncass/dataprep.hpp"
#include "lncass/model.hpp"
#include "lncass/sampler.hpp"

namespace lncass {

/// Fully resolved options for one CLI command. Field names mirror the flags;
/// a JSON config file uses the flag spellings as keys ("mu-lambda", ...).
struct RunConfig {
  std::string data;
  std::string response = "y";
  std::string model = "linear";
  std::string prior = "lncass";
  std::string groups;
  int knots = 5;
  double tau = 5.0;
  double mu_lambda = 0.0;
  double sigma_lambda = 10.0;
  double inclusion_prob = 0.0;  // > 0 sets mu_lambda = logit(inclusion_prob)
  double intercept_sd = 10.0;
  double noise_scale_sd = 5.0;
  std::string parameterization = "noncentered";

  int chains = 4;
  int warmup = 1000;
  int draws = 1000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = ".";

  bool impute = false;
  bool log1p = false;
  bool standardize = false;
  bool scale_unit = false;

  // simulate
  std::string sim_case = "p20";
  double noise_sd = 1.0;

  // cv
  int folds = 10;
  int runs = 1;
  bool loocv = false;
  int screen_top_k = 0;
  bool global_screen = false;

  // screen
  int top_k = 500;

  // evaluate
  std::string summary;
  std::string truth;

  // fit / predict
  std::string draws_format = "csv";
  double interval = 0.9;
  int curve_points = 101;
  std::string fit_dir;
};

/// Echoed configuration. `threads` is left out: it never changes results.
nlohmann::json to_json(const RunConfig& config, std::string_view command);
/// Overwrites fields present in `json`; unknown keys are an error.
void apply_json(RunConfig& config, const nlohmann::json& json);

ModelSpec make_model_spec(const RunConfig& config, const Dataset& data);
SamplerConfig make_sampler_config(const RunConfig& config);
PreprocessSteps make_preprocess_steps(const RunConfig& config);

/// Reads a group assignment file: a JSON array of group labels (one per
/// covariate) or an object with a "groups" array. Labels are mapped to
/// zero-based indices in ascending label order.
std::vector<int> load_groups(const std::filesystem::path& path);

void write_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& path);
PosteriorDraws read_draws_csv(const std::filesystem::path& path);
void write_draws_binary(const PosteriorDraws& draws, const std::filesystem::path& path);
PosteriorDraws read_draws_binary(const std::filesystem::path& path);

void cmd_simulate(const RunConfig& config);
void cmd_fit(const RunConfig& config);
void cmd_cv(const RunConfig& config);
void cmd_screen(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_predict(const RunConfig& config);

/// Runs one command with output-directory bookkeeping: echoes config.json,
/// and on failure writes a FAILED sentinel. Returns the process exit status.
int run_command(std::string_view command, const RunConfig& config);

}  // namespace lncass
