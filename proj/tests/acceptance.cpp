// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. `acceptance 4 6` runs only the listed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lncass/cv.hpp"
#include "lncass/dataprep.hpp"
#include "lncass/gam_basis.hpp"
#include "lncass/math.hpp"
#include "lncass/metrics.hpp"
#include "lncass/model.hpp"
#include "lncass/random.hpp"
#include "lncass/sampler.hpp"

#ifndef LNCASS_CLI_PATH
#error "LNCASS_CLI_PATH must name the lncass executable"
#endif

using namespace lncass;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kP20MaxMae = 0.10;
constexpr double kP20MinAuc = 0.99;
constexpr double kP70MaxMae = 0.08;
constexpr double kP70MinAuc = 0.98;
constexpr double kGradientMaxRelError = 1e-5;
constexpr double kCalibrationMeanTol = 0.05;
constexpr double kCalibrationVarTol = 0.10;
constexpr double kMaxRhat = 1.01;
constexpr double kGamNullRatio = 0.25;
constexpr double kGamAucGap = 0.05;
constexpr double kLoocvMinAuc = 0.85;
constexpr double kSpikeSeTol = 3.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

fs::path work_root() {
  static const fs::path root = [] {
    const fs::path dir = fs::temp_directory_path() / "lncass_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
  }();
  return root;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

void run_cli(const std::string& args) {
  const std::string command = std::string(LNCASS_CLI_PATH) + " " + args;
  if (std::system(command.c_str()) != 0) throw std::runtime_error("command failed: " + command);
}

// simulate -> fit -> evaluate through the command line; returns metrics.json.
nlohmann::json simulation_pipeline(const std::string& sim_case, const std::string& prior) {
  const fs::path dir = work_root() / (sim_case + "_" + prior);
  const fs::path sim = dir / "sim";
  if (!fs::exists(sim / "truth.json")) {
    run_cli("simulate --case " + sim_case + " --out " + sim.string());
  }
  std::string fit_args = "--data " + (sim / "data.csv").string() + " --prior " + prior +
                         " --out " + (dir / "fit").string();
  if (prior == "lncass-grouped") fit_args += " --groups " + (sim / "groups.json").string();
  run_cli(fit_args + " fit");
  run_cli("--out " + (dir / "eval").string() + " evaluate --summary " +
          (dir / "fit" / "summary.csv").string() + " --truth " + (sim / "truth.json").string());
  nlohmann::json metrics = read_json(dir / "eval" / "metrics.json");
  const nlohmann::json diag = read_json(dir / "fit" / "diagnostics.json");
  metrics["max-rhat"] = diag.at("max-rhat");
  metrics["divergences"] = diag.at("total-divergences");
  return metrics;
}

std::map<std::string, nlohmann::json> pipeline_cache;

const nlohmann::json& cached_pipeline(const std::string& sim_case, const std::string& prior) {
  const std::string key = sim_case + "/" + prior;
  auto it = pipeline_cache.find(key);
  if (it == pipeline_cache.end()) it = pipeline_cache.emplace(key, simulation_pipeline(sim_case, prior)).first;
  return it->second;
}

Outcome simulation_recovery(const std::string& sim_case, double max_mae, double min_auc) {
  const nlohmann::json& m = cached_pipeline(sim_case, "lncass-grouped");
  const double mae_value = m.at("mae");
  const double auc_value = m.at("recovery-auc");
  return {mae_value <= max_mae && auc_value >= min_auc,
          "MAE " + fmt(mae_value) + " (<= " + fmt(max_mae) + "), recovery AUC " + fmt(auc_value) +
              " (>= " + fmt(min_auc) + "), max R-hat " + fmt(m.at("max-rhat").get<double>()) +
              ", divergences " + std::to_string(m.at("divergences").get<int>())};
}

Outcome criterion_1() { return simulation_recovery("p20", kP20MaxMae, kP20MinAuc); }
Outcome criterion_2() { return simulation_recovery("p70", kP70MaxMae, kP70MinAuc); }

Outcome criterion_3() {
  const double lncass_mae = cached_pipeline("p20", "lncass-grouped").at("mae");
  const double horseshoe_mae = cached_pipeline("p20", "horseshoe").at("mae");
  return {lncass_mae <= horseshoe_mae,
          "grouped LN-CASS MAE " + fmt(lncass_mae) + " vs horseshoe MAE " + fmt(horseshoe_mae)};
}

Dataset uniform_dataset(Index n, Index p, bool binary, Rng& rng) {
  Dataset data;
  data.X.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) data.X(i, j) = rng.uniform();
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) data.y[i] = binary ? double(rng.below(2)) : rng.normal();
  if (binary) {
    data.y[0] = 0.0;
    data.y[1] = 1.0;
  }
  for (Index j = 0; j < p; ++j) data.column_names.push_back("x" + std::to_string(j + 1));
  return data;
}

Outcome criterion_4() {
  Rng rng(23);
  double worst = 0.0;
  int instances = 0;
  for (Likelihood likelihood : {Likelihood::gaussian_linear, Likelihood::bernoulli_logit}) {
    for (PriorKind prior : {PriorKind::lncass_basic, PriorKind::lncass_grouped,
                            PriorKind::lncass_gam, PriorKind::horseshoe}) {
      for (Parameterization param : {Parameterization::noncentered, Parameterization::centered}) {
        for (int rep = 0; rep < 20; ++rep, ++instances) {
          const Index p = 4;
          const Dataset data =
              uniform_dataset(15, p, likelihood == Likelihood::bernoulli_logit, rng);
          ModelSpec spec;
          spec.likelihood = likelihood;
          spec.prior = prior;
          spec.parameterization = param;
          spec.p = p;
          if (prior == PriorKind::lncass_grouped) spec.groups = {0, 0, 1, 1};
          if (prior == PriorKind::lncass_gam) spec.knots = {0.0, 1.0 / 3.0, 2.0 / 3.0};
          const PosteriorModel model(spec, data);
          Eigen::VectorXd q(model.dim());
          for (Index j = 0; j < q.size(); ++j) q[j] = rng.normal(0.0, 1.5);
          Eigen::VectorXd grad;
          model.log_density_gradient(q, grad);
          for (Index j = 0; j < q.size(); ++j) {
            const double h = 1e-5;
            Eigen::VectorXd up = q, down = q;
            up[j] += h;
            down[j] -= h;
            const double fd = (model.log_density(up) - model.log_density(down)) / (2 * h);
            // Relative to the larger magnitude, floored at 1 so that components
            // near zero are judged on their absolute error.
            const double rel =
                std::abs(fd - grad[j]) / std::max({std::abs(fd), std::abs(grad[j]), 1.0});
            worst = std::max(worst, rel);
          }
        }
      }
    }
  }
  return {worst < kGradientMaxRelError, std::to_string(instances) +
                                            " instances over 2 likelihoods x 4 priors x 2 "
                                            "parameterizations, worst relative error " +
                                            fmt(worst, 3)};
}

Outcome criterion_5() {
  const Index dim = 10;
  std::vector<std::string> names;
  for (Index j = 0; j < dim; ++j) names.push_back("q[" + std::to_string(j + 1) + "]");
  const LogDensityFunction target = [](const Eigen::VectorXd& q, Eigen::VectorXd& g) {
    g = -q;
    return -0.5 * q.squaredNorm();
  };
  const PosteriorDraws draws = sample(target, dim, names, SamplerConfig{});
  double worst_mean = 0.0, worst_var = 0.0, worst_rhat = 0.0;
  for (Index j = 0; j < dim; ++j) {
    const Eigen::VectorXd x = draws.pooled(j);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().sum() / double(x.size() - 1);
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_var = std::max(worst_var, std::abs(var - 1.0));
    worst_rhat = std::max(worst_rhat, split_rhat(draws.per_chain(j)));
  }
  const int divergences = draws.total_divergences();
  return {worst_mean <= kCalibrationMeanTol && worst_var <= kCalibrationVarTol &&
              worst_rhat < kMaxRhat && divergences == 0,
          "max |mean| " + fmt(worst_mean, 3) + ", max |var - 1| " + fmt(worst_var, 3) +
              ", max split R-hat " + fmt(worst_rhat, 5) + ", divergences " +
              std::to_string(divergences)};
}

Outcome criterion_6() {
  Rng rng(6);
  int mismatches = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = Index(2 + rng.below(11));
    Eigen::VectorXd s(n), y(n);
    for (Index i = 0; i < n; ++i) {
      s[i] = double(rng.below(4));
      y[i] = double(rng.below(2));
    }
    y[0] = 0.0;
    y[1] = 1.0;
    double wins = 0.0, pairs = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (y[i] == 1.0 && y[j] == 0.0) {
          pairs += 1.0;
          wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    if (auc(s, y) != wins / pairs) ++mismatches;
  }
  return {mismatches == 0, "200 instances, " + std::to_string(mismatches) + " mismatches"};
}

// Expected AUC of the ranking by eta when labels are Bernoulli(inv_logit(eta)).
double bayes_optimal_auc(const Eigen::VectorXd& eta) {
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    const double pi = inv_logit(eta[i]);
    for (Index j = 0; j < eta.size(); ++j) {
      if (i == j) continue;
      const double w = pi * (1.0 - inv_logit(eta[j]));
      den += w;
      if (eta[i] > eta[j]) num += w;
      if (eta[i] == eta[j]) num += 0.5 * w;
    }
  }
  return num / den;
}

Outcome criterion_7() {
  const Index n = 300, p = 6;
  const KnotGrid grid = KnotGrid::equally_spaced(5);
  // Basis weights of the generating effects on the fitted grid.
  std::vector<Eigen::VectorXd> weights(std::size_t(p), Eigen::VectorXd::Zero(grid.size()));
  weights[0] << 4.0, 0.0, -8.0, 0.0, 0.0;  // rises to 1.6 at x = 0.4, falls to -1.2
  weights[1] << 0.0, 0.0, 0.0, 3.0, 0.0;   // flat, then rises from x = 0.6
  weights[2][0] = 3.0;
  weights[3][0] = -3.0;
  Rng rng(7007);
  Dataset data;
  data.X.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) data.X(i, j) = rng.uniform();
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  for (Index j = 0; j < p; ++j) eta += reconstruct_f(weights[std::size_t(j)], grid, data.X.col(j));
  eta.array() -= eta.mean();
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) data.y[i] = rng.uniform() < inv_logit(eta[i]) ? 1.0 : 0.0;
  for (Index j = 0; j < p; ++j) data.column_names.push_back("x" + std::to_string(j + 1));
  data.response_name = "y";

  ModelSpec spec;
  spec.likelihood = Likelihood::bernoulli_logit;
  spec.prior = PriorKind::lncass_gam;
  spec.knots = grid.knots();
  spec.p = p;
  const SamplerConfig sampler;

  CvOptions options;
  options.folds = 5;
  options.preprocess.scale_unit = true;
  const CvResult cv = cross_validate(data, spec, sampler, options);

  const Dataset scaled = scale_unit(data);
  const PosteriorModel model(spec, scaled);
  const PosteriorDraws draws = sample(model, sampler);
  std::vector<Eigen::VectorXd> omega;
  for (Index c = 0; c < draws.num_chains(); ++c)
    for (Index d = 0; d < draws.num_draws(); ++d)
      omega.push_back(model.coefficients(draws.chain(c).row(d).transpose()));
  Eigen::VectorXd median(omega.front().size());
  for (Index k = 0; k < median.size(); ++k) {
    Eigen::VectorXd v(Index(omega.size()));
    for (std::size_t s = 0; s < omega.size(); ++s) v[Index(s)] = omega[s][k];
    std::sort(v.data(), v.data() + v.size());
    median[k] = quantile_sorted(v, 0.5);
  }
  const Eigen::VectorXd points = Eigen::VectorXd::LinSpaced(201, 0.0, 1.0);
  std::vector<double> peak(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    peak[std::size_t(j)] =
        reconstruct_f(median.segment(j * grid.size(), grid.size()), grid, points).cwiseAbs().maxCoeff();
  }
  const double smallest_active = *std::min_element(peak.begin(), peak.begin() + 4);
  const double largest_null = std::max(peak[4], peak[5]);
  const double optimal = bayes_optimal_auc(eta);
  const bool pass = largest_null < kGamNullRatio * smallest_active &&
                    std::abs(cv.pooled_auc - optimal) <= kGamAucGap;
  std::string peaks;
  for (double v : peak) peaks += (peaks.empty() ? "" : ", ") + fmt(v, 3);
  return {pass, "max |f| per covariate (" + peaks + "): null " + fmt(largest_null, 3) +
                    " vs 1/4 of active " + fmt(kGamNullRatio * smallest_active, 3) +
                    "; 5-fold AUC " + fmt(cv.pooled_auc) + " vs Bayes-optimal " + fmt(optimal) +
                    ", divergences " + std::to_string(cv.total_divergences)};
}

// LOOCV refits the model 60 times on 500 columns, so the chains are shorter
// than the defaults to keep the suite within a practical runtime.
SamplerConfig loocv_sampler() {
  SamplerConfig config;
  config.chains = 2;
  config.warmup = 300;
  config.draws = 300;
  config.max_tree_depth = 8;
  return config;
}

Outcome criterion_8() {
  const Index n = 60, genes = 1000, active = 10;
  Rng rng(8008);
  Dataset data;
  data.X.resize(n, genes);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < genes; ++j) data.X(i, j) = rng.normal();
  data = standardize(std::move(data));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(genes);
  for (Index j = 0; j < active; ++j) beta[j] = j % 2 == 0 ? 1.5 : -1.5;
  const Eigen::VectorXd eta = data.X * beta;
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) data.y[i] = rng.uniform() < inv_logit(eta[i]) ? 1.0 : 0.0;
  for (Index j = 0; j < genes; ++j) data.column_names.push_back("g" + std::to_string(j + 1));
  data.response_name = "y";

  ModelSpec spec;
  spec.likelihood = Likelihood::bernoulli_logit;
  spec.prior = PriorKind::lncass_basic;
  spec.p = 500;
  CvOptions options;
  options.scheme = CvScheme::loocv_balanced;
  options.screen_top_k = 500;
  options.preprocess.standardize = true;
  const CvResult cv = cross_validate(data, spec, loocv_sampler(), options);
  return {cv.pooled_auc >= kLoocvMinAuc,
          "pooled balanced-LOOCV AUC " + fmt(cv.pooled_auc) + " (>= " + fmt(kLoocvMinAuc) +
              "), in-fold screening 1000 -> 500 columns, " + std::to_string(int(data.y.sum())) +
              " positives, divergences " + std::to_string(cv.total_divergences)};
}

Outcome criterion_9() {
  const Index count = 50000;
  HyperParams hyper;
  hyper.mu_lambda = 0.0;
  hyper.sigma_lambda = 10.0;
  Rng rng(9);
  const Eigen::VectorXd lambda = draw_prior_inclusion(count, hyper, rng);
  const double empirical = double((lambda.array() < 0.01).count()) / double(count);
  const double expected = normal_cdf(logit(0.01) / 10.0);
  const double se = std::sqrt(expected * (1.0 - expected) / double(count));
  const double z = (empirical - expected) / se;
  return {std::abs(z) <= kSpikeSeTol, "P(lambda < 0.01) = " + fmt(empirical, 5) + " vs " +
                                           fmt(expected, 5) + ", " + fmt(z, 3) + " standard errors"};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[fs::relative(entry.path(), dir).string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return files;
}

Outcome criterion_10() {
  const fs::path root = work_root() / "determinism";
  fs::create_directories(root);
  // Shared inputs.
  run_cli("simulate --case p20 --seed 3 --out " + (root / "sim").string());
  Rng rng(10);
  Dataset binary = uniform_dataset(80, 8, true, rng);
  for (Index i = 0; i < binary.n(); ++i)
    binary.y[i] = rng.uniform() < inv_logit(4.0 * binary.X(i, 0) - 2.0) ? 1.0 : 0.0;
  binary.y[0] = 0.0;
  binary.y[1] = 1.0;
  binary.response_name = "y";
  save_csv(binary, root / "binary.csv");

  const std::string sim_data = (root / "sim" / "data.csv").string();
  const std::string groups = (root / "sim" / "groups.json").string();
  const std::string quick = "--chains 4 --warmup 150 --draws 100 --seed 5";
  // Each command, with "{out}" standing for the run's output directory.
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "simulate --case p70 --seed 4"},
      {"fit", "--data " + sim_data + " --prior lncass-grouped --groups " + groups + " " + quick +
                  " fit"},
      {"fit-gam", "--data " + (root / "binary.csv").string() +
                      " --model logistic --prior lncass-gam --knots 3 --scale-unit " + quick +
                      " fit --draws-format binary --curve-points 11"},
      {"cv", "--data " + (root / "binary.csv").string() + " --model logistic " + quick +
                 " cv --folds 4 --screen-top-k 4"},
      {"screen", "--data " + (root / "binary.csv").string() + " screen --top-k 3"},
      {"evaluate", "evaluate --summary " + (root / "sim" / "truth.json").string() + " --truth " +
                       (root / "sim" / "truth.json").string()},
      {"predict", "--data " + sim_data + " predict --fit-dir {fit}"},
  };
  std::vector<std::string> differing;
  std::size_t compared = 0;
  for (const auto& [label, args] : commands) {
    std::map<std::string, std::string> outputs[2];
    for (int t = 0; t < 2; ++t) {
      const std::string threads = t == 0 ? "1" : "8";
      // Both runs write to the same path so that config.json matches too.
      const fs::path out = root / "run";
      std::string line = args;
      if (const auto pos = line.find("{fit}"); pos != std::string::npos) {
        line.replace(pos, 5, (root / "fit_t1").string());
      }
      run_cli("--threads " + threads + " --out " + out.string() + " " + line);
      outputs[t] = snapshot(out);
      fs::rename(out, root / (label + "_t" + threads));
    }
    compared += outputs[0].size();
    if (outputs[0] != outputs[1] || outputs[0].empty()) differing.push_back(label);
  }
  std::string detail = "7 commands at --threads 1 and 8, " + std::to_string(compared) +
                       " output files compared";
  if (!differing.empty()) {
    detail += "; differing:";
    for (const auto& d : differing) detail += " " + d;
  }
  return {differing.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"p20 simulation recovery", criterion_1},
      {"p70 simulation recovery", criterion_2},
      {"LN-CASS vs horseshoe ordering", criterion_3},
      {"gradient suite", criterion_4},
      {"sampler calibration", criterion_5},
      {"AUC oracle equivalence", criterion_6},
      {"GAM recovery", criterion_7},
      {"balanced LOOCV", criterion_8},
      {"spike concentration", criterion_9},
      {"determinism across thread counts", criterion_10},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));

  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int number = int(c + 1);
    if (!selected.empty() && !selected.count(number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[c].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failures;
    std::cout << "criterion " << number << ": " << (outcome.pass ? "PASS" : "FAIL") << "  "
              << criteria[c].first << ": " << outcome.detail << " [" << fmt(seconds, 3) << " s]"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
