#include "lncass/commands.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "lncass/cv.hpp"
#include "lncass/error.hpp"
#include "lncass/gam_basis.hpp"
#include "lncass/metrics.hpp"
#include "lncass/simgen.hpp"

namespace lncass {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFailedSentinel = "FAILED";

void write_json(const json& value, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io_error, "cannot write '" + path.string() + "'");
  out << value.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io_error, "failed while writing '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, "'" + path.string() + "': " + e.what());
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io_error, "cannot write '" + path.string() + "'");
  return out;
}

std::string fmt(double v) { return format_double(v); }

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd json_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), Index(values.size()));
}

// Field table shared by to_json and apply_json so the two cannot drift.
template <typename Visitor>
void visit_fields(RunConfig& c, Visitor&& v) {
  v("data", c.data);
  v("response", c.response);
  v("model", c.model);
  v("prior", c.prior);
  v("groups", c.groups);
  v("knots", c.knots);
  v("tau", c.tau);
  v("mu-lambda", c.mu_lambda);
  v("sigma-lambda", c.sigma_lambda);
  v("inclusion-prob", c.inclusion_prob);
  v("intercept-sd", c.intercept_sd);
  v("noise-scale-sd", c.noise_scale_sd);
  v("parameterization", c.parameterization);
  v("chains", c.chains);
  v("warmup", c.warmup);
  v("draws", c.draws);
  v("target-accept", c.target_accept);
  v("max-tree-depth", c.max_tree_depth);
  v("seed", c.seed);
  v("out", c.out);
  v("impute", c.impute);
  v("log1p", c.log1p);
  v("standardize", c.standardize);
  v("scale-unit", c.scale_unit);
  v("case", c.sim_case);
  v("noise-sd", c.noise_sd);
  v("folds", c.folds);
  v("runs", c.runs);
  v("loocv", c.loocv);
  v("screen-top-k", c.screen_top_k);
  v("global-screen", c.global_screen);
  v("top-k", c.top_k);
  v("summary", c.summary);
  v("truth", c.truth);
  v("draws-format", c.draws_format);
  v("interval", c.interval);
  v("curve-points", c.curve_points);
  v("fit-dir", c.fit_dir);
}

}  // namespace

json to_json(const RunConfig& config, std::string_view command) {
  json out;
  out["command"] = std::string(command);
  RunConfig copy = config;
  visit_fields(copy, [&](const char* key, auto& field) { out[key] = field; });
  return out;
}

void apply_json(RunConfig& config, const json& value) {
  if (!value.is_object()) throw Error(ErrorKind::parse_error, "config file must hold a JSON object");
  std::set<std::string> known{"command", "threads"};
  visit_fields(config, [&](const char* key, auto& field) {
    known.insert(key);
    if (value.contains(key)) {
      try {
        value.at(key).get_to(field);
      } catch (const json::exception& e) {
        throw Error(ErrorKind::parse_error, std::string("config key '") + key + "': " + e.what());
      }
    }
  });
  if (value.contains("threads")) config.threads = value.at("threads").get<int>();
  for (const auto& [key, _] : value.items()) {
    if (!known.contains(key)) {
      throw Error(ErrorKind::parse_error, "unknown config key '" + key + "'");
    }
  }
}

std::vector<int> load_groups(const fs::path& path) {
  json value = read_json(path);
  if (value.is_object() && value.contains("groups")) value = value.at("groups");
  if (!value.is_array()) {
    throw Error(ErrorKind::parse_error,
                "'" + path.string() + "' must be an array of group labels or hold a 'groups' array");
  }
  const auto labels = value.get<std::vector<long long>>();
  std::map<long long, int> index;
  for (long long label : labels) index.emplace(label, 0);
  int next = 0;
  for (auto& [label, idx] : index) idx = next++;
  std::vector<int> groups;
  for (long long label : labels) groups.push_back(index.at(label));
  return groups;
}

ModelSpec make_model_spec(const RunConfig& config, const Dataset& data) {
  ModelSpec spec;
  spec.likelihood = parse_likelihood(config.model);
  spec.prior = parse_prior(config.prior);
  spec.parameterization = parse_parameterization(config.parameterization);
  spec.p = data.p();
  spec.n = data.n();
  spec.hyper.tau = config.tau;
  spec.hyper.mu_lambda = config.mu_lambda;
  if (config.inclusion_prob > 0.0) {
    spec.hyper.mu_lambda = HyperParams::with_inclusion_probability(config.inclusion_prob).mu_lambda;
  }
  spec.hyper.sigma_lambda = config.sigma_lambda;
  spec.hyper.intercept_sd = config.intercept_sd;
  spec.hyper.noise_scale_sd = config.noise_scale_sd;
  if (spec.prior == PriorKind::lncass_grouped) {
    if (config.groups.empty()) {
      throw Error(ErrorKind::invalid_argument, "--prior lncass-grouped requires --groups <json>");
    }
    spec.groups = load_groups(config.groups);
  }
  if (spec.prior == PriorKind::lncass_gam) {
    spec.knots = KnotGrid::equally_spaced(config.knots).knots();
  }
  spec.validate();
  return spec;
}

SamplerConfig make_sampler_config(const RunConfig& config) {
  SamplerConfig sc;
  sc.chains = config.chains;
  sc.warmup = config.warmup;
  sc.draws = config.draws;
  sc.target_accept = config.target_accept;
  sc.max_tree_depth = config.max_tree_depth;
  sc.seed = config.seed;
  sc.threads = config.threads;
  sc.validate();
  return sc;
}

PreprocessSteps make_preprocess_steps(const RunConfig& config) {
  return {config.impute, config.log1p, config.standardize, config.scale_unit};
}

// ---------------------------------------------------------------------------
// Draw storage.
//
// CSV: header "chain,draw,<names...>", one row per stored draw, chains in
// order, 1-based chain and draw numbers.
//
// Binary (little-endian): 8-byte magic "LNCDRAWS", uint32 version (1),
// uint32 chains, uint32 draws, uint32 dim, then dim names each as uint32
// length + bytes, then chains*draws*dim float64 values ordered chain, draw,
// parameter.
// ---------------------------------------------------------------------------

void write_draws_csv(const PosteriorDraws& draws, const fs::path& path) {
  std::ofstream out = open_output(path);
  out << "chain,draw";
  for (const auto& name : draws.names()) out << ',' << name;
  out << '\n';
  for (Index c = 0; c < draws.num_chains(); ++c) {
    const Eigen::MatrixXd& chain = draws.chain(c);
    for (Index d = 0; d < chain.rows(); ++d) {
      out << c + 1 << ',' << d + 1;
      for (Index j = 0; j < chain.cols(); ++j) out << ',' << fmt(chain(d, j));
      out << '\n';
    }
  }
}

PosteriorDraws read_draws_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col++ >= 2) names.push_back(cell);
    }
  }
  if (names.empty()) throw Error(ErrorKind::parse_error, "'" + path.string() + "' has no parameters");
  std::map<int, std::vector<std::vector<double>>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    const int chain = std::stoi(cell);
    std::getline(ss, cell, ',');
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() != names.size()) {
      throw Error(ErrorKind::parse_error, "draws row has the wrong number of values");
    }
    rows[chain].push_back(std::move(values));
  }
  std::vector<Eigen::MatrixXd> chains;
  for (const auto& [chain, draws] : rows) {
    Eigen::MatrixXd m(Index(draws.size()), Index(names.size()));
    for (std::size_t d = 0; d < draws.size(); ++d)
      for (std::size_t j = 0; j < names.size(); ++j) m(Index(d), Index(j)) = draws[d][j];
    chains.push_back(std::move(m));
  }
  return PosteriorDraws(std::move(chains), std::move(names));
}

namespace {

constexpr char kDrawsMagic[8] = {'L', 'N', 'C', 'D', 'R', 'A', 'W', 'S'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorKind::parse_error, "truncated binary draws file");
  return value;
}

}  // namespace

void write_draws_binary(const PosteriorDraws& draws, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_error, "cannot write '" + path.string() + "'");
  out.write(kDrawsMagic, sizeof(kDrawsMagic));
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, std::uint32_t(draws.num_chains()));
  put<std::uint32_t>(out, std::uint32_t(draws.num_draws()));
  put<std::uint32_t>(out, std::uint32_t(draws.dim()));
  for (const auto& name : draws.names()) {
    put<std::uint32_t>(out, std::uint32_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
  }
  for (Index c = 0; c < draws.num_chains(); ++c) {
    const Eigen::MatrixXd& chain = draws.chain(c);
    for (Index d = 0; d < chain.rows(); ++d)
      for (Index j = 0; j < chain.cols(); ++j) put<double>(out, chain(d, j));
  }
}

PosteriorDraws read_draws_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path.string() + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kDrawsMagic, sizeof(magic)) != 0) {
    throw Error(ErrorKind::parse_error, "'" + path.string() + "' is not a binary draws file");
  }
  if (get<std::uint32_t>(in) != 1) throw Error(ErrorKind::parse_error, "unsupported draws version");
  const auto chains = get<std::uint32_t>(in);
  const auto num_draws = get<std::uint32_t>(in);
  const auto dim = get<std::uint32_t>(in);
  std::vector<std::string> names(dim);
  for (auto& name : names) {
    name.resize(get<std::uint32_t>(in));
    in.read(name.data(), std::streamsize(name.size()));
  }
  std::vector<Eigen::MatrixXd> out(chains, Eigen::MatrixXd(num_draws, dim));
  for (auto& chain : out)
    for (Index d = 0; d < chain.rows(); ++d)
      for (Index j = 0; j < chain.cols(); ++j) chain(d, j) = get<double>(in);
  return PosteriorDraws(std::move(out), std::move(names));
}

namespace {

void write_summary_csv(const PosteriorSummary& summary, const fs::path& path) {
  std::ofstream out = open_output(path);
  out << "name,mean,median,lower,upper,rhat,ess\n";
  for (const auto& p : summary.parameters) {
    out << p.name << ',' << fmt(p.mean) << ',' << fmt(p.median) << ',' << fmt(p.lower) << ','
        << fmt(p.upper) << ',' << fmt(p.rhat) << ',' << fmt(p.ess) << '\n';
  }
}

// Summary rows keyed by name, read back from summary.csv.
std::map<std::string, std::pair<double, double>> read_summary_medians(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("name,mean,median", 0) != 0) {
    throw Error(ErrorKind::parse_error, "'" + path.string() + "' is not a summary.csv");
  }
  std::map<std::string, std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string name, mean, median;
    std::getline(ss, name, ',');
    std::getline(ss, mean, ',');
    std::getline(ss, median, ',');
    if (!name.empty()) rows[name] = {std::stod(median), std::stod(mean)};
  }
  return rows;
}

// Derived draws of the regression coefficients and the raw-scale intercept.
PosteriorDraws coefficient_draws(const PosteriorModel& model, const PosteriorDraws& draws) {
  const Index count = model.layout().coefficient_count;
  std::vector<Eigen::MatrixXd> chains;
  for (Index c = 0; c < draws.num_chains(); ++c) {
    const Eigen::MatrixXd& chain = draws.chain(c);
    Eigen::MatrixXd derived(chain.rows(), count + 1);
    for (Index d = 0; d < chain.rows(); ++d) {
      const Eigen::VectorXd q = chain.row(d).transpose();
      derived.row(d).head(count) = model.coefficients(q).transpose();
      derived(d, count) = model.intercept(q);
    }
    chains.push_back(std::move(derived));
  }
  std::vector<std::string> names;
  const Index m = model.spec().basis_size();
  for (Index i = 0; i < model.spec().p; ++i) {
    if (model.spec().prior == PriorKind::lncass_gam) {
      for (Index k = 0; k < m; ++k)
        names.push_back("omega[" + std::to_string(k + 1) + "," + std::to_string(i + 1) + "]");
    } else {
      names.push_back("beta[" + std::to_string(i + 1) + "]");
    }
  }
  names.push_back("intercept");
  return PosteriorDraws(std::move(chains), std::move(names));
}

std::string safe_file_stem(const std::string& name) {
  std::string out;
  for (char ch : name) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ? ch : '_';
  return out.empty() ? "covariate" : out;
}

void write_gam_curves(const PosteriorModel& model, const PosteriorDraws& draws,
                      const std::vector<std::string>& columns, const RunConfig& config,
                      const fs::path& dir) {
  fs::create_directories(dir);
  const KnotGrid grid(model.spec().knots);
  const Index m = grid.size();
  const Index points = std::max(config.curve_points, 2);
  Eigen::VectorXd xs(points);
  for (Index q = 0; q < points; ++q) xs[q] = double(q) / double(points - 1);
  // Basis values at the grid, shared by every draw.
  Eigen::MatrixXd basis(points, m);
  for (Index q = 0; q < points; ++q)
    for (Index k = 0; k < m; ++k) basis(q, k) = phi(xs[q], grid[k]);

  const double tail = 0.5 * (1.0 - config.interval);
  const Index total = draws.num_chains() * draws.num_draws();
  for (Index i = 0; i < model.spec().p; ++i) {
    Eigen::MatrixXd values(total, points);
    Index row = 0;
    for (Index c = 0; c < draws.num_chains(); ++c) {
      const Eigen::MatrixXd& chain = draws.chain(c);
      for (Index d = 0; d < chain.rows(); ++d) {
        const Eigen::VectorXd w = model.coefficients(chain.row(d).transpose()).segment(i * m, m);
        values.row(row++) = (basis * w).transpose();
      }
    }
    std::ofstream out = open_output(dir / (safe_file_stem(columns[std::size_t(i)]) + ".csv"));
    out << "x,mean,median,lower,upper\n";
    for (Index q = 0; q < points; ++q) {
      Eigen::VectorXd col = values.col(q);
      const double mean = col.mean();
      std::sort(col.begin(), col.end());
      out << fmt(xs[q]) << ',' << fmt(mean) << ',' << fmt(quantile_sorted(col, 0.5)) << ','
          << fmt(quantile_sorted(col, tail)) << ',' << fmt(quantile_sorted(col, 1.0 - tail))
          << '\n';
    }
  }
}

json preprocessor_json(const Preprocessor& pre, const std::vector<std::string>& columns) {
  json out;
  out["columns"] = columns;
  out["impute"] = pre.steps.impute;
  out["log1p"] = pre.steps.log1p;
  out["standardize"] = pre.steps.standardize;
  out["scale-unit"] = pre.steps.scale_unit;
  if (pre.steps.impute) out["impute-means"] = vector_json(pre.impute_means);
  if (pre.steps.standardize) {
    out["center"] = vector_json(pre.center);
    out["sd"] = vector_json(pre.sd);
  }
  if (pre.steps.scale_unit) {
    out["minimum"] = vector_json(pre.minimum);
    out["range"] = vector_json(pre.range);
  }
  return out;
}

Preprocessor preprocessor_from_json(const json& j) {
  Preprocessor pre;
  pre.steps = {j.at("impute").get<bool>(), j.at("log1p").get<bool>(),
               j.at("standardize").get<bool>(), j.at("scale-unit").get<bool>()};
  if (pre.steps.impute) pre.impute_means = json_vector(j.at("impute-means"));
  if (pre.steps.standardize) {
    pre.center = json_vector(j.at("center"));
    pre.sd = json_vector(j.at("sd"));
  }
  if (pre.steps.scale_unit) {
    pre.minimum = json_vector(j.at("minimum"));
    pre.range = json_vector(j.at("range"));
  }
  return pre;
}

Dataset load_and_prepare(const RunConfig& config, Preprocessor* fitted) {
  if (config.data.empty()) throw Error(ErrorKind::invalid_argument, "--data is required");
  Dataset data = load_csv(config.data, config.response);
  const PreprocessSteps steps = make_preprocess_steps(config);
  const Preprocessor pre = Preprocessor::fit(data, steps);
  if (fitted) *fitted = pre;
  return pre.apply(std::move(data));
}

}  // namespace

void cmd_simulate(const RunConfig& config) {
  SimCase sim;
  sim.kind = parse_sim_case(config.sim_case);
  sim.noise_sd = config.noise_sd;
  sim.seed = config.seed;
  const GroundTruth truth = truth_coefficients(sim);
  const Eigen::MatrixXd X = latin_hypercube(SimCase::kObservations, sim.p(), config.seed);

  Dataset data;
  data.X = X;
  data.y = simulate_regression(X, truth, sim.noise_sd, config.seed);
  for (Index i = 0; i < sim.p(); ++i) data.column_names.push_back("x" + std::to_string(i + 1));
  data.response_name = config.response;
  const fs::path out(config.out);
  save_csv(data, out / "data.csv");

  std::vector<int> groups_1based;
  for (int g : truth.groups) groups_1based.push_back(g + 1);
  json truth_json;
  truth_json["case"] = to_string(sim.kind);
  truth_json["n"] = SimCase::kObservations;
  truth_json["p"] = sim.p();
  truth_json["noise-sd"] = sim.noise_sd;
  truth_json["seed"] = sim.seed;
  truth_json["intercept"] = 0.0;
  truth_json["beta"] = vector_json(truth.beta);
  truth_json["groups"] = groups_1based;
  truth_json["nonzero"] = truth.nonzero_mask;
  write_json(truth_json, out / "truth.json");
  write_json(json(groups_1based), out / "groups.json");
}

void cmd_fit(const RunConfig& config) {
  Preprocessor pre;
  const Dataset data = load_and_prepare(config, &pre);
  const ModelSpec spec = make_model_spec(config, data);
  const PosteriorModel model(spec, data);
  const SamplerConfig sc = make_sampler_config(config);
  const PosteriorDraws draws = sample(model, sc);
  const fs::path out(config.out);

  if (config.draws_format == "binary") {
    write_draws_binary(draws, out / "draws.bin");
  } else if (config.draws_format == "csv") {
    write_draws_csv(draws, out / "draws.csv");
  } else {
    throw Error(ErrorKind::invalid_argument, "--draws-format must be csv or binary");
  }

  PosteriorSummary summary = summarize(draws, config.interval);
  double max_rhat = 0.0;
  for (const auto& p : summary.parameters) max_rhat = std::max(max_rhat, p.rhat);
  // Derived rows: beta (omega for the GAM) and the raw-scale intercept.
  const PosteriorSummary derived = summarize(coefficient_draws(model, draws), config.interval);
  summary.parameters.insert(summary.parameters.end(), derived.parameters.begin(),
                            derived.parameters.end());
  if (spec.prior == PriorKind::lncass_gam) {
    write_gam_curves(model, draws, data.column_names, config, out / "curves");
  }
  write_summary_csv(summary, out / "summary.csv");

  json diag;
  diag["rng"] = draws.rng_name;
  diag["seed"] = sc.seed;
  diag["total-divergences"] = draws.total_divergences();
  diag["max-rhat"] = max_rhat;
  diag["chains"] = json::array();
  for (std::size_t c = 0; c < draws.stats.size(); ++c) {
    const ChainStats& s = draws.stats[c];
    diag["chains"].push_back({{"chain", c + 1},
                              {"step-size", s.step_size},
                              {"mean-accept", s.mean_accept},
                              {"divergences", s.divergences},
                              {"warmup-divergences", s.warmup_divergences},
                              {"mean-tree-depth", s.mean_tree_depth},
                              {"leapfrog-steps", s.leapfrog_steps}});
  }
  write_json(diag, out / "diagnostics.json");

  json fit_info = preprocessor_json(pre, data.column_names);
  fit_info["parameters"] = model.layout().names;
  fit_info["knots"] = spec.knots;
  std::vector<int> groups_1based;
  for (int g : spec.groups) groups_1based.push_back(g + 1);
  fit_info["groups"] = groups_1based;
  write_json(fit_info, out / "model.json");
}

void cmd_predict(const RunConfig& config) {
  if (config.fit_dir.empty()) throw Error(ErrorKind::invalid_argument, "--fit-dir is required");
  if (config.data.empty()) throw Error(ErrorKind::invalid_argument, "--data is required");
  const fs::path fit_dir(config.fit_dir);
  RunConfig fit_config;
  apply_json(fit_config, read_json(fit_dir / "config.json"));
  const json fit_info = read_json(fit_dir / "model.json");
  const auto columns = fit_info.at("columns").get<std::vector<std::string>>();
  const Preprocessor pre = preprocessor_from_json(fit_info);

  Dataset raw = load_csv(config.data, fit_config.response, /*require_response=*/false);
  std::vector<Index> order;
  for (const auto& name : columns) {
    const auto it = std::find(raw.column_names.begin(), raw.column_names.end(), name);
    if (it == raw.column_names.end()) {
      throw Error(ErrorKind::dimension_mismatch, "prediction data lacks column '" + name + "'");
    }
    order.push_back(Index(it - raw.column_names.begin()));
  }
  Dataset data = pre.apply(raw.columns(order), /*clamp_unit=*/true);

  // The layout is rebuilt from the fit's settings; the zero response only
  // satisfies the constructor's shape checks.
  Dataset shape = data;
  shape.y = Eigen::VectorXd::Zero(data.n());
  ModelSpec spec;
  spec.likelihood = parse_likelihood(fit_config.model);
  spec.prior = parse_prior(fit_config.prior);
  spec.parameterization = parse_parameterization(fit_config.parameterization);
  spec.p = Index(columns.size());
  spec.knots = fit_info.at("knots").get<std::vector<double>>();
  for (int g : fit_info.at("groups").get<std::vector<int>>()) spec.groups.push_back(g - 1);
  spec.hyper.tau = fit_config.tau;
  spec.hyper.sigma_lambda = fit_config.sigma_lambda;
  spec.hyper.intercept_sd = fit_config.intercept_sd;
  spec.hyper.noise_scale_sd = fit_config.noise_scale_sd;
  const PosteriorModel model(spec, shape);

  const fs::path draws_csv = fit_dir / "draws.csv";
  const PosteriorDraws draws =
      fs::exists(draws_csv) ? read_draws_csv(draws_csv) : read_draws_binary(fit_dir / "draws.bin");
  if (draws.names() != model.layout().names) {
    throw Error(ErrorKind::dimension_mismatch, "stored draws do not match the fitted model layout");
  }
  const Eigen::VectorXd predicted = posterior_predict(model, draws, data.X);

  std::ofstream out = open_output(fs::path(config.out) / "predictions.csv");
  const bool has_response = raw.y.size() == raw.n();
  out << "row,prediction" << (has_response ? "," + fit_config.response : "") << '\n';
  for (Index i = 0; i < predicted.size(); ++i) {
    out << i + 1 << ',' << fmt(predicted[i]);
    if (has_response) out << ',' << fmt(raw.y[i]);
    out << '\n';
  }
}

void cmd_cv(const RunConfig& config) {
  if (config.data.empty()) throw Error(ErrorKind::invalid_argument, "--data is required");
  const Dataset data = load_csv(config.data, config.response);
  const ModelSpec spec = make_model_spec(config, data);
  CvOptions options;
  options.scheme = config.loocv ? CvScheme::loocv_balanced : CvScheme::kfold;
  options.folds = config.folds;
  options.runs = config.runs;
  options.seed = config.seed;
  options.screen_top_k = config.screen_top_k;
  options.global_screen = config.global_screen;
  options.preprocess = make_preprocess_steps(config);
  options.threads = config.threads;
  const CvResult result = cross_validate(data, spec, make_sampler_config(config), options);

  const fs::path out(config.out);
  {
    std::ofstream pred = open_output(out / "predictions.csv");
    pred << "run,fold,observation,label,prediction\n";
    for (const auto& p : result.predictions) {
      pred << p.run + 1 << ',' << p.fold + 1 << ',' << p.observation + 1 << ',' << fmt(p.label)
           << ',' << fmt(p.prediction) << '\n';
    }
  }
  json summary;
  summary["scheme"] = config.loocv ? "loocv-balanced" : "kfold-stratified";
  summary["runs"] = result.run_auc.size();
  summary["folds"] = config.loocv ? data.n() : config.folds;
  summary["screen-top-k"] = config.screen_top_k;
  summary["screening"] = config.screen_top_k == 0 ? "none"
                         : config.global_screen  ? "global (optimistic: uses held-out rows)"
                                                 : "in-fold";
  summary["run-auc"] = result.run_auc;
  summary["mean-run-auc"] = result.mean_run_auc;
  summary["pooled-auc"] = result.pooled_auc;
  summary["total-divergences"] = result.total_divergences;
  write_json(summary, out / "cv.json");
}

void cmd_screen(const RunConfig& config) {
  if (config.data.empty()) throw Error(ErrorKind::invalid_argument, "--data is required");
  const Dataset raw = load_csv(config.data, config.response);
  const Preprocessor pre = Preprocessor::fit(raw, make_preprocess_steps(config));
  const WaldScreenResult result = wald_screen(pre.apply(raw), config.top_k);
  const fs::path out(config.out);
  save_csv(raw.columns(result.selected), out / "screened.csv");

  std::vector<Index> rank(std::size_t(raw.p()), 0);
  {
    std::vector<Index> order(std::size_t(raw.p()));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return std::abs(result.z[a]) > std::abs(result.z[b]);
    });
    for (std::size_t r = 0; r < order.size(); ++r) rank[std::size_t(order[r])] = Index(r) + 1;
  }
  std::ofstream z = open_output(out / "z_scores.csv");
  z << "column,z,abs_z,rank,selected,score_substituted\n";
  for (Index j = 0; j < raw.p(); ++j) {
    z << raw.column_names[std::size_t(j)] << ',' << fmt(result.z[j]) << ','
      << fmt(std::abs(result.z[j])) << ',' << rank[std::size_t(j)] << ','
      << (rank[std::size_t(j)] <= config.top_k ? 1 : 0) << ','
      << (result.score_substituted[std::size_t(j)] ? 1 : 0) << '\n';
  }
}

void cmd_evaluate(const RunConfig& config) {
  if (config.summary.empty() || config.truth.empty()) {
    throw Error(ErrorKind::invalid_argument, "evaluate needs --summary and --truth");
  }
  const json truth_json = read_json(config.truth);
  GroundTruth truth;
  truth.beta = json_vector(truth_json.at("beta"));
  for (Index i = 0; i < truth.beta.size(); ++i) truth.nonzero_mask.push_back(truth.beta[i] != 0.0);

  Eigen::VectorXd median(truth.beta.size());
  Eigen::VectorXd mean(truth.beta.size());
  const fs::path summary_path(config.summary);
  if (summary_path.extension() == ".json") {
    // A coefficient vector given directly, e.g. another truth.json.
    median = json_vector(read_json(summary_path).at("beta"));
    if (median.size() != truth.beta.size()) {
      throw Error(ErrorKind::dimension_mismatch, "estimate and truth lengths differ");
    }
    mean = median;
  } else {
    const auto rows = read_summary_medians(summary_path);
    for (Index i = 0; i < truth.beta.size(); ++i) {
      const std::string name = "beta[" + std::to_string(i + 1) + "]";
      const auto it = rows.find(name);
      if (it == rows.end()) {
        throw Error(ErrorKind::dimension_mismatch,
                    "summary lacks '" + name + "' required by a truth of length " +
                        std::to_string(truth.beta.size()));
      }
      median[i] = it->second.first;
      mean[i] = it->second.second;
    }
    if (rows.count("beta[" + std::to_string(truth.beta.size() + 1) + "]")) {
      throw Error(ErrorKind::dimension_mismatch, "summary has more coefficients than the truth");
    }
  }
  json out;
  out["p"] = truth.beta.size();
  out["estimate"] = "posterior median";
  out["mae"] = mae(median, truth.beta);
  out["recovery-auc"] = recovery_auc(median, truth);
  out["mae-posterior-mean"] = mae(mean, truth.beta);
  out["recovery-auc-posterior-mean"] = recovery_auc(mean, truth);
  write_json(out, fs::path(config.out) / "metrics.json");
}

int run_command(std::string_view command, const RunConfig& config) {
  const fs::path out(config.out);
  try {
    fs::create_directories(out);
    fs::remove(out / kFailedSentinel);
    write_json(to_json(config, command), out / "config.json");
    if (command == "simulate") {
      cmd_simulate(config);
    } else if (command == "fit") {
      cmd_fit(config);
    } else if (command == "cv") {
      cmd_cv(config);
    } else if (command == "screen") {
      cmd_screen(config);
    } else if (command == "evaluate") {
      cmd_evaluate(config);
    } else if (command == "predict") {
      cmd_predict(config);
    } else {
      throw Error(ErrorKind::invalid_argument, "unknown command '" + std::string(command) + "'");
    }
    return 0;
  } catch (const std::exception& e) {
    std::string kind = "error";
    if (const auto* err = dynamic_cast<const Error*>(&e)) kind = to_string(err->kind());
    std::cerr << "lncass " << command << ": " << kind << ": " << e.what() << '\n';
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream sentinel(out / kFailedSentinel);
    sentinel << kind << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace lncass
