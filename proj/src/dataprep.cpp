#include "lncass/dataprep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "lncass/error.hpp"
#include "lncass/math.hpp"
#include "lncass/random.hpp"

namespace lncass {

Index Dataset::missing_count() const { return Index((X.array() != X.array()).count()); }

std::vector<std::pair<Index, Index>> Dataset::missing_cells() const {
  std::vector<std::pair<Index, Index>> cells;
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.cols(); ++j)
      if (std::isnan(X(i, j))) cells.emplace_back(i, j);
  return cells;
}

bool Dataset::has_binary_response() const {
  return (y.array() == 0.0 || y.array() == 1.0).all();
}

Dataset Dataset::rows(std::span<const Index> indices) const {
  Dataset out;
  out.X.resize(Index(indices.size()), X.cols());
  out.y.resize(y.size() ? Index(indices.size()) : 0);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.X.row(Index(r)) = X.row(indices[r]);
    if (y.size()) out.y[Index(r)] = y[indices[r]];
  }
  out.column_names = column_names;
  out.response_name = response_name;
  out.provenance = provenance;
  return out;
}

Dataset Dataset::columns(std::span<const Index> indices) const {
  Dataset out;
  out.X.resize(X.rows(), Index(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    out.X.col(Index(c)) = X.col(indices[c]);
    out.column_names.push_back(column_names[std::size_t(indices[c])]);
  }
  out.y = y;
  out.response_name = response_name;
  out.provenance = provenance;
  return out;
}

void require_binary_response(const Dataset& data) {
  if (!data.has_binary_response()) {
    throw Error(ErrorKind::invalid_argument,
                "response '" + data.response_name + "' must be 0/1 for a logistic model");
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cell += ch;
    } else if (ch == ',' && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

bool parse_double(const std::string& text, double& value) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec == std::errc() && ptr == end) return true;
  // from_chars rejects a leading '+' and the spelled-out specials; defer to strtod.
  char* stop = nullptr;
  value = std::strtod(text.c_str(), &stop);
  return !text.empty() && stop == text.c_str() + text.size();
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw Error(ErrorKind::io_error, "failed to format a number");
  return std::string(buffer, ptr);
}

Dataset load_csv(const std::filesystem::path& path, const std::string& response,
                 bool require_response) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::parse_error, "'" + path.string() + "' has no header row");
  }
  const std::vector<std::string> header = split_row(line);
  const auto response_it = std::find(header.begin(), header.end(), response);
  if (response_it == header.end() && require_response) {
    throw Error(ErrorKind::parse_error,
                "response column '" + response + "' not found in '" + path.string() + "'");
  }
  const std::size_t response_col = std::size_t(response_it - header.begin());

  Dataset data;
  data.response_name = response;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != response_col) data.column_names.push_back(header[c]);
  }
  std::vector<double> x_values;
  std::vector<double> y_values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::parse_error,
                  "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double value = std::numeric_limits<double>::quiet_NaN();
      if (cells[c].empty() || cells[c] == "NA") {
        if (c == response_col) {
          throw Error(ErrorKind::missing_value,
                      "row " + std::to_string(row) + " is missing the response '" + response + "'");
        }
      } else if (!parse_double(cells[c], value)) {
        throw Error(ErrorKind::parse_error,
                    "non-numeric cell '" + cells[c] + "' at row " + std::to_string(row) +
                        ", column '" + header[c] + "'");
      }
      (c == response_col ? y_values : x_values).push_back(value);
    }
  }
  const Index n = Index(row);
  const Index p = Index(data.column_names.size());
  data.X = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      x_values.data(), n, p);
  data.y = Eigen::Map<Eigen::VectorXd>(y_values.data(), Index(y_values.size()));
  return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io_error, "cannot write '" + path.string() + "'");
  for (const auto& name : data.column_names) out << name << ',';
  out << data.response_name << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.p(); ++j) {
      if (!std::isnan(data.X(i, j))) out << format_double(data.X(i, j));
      out << ',';
    }
    out << format_double(data.y[i]) << '\n';
  }
  if (!out) throw Error(ErrorKind::io_error, "failed while writing '" + path.string() + "'");
}

namespace {

const std::string& column_name(const Dataset& data, Index j) {
  static const std::string unnamed = "?";
  return std::size_t(j) < data.column_names.size() ? data.column_names[std::size_t(j)] : unnamed;
}

}  // namespace

Dataset log1p_transform(Dataset data) {
  for (Index j = 0; j < data.p(); ++j) {
    for (Index i = 0; i < data.n(); ++i) {
      if (data.X(i, j) < 0.0) {
        throw Error(ErrorKind::out_of_range,
                    "log1p_transform: negative value at row " + std::to_string(i + 1) +
                        ", column '" + column_name(data, j) + "'");
      }
    }
  }
  data.X = data.X.array().log1p();
  data.provenance.emplace_back("log1p");
  return data;
}

Dataset standardize(Dataset data) {
  for (Index j = 0; j < data.p(); ++j) {
    auto col = data.X.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / double(data.n() - 1));
    if (!(sd > 0.0)) {
      throw Error(ErrorKind::invalid_argument,
                  "standardize: column '" + column_name(data, j) + "' has zero variance");
    }
    col = (col.array() - mean) / sd;
  }
  data.provenance.emplace_back("standardize");
  return data;
}

Dataset scale_unit(Dataset data) {
  for (Index j = 0; j < data.p(); ++j) {
    auto col = data.X.col(j);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (!(hi > lo)) {
      throw Error(ErrorKind::invalid_argument,
                  "scale_unit: column '" + column_name(data, j) + "' is constant");
    }
    col = (col.array() - lo) / (hi - lo);
  }
  data.provenance.emplace_back("unit-scale");
  return data;
}

Dataset impute_mean(Dataset data) {
  for (Index j = 0; j < data.p(); ++j) {
    auto col = data.X.col(j);
    double sum = 0.0;
    Index observed = 0;
    for (Index i = 0; i < col.size(); ++i) {
      if (!std::isnan(col[i])) {
        sum += col[i];
        ++observed;
      }
    }
    if (observed == 0) {
      throw Error(ErrorKind::missing_value,
                  "impute_mean: column '" + column_name(data, j) + "' has no observed values");
    }
    const double mean = sum / double(observed);
    for (Index i = 0; i < col.size(); ++i) {
      if (std::isnan(col[i])) col[i] = mean;
    }
  }
  data.provenance.emplace_back("impute");
  return data;
}

Preprocessor Preprocessor::fit(const Dataset& train, PreprocessSteps steps) {
  Preprocessor pre;
  pre.steps = steps;
  Dataset work = train;
  if (steps.impute) {
    pre.impute_means.resize(work.p());
    for (Index j = 0; j < work.p(); ++j) {
      double sum = 0.0;
      Index observed = 0;
      for (Index i = 0; i < work.n(); ++i) {
        if (!std::isnan(work.X(i, j))) {
          sum += work.X(i, j);
          ++observed;
        }
      }
      if (observed == 0) {
        throw Error(ErrorKind::missing_value,
                    "impute_mean: column '" + column_name(work, j) + "' has no observed values");
      }
      pre.impute_means[j] = sum / double(observed);
    }
    work = impute_mean(std::move(work));
  }
  if (steps.log1p) work = log1p_transform(std::move(work));
  if (steps.standardize) {
    pre.center = work.X.colwise().mean();
    pre.sd.resize(work.p());
    for (Index j = 0; j < work.p(); ++j) {
      pre.sd[j] = std::sqrt((work.X.col(j).array() - pre.center[j]).square().sum() /
                            double(work.n() - 1));
    }
    work = standardize(std::move(work));
  }
  if (steps.scale_unit) {
    pre.minimum = work.X.colwise().minCoeff();
    pre.range = work.X.colwise().maxCoeff().transpose() - pre.minimum;
    for (Index j = 0; j < work.p(); ++j) {
      if (!(pre.range[j] > 0.0)) {
        throw Error(ErrorKind::invalid_argument,
                    "scale_unit: column '" + column_name(work, j) + "' is constant");
      }
    }
  }
  return pre;
}

Dataset Preprocessor::apply(Dataset data, bool clamp_unit) const {
  if (steps.impute) {
    for (Index j = 0; j < data.p(); ++j)
      for (Index i = 0; i < data.n(); ++i)
        if (std::isnan(data.X(i, j))) data.X(i, j) = impute_means[j];
    data.provenance.emplace_back("impute");
  }
  if (steps.log1p) data = log1p_transform(std::move(data));
  if (steps.standardize) {
    data.X = (data.X.rowwise() - center.transpose()).array().rowwise() / sd.transpose().array();
    data.provenance.emplace_back("standardize");
  }
  if (steps.scale_unit) {
    data.X = (data.X.rowwise() - minimum.transpose()).array().rowwise() /
             range.transpose().array();
    if (clamp_unit) data.X = data.X.cwiseMax(0.0).cwiseMin(1.0);
    data.provenance.emplace_back("unit-scale");
  }
  return data;
}

WaldFit wald_statistic(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  constexpr int kMaxIterations = 25;
  constexpr double kMaxCoefficient = 15.0;
  constexpr double kTolerance = 1e-8;
  const double ybar = y.mean();

  WaldFit fit;
  fit.intercept = logit(std::clamp(ybar, 1e-12, 1.0 - 1e-12));
  bool converged = false;
  bool clamped = false;
  double info_bb = 0.0;
  for (int it = 0; it < kMaxIterations && !converged; ++it) {
    double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      const double p = inv_logit(fit.intercept + fit.slope * x[i]);
      const double w = p * (1.0 - p);
      g0 += y[i] - p;
      g1 += (y[i] - p) * x[i];
      h00 += w;
      h01 += w * x[i];
      h11 += w * x[i] * x[i];
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0)) break;
    const double d0 = (h11 * g0 - h01 * g1) / det;
    const double d1 = (h00 * g1 - h01 * g0) / det;
    fit.intercept += d0;
    fit.slope += d1;
    if (std::abs(fit.slope) > kMaxCoefficient || std::abs(fit.intercept) > kMaxCoefficient) {
      fit.slope = std::clamp(fit.slope, -kMaxCoefficient, kMaxCoefficient);
      fit.intercept = std::clamp(fit.intercept, -kMaxCoefficient, kMaxCoefficient);
      clamped = true;
      break;
    }
    converged = std::max(std::abs(d0), std::abs(d1)) < kTolerance;
  }
  if (converged && !clamped) {
    double h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      const double p = inv_logit(fit.intercept + fit.slope * x[i]);
      const double w = p * (1.0 - p);
      h00 += w;
      h01 += w * x[i];
      h11 += w * x[i] * x[i];
    }
    const double det = h00 * h11 - h01 * h01;
    info_bb = det > 0.0 ? h00 / det : 0.0;  // [I^-1]_{slope,slope}
    if (info_bb > 0.0) {
      fit.z = fit.slope / std::sqrt(info_bb);
      return fit;
    }
  }
  // Score statistic for slope = 0 at the intercept-only fit.
  fit.score_substituted = true;
  const double xbar = x.mean();
  const double u = (x.array() * (y.array() - ybar)).sum();
  const double var = ybar * (1.0 - ybar) * (x.array() - xbar).square().sum();
  fit.z = var > 0.0 ? u / std::sqrt(var) : 0.0;
  return fit;
}

WaldScreenResult wald_screen(const Dataset& data, Index top_k) {
  require_binary_response(data);
  if (top_k < 1 || top_k > data.p()) {
    throw Error(ErrorKind::out_of_range,
                "wald_screen: top_k = " + std::to_string(top_k) + " must lie in [1, " +
                    std::to_string(data.p()) + "]");
  }
  WaldScreenResult result;
  result.z.resize(data.p());
  result.score_substituted.resize(std::size_t(data.p()));
  for (Index j = 0; j < data.p(); ++j) {
    const WaldFit fit = wald_statistic(data.X.col(j), data.y);
    result.z[j] = fit.z;
    result.score_substituted[std::size_t(j)] = fit.score_substituted;
  }
  std::vector<Index> order(std::size_t(data.p()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(result.z[a]) > std::abs(result.z[b]);
  });
  order.resize(std::size_t(top_k));
  result.selected = order;
  result.data = data.columns(order);
  result.data.provenance.push_back("screen:" + std::to_string(top_k));
  return result;
}

namespace {

constexpr std::uint64_t kKfoldStream = 201;
constexpr std::uint64_t kLoocvStream = 202;

struct ClassIndices {
  std::vector<Index> positives;
  std::vector<Index> negatives;
};

ClassIndices split_classes(const Eigen::VectorXd& labels) {
  ClassIndices out;
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) {
      out.positives.push_back(i);
    } else if (labels[i] == 0.0) {
      out.negatives.push_back(i);
    } else {
      throw Error(ErrorKind::invalid_argument, "fold construction needs 0/1 labels");
    }
  }
  if (out.positives.empty() || out.negatives.empty()) {
    throw Error(ErrorKind::single_class, "fold construction needs both classes present");
  }
  return out;
}

}  // namespace

FoldPlan kfold_stratified(const Eigen::VectorXd& labels, int k, std::uint64_t seed) {
  ClassIndices classes = split_classes(labels);
  const std::size_t smallest = std::min(classes.positives.size(), classes.negatives.size());
  if (k < 2 || std::size_t(k) > smallest) {
    throw Error(ErrorKind::out_of_range,
                "kfold_stratified: k = " + std::to_string(k) + " must lie in [2, " +
                    std::to_string(smallest) + "] (smallest class size)");
  }
  Rng rng(seed, kKfoldStream);
  rng.shuffle(classes.positives);
  rng.shuffle(classes.negatives);

  const Index n = labels.size();
  FoldPlan plan;
  plan.fold_of.assign(std::size_t(n), -1);
  plan.test.resize(std::size_t(k));
  plan.train.resize(std::size_t(k));
  plan.dropped.resize(std::size_t(k));
  // Deal positives then negatives round-robin; continuing the rotation keeps
  // the total fold sizes balanced too.
  std::size_t slot = 0;
  for (const auto* members : {&classes.positives, &classes.negatives}) {
    for (Index i : *members) plan.fold_of[std::size_t(i)] = int(slot++ % std::size_t(k));
  }
  for (Index i = 0; i < n; ++i) {
    const int f = plan.fold_of[std::size_t(i)];
    plan.test[std::size_t(f)].push_back(i);
    for (int g = 0; g < k; ++g) {
      if (g != f) plan.train[std::size_t(g)].push_back(i);
    }
  }
  return plan;
}

FoldPlan loocv_balanced(const Eigen::VectorXd& labels, std::uint64_t seed) {
  const ClassIndices classes = split_classes(labels);
  Rng rng(seed, kLoocvStream);
  const Index n = labels.size();
  FoldPlan plan;
  plan.fold_of.resize(std::size_t(n));
  for (Index i = 0; i < n; ++i) {
    const auto& opposite = labels[i] == 1.0 ? classes.negatives : classes.positives;
    const Index drop = opposite[std::size_t(rng.below(opposite.size()))];
    plan.fold_of[std::size_t(i)] = int(i);
    plan.test.push_back({i});
    plan.dropped.push_back({drop});
    std::vector<Index> train;
    train.reserve(std::size_t(n - 2));
    for (Index j = 0; j < n; ++j) {
      if (j != i && j != drop) train.push_back(j);
    }
    plan.train.push_back(std::move(train));
  }
  return plan;
}

}  // namespace lncass
