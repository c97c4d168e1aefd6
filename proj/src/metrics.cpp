#include "lncass/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lncass/error.hpp"

namespace lncass {

namespace {

struct ClassCounts {
  Index positives = 0;
  Index negatives = 0;
};

ClassCounts check_labels(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "scores have length " + std::to_string(scores.size()) + " but labels have " +
                    std::to_string(labels.size()));
  }
  ClassCounts counts;
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) {
      ++counts.positives;
    } else if (labels[i] == 0.0) {
      ++counts.negatives;
    } else {
      throw Error(ErrorKind::invalid_argument, "labels must be 0 or 1");
    }
    if (std::isnan(scores[i])) throw Error(ErrorKind::invalid_argument, "scores contain NaN");
  }
  if (counts.positives == 0 || counts.negatives == 0) {
    throw Error(ErrorKind::single_class, "AUC needs at least one positive and one negative label");
  }
  return counts;
}

std::vector<Index> order_descending(const Eigen::VectorXd& scores) {
  std::vector<Index> order(std::size_t(scores.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  const ClassCounts counts = check_labels(scores, labels);
  // Rank-sum form with midranks for ties.
  std::vector<Index> order(std::size_t(scores.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1.0) positive_rank_sum += midrank;
    }
    i = j + 1;
  }
  const double np = double(counts.positives);
  const double nn = double(counts.negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

RocCurve roc_curve(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  const ClassCounts counts = check_labels(scores, labels);
  const std::vector<Index> order = order_descending(scores);
  RocCurve curve;
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  Index tp = 0;
  Index fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] == 1.0) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    curve.thresholds.push_back(threshold);
    curve.fpr.push_back(double(fp) / double(counts.negatives));
    curve.tpr.push_back(double(tp) / double(counts.positives));
  }
  return curve;
}

double RocCurve::area() const {
  double total = 0.0;
  for (std::size_t i = 1; i < fpr.size(); ++i) {
    total += (fpr[i] - fpr[i - 1]) * 0.5 * (tpr[i] + tpr[i - 1]);
  }
  return total;
}

double mae(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "mae: estimate has length " + std::to_string(estimate.size()) +
                    " but truth has length " + std::to_string(truth.size()));
  }
  if (estimate.size() == 0) throw Error(ErrorKind::invalid_argument, "mae of empty vectors");
  return (estimate - truth).cwiseAbs().mean();
}

double recovery_auc(const Eigen::VectorXd& estimates, const GroundTruth& truth) {
  if (estimates.size() != Index(truth.nonzero_mask.size())) {
    throw Error(ErrorKind::dimension_mismatch,
                "recovery_auc: " + std::to_string(estimates.size()) + " estimates for " +
                    std::to_string(truth.nonzero_mask.size()) + " true coefficients");
  }
  Eigen::VectorXd labels(estimates.size());
  for (Index i = 0; i < labels.size(); ++i) labels[i] = truth.nonzero_mask[std::size_t(i)] ? 1 : 0;
  return auc(estimates.cwiseAbs(), labels);
}

double quantile_sorted(const Eigen::VectorXd& sorted, double prob) {
  if (sorted.size() == 0) throw Error(ErrorKind::invalid_argument, "quantile of empty sample");
  const double h = (double(sorted.size()) - 1.0) * prob;
  const Index lo = Index(std::floor(h));
  const Index hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - double(lo)) * (sorted[hi] - sorted[lo]);
}

const ParameterSummary& PosteriorSummary::operator[](std::string_view name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return p;
  }
  throw Error(ErrorKind::invalid_argument, "no summary for '" + std::string(name) + "'");
}

PosteriorSummary summarize(const PosteriorDraws& draws, double interval_mass) {
  if (!(interval_mass > 0.0 && interval_mass < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "interval mass must lie in (0, 1)");
  }
  if (draws.num_chains() == 0 || draws.num_draws() == 0) {
    throw Error(ErrorKind::invalid_argument, "cannot summarize empty draws");
  }
  PosteriorSummary summary;
  summary.interval_mass = interval_mass;
  const double tail = 0.5 * (1.0 - interval_mass);
  for (Index j = 0; j < draws.dim(); ++j) {
    Eigen::VectorXd x = draws.pooled(j);
    ParameterSummary s;
    s.name = draws.names()[std::size_t(j)];
    s.mean = x.mean();
    std::sort(x.begin(), x.end());
    s.median = quantile_sorted(x, 0.5);
    s.lower = quantile_sorted(x, tail);
    s.upper = quantile_sorted(x, 1.0 - tail);
    const auto chains = draws.per_chain(j);
    const bool enough = draws.num_draws() >= 4;
    s.rhat = enough && chains.size() >= 2 ? split_rhat(chains)
                                          : std::numeric_limits<double>::quiet_NaN();
    s.ess = enough ? effective_sample_size(chains) : double(x.size());
    summary.parameters.push_back(std::move(s));
  }
  return summary;
}

std::vector<Index> hard_select(const Eigen::VectorXd& medians, Index k) {
  if (k < 1 || k > medians.size()) {
    throw Error(ErrorKind::out_of_range,
                "hard_select: k = " + std::to_string(k) + " must lie in [1, " +
                    std::to_string(medians.size()) + "]");
  }
  std::vector<Index> order(std::size_t(medians.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(medians[a]) > std::abs(medians[b]);
  });
  order.resize(std::size_t(k));
  return order;
}

std::vector<Index> hard_select(const PosteriorSummary& summary, Index k, std::string_view prefix) {
  std::vector<double> values;
  for (const auto& p : summary.parameters) {
    if (p.name.starts_with(prefix)) values.push_back(p.median);
  }
  return hard_select(Eigen::Map<const Eigen::VectorXd>(values.data(), Index(values.size())), k);
}

}  // namespace lncass
