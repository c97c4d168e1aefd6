#pragma once

#include <string>
#include <vector>

#include "lncass/sampler.hpp"
#include "lncass/simgen.hpp"
#include "lncass/types.hpp"

namespace lncass {

struct RocCurve {
  /// Descending; the first entry is +inf so the curve starts at (0, 0).
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;

  /// Trapezoidal area under the curve.
  double area() const;
};

/// Mann-Whitney AUC: the fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. Labels must be 0/1 and contain both.
double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);
RocCurve roc_curve(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

double mae(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

/// AUC of |estimates| against the truth's nonzero indicators.
double recovery_auc(const Eigen::VectorXd& estimates, const GroundTruth& truth);

/// Linear interpolation between order statistics (type 7). `sorted` must be
/// ascending and non-empty.
double quantile_sorted(const Eigen::VectorXd& sorted, double prob);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double rhat = 1.0;
  double ess = 0.0;
};

struct PosteriorSummary {
  double interval_mass = 0.9;
  std::vector<ParameterSummary> parameters;

  const ParameterSummary& operator[](std::string_view name) const;
};

/// Pooled-chain moments and central interval per parameter. rhat is NaN when
/// there is a single chain.
PosteriorSummary summarize(const PosteriorDraws& draws, double interval_mass = 0.9);

/// Indices of the k largest |median| among `medians`, ties to the lower
/// index, ordered by decreasing magnitude.
std::vector<Index> hard_select(const Eigen::VectorXd& medians, Index k);
/// Selection over the summary rows whose names start with `prefix` (e.g. "beta[").
std::vector<Index> hard_select(const PosteriorSummary& summary, Index k,
                               std::string_view prefix = "beta[");

}  // namespace lncass
