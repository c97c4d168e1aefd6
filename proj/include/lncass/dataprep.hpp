#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lncass/dataset.hpp"
#include "lncass/types.hpp"

namespace lncass {

/// Reads a header-first CSV. Every column other than `response` is a
/// covariate; empty covariate cells become NaN (missing). When the response
/// column is absent and not required, y is left empty.
Dataset load_csv(const std::filesystem::path& path, const std::string& response,
                 bool require_response = true);
/// Writes covariates then the response column; missing cells are left empty.
/// Values use the shortest round-trip representation.
void save_csv(const Dataset& data, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// Column transforms. Each returns a new dataset and appends to provenance.

Dataset log1p_transform(Dataset data);
/// Column mean 0 and sample standard deviation 1 (n - 1 denominator).
Dataset standardize(Dataset data);
/// (x - min) / (max - min) per column.
Dataset scale_unit(Dataset data);
/// Replaces NaN cells by the mean of the observed entries of their column.
Dataset impute_mean(Dataset data);

struct PreprocessSteps {
  bool impute = false;
  bool log1p = false;
  bool standardize = false;
  bool scale_unit = false;

  bool any() const { return impute || log1p || standardize || scale_unit; }
};

/// Column statistics learned on one dataset (a training fold) and replayed
/// on another, in the fixed order impute, log1p, standardize, scale_unit.
struct Preprocessor {
  PreprocessSteps steps;
  Eigen::VectorXd impute_means;
  Eigen::VectorXd center;
  Eigen::VectorXd sd;
  Eigen::VectorXd minimum;
  Eigen::VectorXd range;

  static Preprocessor fit(const Dataset& train, PreprocessSteps steps);
  /// With `clamp_unit`, unit-scaled values falling outside [0, 1] (unseen
  /// data) are clamped to the interval.
  Dataset apply(Dataset data, bool clamp_unit = false) const;
};

struct WaldScreenResult {
  Dataset data;                   // retained columns, in selection order
  std::vector<Index> selected;    // original column indices, by decreasing |z|
  Eigen::VectorXd z;              // one statistic per original column
  std::vector<bool> score_substituted;
};

/// Univariate logistic Wald screening: fits intercept + column by Newton's
/// method and keeps the top_k columns by |z|, ties to the lower index.
/// Separated columns (iteration cap or coefficient clamp reached) are scored
/// by the score statistic instead and flagged.
WaldScreenResult wald_screen(const Dataset& data, Index top_k);

struct WaldFit {
  double intercept = 0.0;
  double slope = 0.0;
  double z = 0.0;
  bool score_substituted = false;
};
WaldFit wald_statistic(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct FoldPlan {
  /// Fold of each observation's test appearance.
  std::vector<int> fold_of;
  std::vector<std::vector<Index>> test;
  std::vector<std::vector<Index>> train;
  std::vector<std::vector<Index>> dropped;

  int num_folds() const { return int(test.size()); }
};

FoldPlan kfold_stratified(const Eigen::VectorXd& labels, int k, std::uint64_t seed);
/// Leave-one-out where each fold also drops one random observation of the
/// opposite class from training, so every training set has the same class
/// balance.
FoldPlan loocv_balanced(const Eigen::VectorXd& labels, std::uint64_t seed);

}  // namespace lncass
