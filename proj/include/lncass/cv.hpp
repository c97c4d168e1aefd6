#pragma once

#include <cstdint>
#include <vector>

#include "lncass/dataprep.hpp"
#include "lncass/model.hpp"
#include "lncass/sampler.hpp"

namespace lncass {

enum class CvScheme { kfold, loocv_balanced };

struct CvOptions {
  CvScheme scheme = CvScheme::kfold;
  int folds = 10;
  int runs = 1;
  std::uint64_t seed = 1;
  /// Keep this many columns by Wald screening (0 disables screening).
  Index screen_top_k = 0;
  /// Screen once on the full data instead of inside each training fold.
  /// Optimistic: the held-out observations influence the selection.
  bool global_screen = false;
  /// Column transforms, re-estimated on every training fold.
  PreprocessSteps preprocess;
  /// Folds evaluated concurrently; results do not depend on it.
  int threads = 1;
};

struct FoldPrediction {
  int run = 0;
  int fold = 0;
  Index observation = 0;
  double label = 0.0;
  /// Posterior-mean probability (logistic) or posterior-mean response (linear).
  double prediction = 0.0;
};

struct CvResult {
  std::vector<FoldPrediction> predictions;  // ordered by run, fold, observation
  std::vector<double> run_auc;
  double mean_run_auc = 0.0;
  double pooled_auc = 0.0;
  int total_divergences = 0;
};

/// Posterior mean of the response (probability for logistic models) at each
/// row of X, averaging over all draws.
Eigen::VectorXd posterior_predict(const PosteriorModel& model, const PosteriorDraws& draws,
                                  const Eigen::MatrixXd& X);

/// Fits one model per fold and predicts the held-out observations. Screening
/// and column transforms are learned from the training rows of each fold
/// (unless `global_screen`), so no held-out information leaks into a fit.
CvResult cross_validate(const Dataset& data, const ModelSpec& spec, const SamplerConfig& sampler,
                        const CvOptions& options);

}  // namespace lncass
