#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "lncass/types.hpp"

namespace lncass {

enum class SimCaseKind { p20, p70, p120 };

const char* to_string(SimCaseKind kind);
SimCaseKind parse_sim_case(std::string_view text);

/// One of the three grouped-regression scenarios. Every case has 100
/// observations and groups of five contiguous covariates.
struct SimCase {
  SimCaseKind kind = SimCaseKind::p20;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;

  static constexpr Index kObservations = 100;
  static constexpr Index kGroupSize = 5;

  Index p() const;
};

struct GroundTruth {
  Eigen::VectorXd beta;
  /// Zero-based group index per covariate.
  std::vector<int> groups;
  std::vector<bool> nonzero_mask;

  Index nonzero_count() const;
};

/// Unit Latin hypercube: in each column, one uniform point per stratum
/// [j/n, (j+1)/n), with the stratum order permuted independently per column.
Eigen::MatrixXd latin_hypercube(Index n, Index p, std::uint64_t seed);

GroundTruth truth_coefficients(const SimCase& sim);

/// y = X beta + eps with zero intercept and eps ~ N(0, noise_sd^2).
Eigen::VectorXd simulate_regression(const Eigen::MatrixXd& X, const GroundTruth& truth,
                                    double noise_sd, std::uint64_t seed);

}  // namespace lncass
