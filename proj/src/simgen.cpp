#include "lncass/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lncass/error.hpp"
#include "lncass/random.hpp"

namespace lncass {

namespace {

// Stream identifiers so the perturbations never share draws with designs or
// response noise generated from the same seed.
constexpr std::uint64_t kDesignStream = 101;
constexpr std::uint64_t kTruthStream = 102;
constexpr std::uint64_t kNoiseStream = 103;

}  // namespace

const char* to_string(SimCaseKind kind) {
  switch (kind) {
    case SimCaseKind::p20: return "p20";
    case SimCaseKind::p70: return "p70";
    case SimCaseKind::p120: return "p120";
  }
  return "unknown";
}

SimCaseKind parse_sim_case(std::string_view text) {
  if (text == "p20" || text == "20") return SimCaseKind::p20;
  if (text == "p70" || text == "70") return SimCaseKind::p70;
  if (text == "p120" || text == "120") return SimCaseKind::p120;
  throw Error(ErrorKind::invalid_argument,
              "unknown simulation case '" + std::string(text) + "' (expected p20, p70 or p120)");
}

Index SimCase::p() const {
  switch (kind) {
    case SimCaseKind::p20: return 20;
    case SimCaseKind::p70: return 70;
    case SimCaseKind::p120: return 120;
  }
  return 0;
}

Index GroundTruth::nonzero_count() const {
  return Index(std::count(nonzero_mask.begin(), nonzero_mask.end(), true));
}

Eigen::MatrixXd latin_hypercube(Index n, Index p, std::uint64_t seed) {
  if (n < 1 || p < 1) {
    throw Error(ErrorKind::invalid_argument, "latin_hypercube needs n >= 1 and p >= 1");
  }
  Rng rng(seed, kDesignStream);
  Eigen::MatrixXd X(n, p);
  std::vector<Index> strata(static_cast<std::size_t>(n));
  for (Index j = 0; j < p; ++j) {
    std::iota(strata.begin(), strata.end(), Index(0));
    rng.shuffle(strata);
    for (Index i = 0; i < n; ++i) {
      const double x = (double(strata[std::size_t(i)]) + rng.uniform()) / double(n);
      // Rounding can land exactly on the upper stratum edge; keep it inside.
      X(i, j) = std::min(x, std::nextafter((double(strata[std::size_t(i)]) + 1.0) / double(n), 0.0));
    }
  }
  return X;
}

GroundTruth truth_coefficients(const SimCase& sim) {
  const Index p = sim.p();
  const Index size = SimCase::kGroupSize;
  GroundTruth truth;
  truth.beta = Eigen::VectorXd::Zero(p);
  truth.groups.resize(std::size_t(p));
  for (Index i = 0; i < p; ++i) truth.groups[std::size_t(i)] = int(i / size);

  Rng rng(sim.seed, kTruthStream);
  // Groups are numbered from 1 here to match the scenario tables.
  auto group = [&](int g) { return truth.beta.segment((g - 1) * size, size); };
  auto noisy = [&](int g, double level) {
    for (Index k = 0; k < size; ++k) group(g)[k] = level + rng.normal(0.0, 0.1);
  };
  switch (sim.kind) {
    case SimCaseKind::p20:
      group(2).setConstant(2.0);
      noisy(4, -1.0);
      break;
    case SimCaseKind::p70:
      group(4).setConstant(2.0);
      group(7).setConstant(2.0);
      noisy(8, -1.0);
      group(14) << -0.5, -0.5, 3.0, -0.5, -0.5;
      break;
    case SimCaseKind::p120:
      group(6).setConstant(1.0);
      noisy(12, 2.0);
      group(18) << -1.0, -1.0, -1.0, -2.0, -1.0;
      group(19) << 0.5, 0.5, 0.5, 2.0, 0.5;
      break;
  }
  truth.nonzero_mask.resize(std::size_t(p));
  for (Index i = 0; i < p; ++i) truth.nonzero_mask[std::size_t(i)] = truth.beta[i] != 0.0;
  return truth;
}

Eigen::VectorXd simulate_regression(const Eigen::MatrixXd& X, const GroundTruth& truth,
                                    double noise_sd, std::uint64_t seed) {
  if (X.cols() != truth.beta.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "design has " + std::to_string(X.cols()) + " columns but beta has length " +
                    std::to_string(truth.beta.size()));
  }
  if (!(noise_sd >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "noise_sd must be non-negative");
  }
  Rng rng(seed, kNoiseStream);
  Eigen::VectorXd y = X * truth.beta;
  for (Index i = 0; i < y.size(); ++i) y[i] += noise_sd * rng.normal();
  return y;
}

}  // namespace lncass
