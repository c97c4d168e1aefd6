#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lncass/dataset.hpp"
#include "lncass/model.hpp"
#include "lncass/types.hpp"

namespace lncass {

/// Returns log pi(q) and writes d log pi / dq into the second argument.
using LogDensityFunction = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct SamplerConfig {
  int chains = 4;
  int warmup = 1000;
  int draws = 1000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 1;
  /// Worker threads for chain-level parallelism; output does not depend on it.
  int threads = 1;

  void validate() const;
};

struct ChainStats {
  double step_size = 0.0;
  double mean_accept = 0.0;
  int divergences = 0;
  int warmup_divergences = 0;
  double mean_tree_depth = 0.0;
  long long leapfrog_steps = 0;
  Eigen::VectorXd inverse_mass;
};

/// Post-warmup draws: one (draws x dim) matrix per chain.
class PosteriorDraws {
 public:
  PosteriorDraws() = default;
  PosteriorDraws(std::vector<Eigen::MatrixXd> chains, std::vector<std::string> names);

  Index num_chains() const { return Index(chains_.size()); }
  Index num_draws() const { return chains_.empty() ? 0 : chains_.front().rows(); }
  Index dim() const { return Index(names_.size()); }

  const std::vector<std::string>& names() const { return names_; }
  /// Throws if the name is unknown.
  Index index_of(std::string_view name) const;

  const Eigen::MatrixXd& chain(Index c) const { return chains_[std::size_t(c)]; }
  /// Draws of one parameter, split by chain.
  std::vector<Eigen::VectorXd> per_chain(Index param) const;
  /// Draws of one parameter, chains concatenated in index order.
  Eigen::VectorXd pooled(Index param) const;

  std::vector<ChainStats> stats;
  std::string rng_name;

  int total_divergences() const;

 private:
  std::vector<Eigen::MatrixXd> chains_;
  std::vector<std::string> names_;
};

struct LeapfrogResult {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;
  bool divergent = false;
};

/// `steps` leapfrog updates of H(q, p) = -log pi(q) + p' M^-1 p / 2 with a
/// diagonal mass matrix. A non-finite density or gradient stops the
/// integration and flags the result divergent.
LeapfrogResult leapfrog(const Eigen::VectorXd& position, const Eigen::VectorXd& momentum,
                        double stepsize, int steps, const LogDensityFunction& log_density,
                        const Eigen::VectorXd& mass_diag);

/// No-U-Turn sampling of an arbitrary differentiable target.
PosteriorDraws sample(const LogDensityFunction& log_density, Index dim,
                      std::vector<std::string> names, const SamplerConfig& config);

PosteriorDraws sample(const PosteriorModel& model, const SamplerConfig& config);
PosteriorDraws sample(const ModelSpec& spec, const Dataset& data, const SamplerConfig& config);

/// Split-chain potential scale reduction. Needs >= 2 chains of >= 4 draws.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);
/// Multi-chain ESS with Geyer's initial monotone sequence truncation.
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

double rhat(const PosteriorDraws& draws, std::string_view param);
double ess(const PosteriorDraws& draws, std::string_view param);

}  // namespace lncass
