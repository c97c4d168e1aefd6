#include <algorithm>
#include <cmath>
#include <limits>

#include "lncass/error.hpp"
#include "lncass/sampler.hpp"

namespace lncass {

namespace {

void check_chains(const std::vector<Eigen::VectorXd>& chains, std::size_t min_chains,
                  const char* what) {
  if (chains.size() < min_chains || chains.front().size() < 4) {
    throw Error(ErrorKind::invalid_argument,
                std::string(what) + " needs at least " + std::to_string(min_chains) +
                    " chain(s) of at least 4 draws");
  }
  for (const auto& c : chains) {
    if (c.size() != chains.front().size()) {
      throw Error(ErrorKind::dimension_mismatch, std::string(what) + ": chains differ in length");
    }
  }
}

double sample_variance(const Eigen::VectorXd& x) {
  const double m = x.mean();
  return (x.array() - m).square().sum() / double(x.size() - 1);
}

// Biased (1/n) autocovariance at one lag.
double autocovariance(const Eigen::VectorXd& x, double mean, Index lag) {
  const Index n = x.size();
  double s = 0.0;
  for (Index i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s / double(n);
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  check_chains(chains, 2, "split_rhat");
  const Index n = chains.front().size();
  const Index half = n / 2;
  std::vector<Eigen::VectorXd> splits;
  for (const auto& c : chains) {
    splits.emplace_back(c.head(half));
    splits.emplace_back(c.tail(half));
  }
  const double m = double(splits.size());
  Eigen::VectorXd means(splits.size());
  double within = 0.0;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    means[Index(s)] = splits[s].mean();
    within += sample_variance(splits[s]);
  }
  within /= m;
  const double between = double(half) * sample_variance(means);
  if (within <= 0.0) {
    return between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  const double var_plus = (double(half) - 1.0) / double(half) * within + between / double(half);
  return std::sqrt(var_plus / within);
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  check_chains(chains, 1, "effective_sample_size");
  const Index n = chains.front().size();
  const std::size_t num_chains = chains.size();
  const double total = double(n) * double(num_chains);

  Eigen::VectorXd chain_mean(num_chains);
  Eigen::VectorXd chain_var(num_chains);
  for (std::size_t c = 0; c < num_chains; ++c) {
    chain_mean[Index(c)] = chains[c].mean();
    chain_var[Index(c)] =
        autocovariance(chains[c], chain_mean[Index(c)], 0) * double(n) / double(n - 1);
  }
  const double mean_var = chain_var.mean();
  double var_plus = mean_var * double(n - 1) / double(n);
  if (num_chains > 1) var_plus += sample_variance(chain_mean);
  if (!(var_plus > 0.0) || !(mean_var > 0.0)) return total;

  auto mean_acov = [&](Index lag) {
    double s = 0.0;
    for (std::size_t c = 0; c < num_chains; ++c) {
      s += autocovariance(chains[c], chain_mean[Index(c)], lag);
    }
    return s / double(num_chains);
  };
  auto rho = [&](Index lag) { return 1.0 - (mean_var - mean_acov(lag)) / var_plus; };

  Eigen::VectorXd rho_hat = Eigen::VectorXd::Zero(n);
  double rho_even = 1.0;
  double rho_odd = rho(1);
  rho_hat[0] = rho_even;
  rho_hat[1] = rho_odd;
  Index s = 1;
  while (s < n - 4 && rho_even + rho_odd > 0.0) {
    rho_even = rho(s + 1);
    rho_odd = rho(s + 2);
    if (rho_even + rho_odd >= 0.0) {
      rho_hat[s + 1] = rho_even;
      rho_hat[s + 2] = rho_odd;
    }
    s += 2;
  }
  const Index max_s = s;
  if (rho_even > 0.0) rho_hat[max_s + 1] = rho_even;

  // Initial monotone sequence.
  for (Index t = 1; t <= max_s - 3; t += 2) {
    if (rho_hat[t + 1] + rho_hat[t + 2] > rho_hat[t - 1] + rho_hat[t]) {
      rho_hat[t + 1] = 0.5 * (rho_hat[t - 1] + rho_hat[t]);
      rho_hat[t + 2] = rho_hat[t + 1];
    }
  }
  double tau = -1.0 + 2.0 * rho_hat.head(max_s).sum() + rho_hat[max_s + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

double rhat(const PosteriorDraws& draws, std::string_view param) {
  return split_rhat(draws.per_chain(draws.index_of(param)));
}

double ess(const PosteriorDraws& draws, std::string_view param) {
  return effective_sample_size(draws.per_chain(draws.index_of(param)));
}

}  // namespace lncass
