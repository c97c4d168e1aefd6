#include "lncass/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "lncass/error.hpp"
#include "lncass/random.hpp"

namespace lncass {

void SamplerConfig::validate() const {
  if (chains < 1 || warmup < 1 || draws < 1 || max_tree_depth < 1 || threads < 1) {
    throw Error(ErrorKind::invalid_argument,
                "sampler counts (chains, warmup, draws, max_tree_depth, threads) must be >= 1");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "target_accept must lie in (0, 1)");
  }
}

PosteriorDraws::PosteriorDraws(std::vector<Eigen::MatrixXd> chains, std::vector<std::string> names)
    : chains_(std::move(chains)), names_(std::move(names)) {
  for (const auto& c : chains_) {
    if (c.cols() != Index(names_.size()) || c.rows() != chains_.front().rows()) {
      throw Error(ErrorKind::dimension_mismatch, "chains must share the draws x dim shape");
    }
  }
}

Index PosteriorDraws::index_of(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) {
    throw Error(ErrorKind::invalid_argument, "unknown parameter '" + std::string(name) + "'");
  }
  return Index(it - names_.begin());
}

std::vector<Eigen::VectorXd> PosteriorDraws::per_chain(Index param) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(chains_.size());
  for (const auto& c : chains_) out.emplace_back(c.col(param));
  return out;
}

Eigen::VectorXd PosteriorDraws::pooled(Index param) const {
  Eigen::VectorXd out(num_chains() * num_draws());
  for (Index c = 0; c < num_chains(); ++c) {
    out.segment(c * num_draws(), num_draws()) = chains_[std::size_t(c)].col(param);
  }
  return out;
}

int PosteriorDraws::total_divergences() const {
  int total = 0;
  for (const auto& s : stats) total += s.divergences;
  return total;
}

LeapfrogResult leapfrog(const Eigen::VectorXd& position, const Eigen::VectorXd& momentum,
                        double stepsize, int steps, const LogDensityFunction& log_density,
                        const Eigen::VectorXd& mass_diag) {
  if (!(stepsize > 0.0) || steps < 1) {
    throw Error(ErrorKind::invalid_argument, "leapfrog needs stepsize > 0 and steps >= 1");
  }
  if (position.size() != momentum.size() || position.size() != mass_diag.size()) {
    throw Error(ErrorKind::dimension_mismatch, "leapfrog: position, momentum and mass differ in length");
  }
  LeapfrogResult out{position, momentum, false};
  const Eigen::VectorXd inv_mass = mass_diag.cwiseInverse();
  Eigen::VectorXd grad(position.size());
  double lp = log_density(out.position, grad);
  for (int s = 0; s < steps; ++s) {
    if (!std::isfinite(lp) || !grad.allFinite()) {
      out.divergent = true;
      return out;
    }
    out.momentum += 0.5 * stepsize * grad;
    out.position += stepsize * inv_mass.cwiseProduct(out.momentum);
    lp = log_density(out.position, grad);
    if (!std::isfinite(lp) || !grad.allFinite()) {
      out.divergent = true;
      return out;
    }
    out.momentum += 0.5 * stepsize * grad;
  }
  return out;
}

namespace {

constexpr double kMaxEnergyError = 1000.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double log_density = 0.0;
};

// Dual-averaging step-size adaptation.
class StepsizeAdapter {
 public:
  explicit StepsizeAdapter(double delta) : delta_(delta) {}

  void restart(double stepsize) {
    mu_ = std::log(10.0 * stepsize);
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }

  double learn(double accept_stat) {
    ++counter_;
    accept_stat = std::min(1.0, accept_stat);
    const double eta = 1.0 / (double(counter_) + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(double(counter_)) / kGamma;
    const double x_eta = std::pow(double(counter_), -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  double final_stepsize() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kKappa = 0.75;
  static constexpr double kT0 = 10.0;
  double delta_;
  double mu_ = 0.0;
  long counter_ = 0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

// Windowed diagonal mass-matrix estimation: a fast initial step-size phase,
// doubling slow windows where variances are collected, and a terminal
// step-size phase.
class MassAdapter {
 public:
  MassAdapter(Index dim, int warmup) : dim_(dim), warmup_(warmup) {
    if (warmup < 20) {
      enabled_ = false;
      return;
    }
    if (kInitBuffer + kTermBuffer + kBaseWindow > warmup) {
      init_buffer_ = int(0.15 * warmup);
      term_buffer_ = int(0.1 * warmup);
      base_window_ = warmup - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_window_ = init_buffer_ + window_size_ - 1;
    restart_estimator();
  }

  /// Returns true when a window closed and `inverse_mass` was updated.
  bool learn(Eigen::VectorXd& inverse_mass, const Eigen::VectorXd& q) {
    if (!enabled_) return false;
    if (in_window()) add_sample(q);
    if (counter_ == next_window_ && counter_ != warmup_) {
      compute_next_window();
      const double n = double(count_);
      inverse_mass = (n / (n + 5.0)) * (m2_ / (n - 1.0)) +
                     Eigen::VectorXd::Constant(dim_, 1e-3 * (5.0 / (n + 5.0)));
      restart_estimator();
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

 private:
  static constexpr int kInitBuffer = 75;
  static constexpr int kTermBuffer = 50;
  static constexpr int kBaseWindow = 25;

  bool in_window() const {
    return counter_ >= init_buffer_ && counter_ < warmup_ - term_buffer_ && counter_ != warmup_;
  }

  void add_sample(const Eigen::VectorXd& q) {
    ++count_;
    const Eigen::VectorXd delta = q - mean_;
    mean_ += delta / double(count_);
    m2_ += delta.cwiseProduct(q - mean_);
  }

  void restart_estimator() {
    count_ = 0;
    mean_.setZero(dim_);
    m2_.setZero(dim_);
  }

  void compute_next_window() {
    if (next_window_ == warmup_ - term_buffer_ - 1) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != warmup_ - term_buffer_ - 1) {
      const int boundary = next_window_ + 2 * window_size_;
      if (boundary >= warmup_ - term_buffer_) next_window_ = warmup_ - term_buffer_ - 1;
    }
  }

  Index dim_;
  int warmup_;
  bool enabled_ = true;
  int init_buffer_ = kInitBuffer;
  int term_buffer_ = kTermBuffer;
  int base_window_ = kBaseWindow;
  int window_size_ = 0;
  int next_window_ = 0;
  int counter_ = 0;
  long count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

struct TransitionInfo {
  double accept_stat = 0.0;
  int depth = 0;
  int leapfrogs = 0;
  bool divergent = false;
};

// Multinomial no-U-turn transitions with the generalized turning criterion
// checked across subtree boundaries.
class NutsChain {
 public:
  NutsChain(const LogDensityFunction& f, Index dim, int max_depth, Rng& rng)
      : f_(f), rng_(rng), max_depth_(max_depth), inv_mass_(Eigen::VectorXd::Ones(dim)) {}

  Eigen::VectorXd& inverse_mass() { return inv_mass_; }
  double stepsize() const { return stepsize_; }
  void set_stepsize(double eps) { stepsize_ = eps; }

  void evaluate(PhasePoint& z) const {
    z.grad.resize(z.q.size());
    z.log_density = f_(z.q, z.grad);
    if (!std::isfinite(z.log_density) || !z.grad.allFinite()) {
      z.log_density = kNegInf;
    }
  }

  double hamiltonian(const PhasePoint& z) const {
    const double h = -z.log_density + 0.5 * z.p.cwiseAbs2().dot(inv_mass_);
    return std::isnan(h) ? std::numeric_limits<double>::infinity() : h;
  }

  void sample_momentum(PhasePoint& z) {
    z.p.resize(z.q.size());
    for (Index i = 0; i < z.p.size(); ++i) z.p[i] = rng_.normal() / std::sqrt(inv_mass_[i]);
  }

  void evolve(PhasePoint& z, double eps) const {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_mass_.cwiseProduct(z.p);
    evaluate(z);
    if (z.log_density == kNegInf) return;
    z.p += 0.5 * eps * z.grad;
  }

  Eigen::VectorXd sharp(const Eigen::VectorXd& p) const { return inv_mass_.cwiseProduct(p); }

  /// Heuristic initial step size: double or halve until the one-step
  /// acceptance probability crosses 0.8.
  void init_stepsize(PhasePoint& z) {
    const PhasePoint start = z;
    sample_momentum(z);
    double h0 = hamiltonian(z);
    evolve(z, stepsize_);
    const double log_threshold = std::log(0.8);
    const int direction = (h0 - hamiltonian(z)) > log_threshold ? 1 : -1;
    z = start;
    for (;;) {
      sample_momentum(z);
      h0 = hamiltonian(z);
      evolve(z, stepsize_);
      const double delta = h0 - hamiltonian(z);
      z = start;
      if (direction == 1 && !(delta > log_threshold)) break;
      if (direction == -1 && !(delta < log_threshold)) break;
      stepsize_ = direction == 1 ? 2.0 * stepsize_ : 0.5 * stepsize_;
      if (stepsize_ > 1e7) {
        throw Error(ErrorKind::sampler_failure,
                    "step size diverged during initialization; the posterior may be improper");
      }
      if (stepsize_ == 0.0) {
        throw Error(ErrorKind::sampler_failure,
                    "step size collapsed to zero during initialization; check the model "
                    "parameterization");
      }
    }
  }

  TransitionInfo transition(PhasePoint& z) {
    sample_momentum(z);
    const double h0 = hamiltonian(z);

    PhasePoint z_fwd = z, z_bck = z, z_sample = z, z_propose = z;
    Eigen::VectorXd p_fwd_fwd = z.p, p_sharp_fwd_fwd = sharp(z.p);
    Eigen::VectorXd p_fwd_bck = z.p, p_sharp_fwd_bck = p_sharp_fwd_fwd;
    Eigen::VectorXd p_bck_fwd = z.p, p_sharp_bck_fwd = p_sharp_fwd_fwd;
    Eigen::VectorXd p_bck_bck = z.p, p_sharp_bck_bck = p_sharp_fwd_fwd;
    Eigen::VectorXd rho = z.p;

    double log_sum_weight = 0.0;
    TransitionInfo info;
    divergent_ = false;
    leapfrogs_ = 0;
    sum_metro_prob_ = 0.0;
    const Index dim = z.q.size();

    while (info.depth < max_depth_) {
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(dim);
      Eigen::VectorXd rho_bck = Eigen::VectorXd::Zero(dim);
      double log_sum_weight_subtree = kNegInf;
      bool valid;
      if (rng_.uniform() > 0.5) {
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        PhasePoint& edge = z_fwd;
        valid = build_tree(info.depth, edge, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd,
                           p_fwd_bck, p_fwd_fwd, h0, 1.0, log_sum_weight_subtree);
      } else {
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        PhasePoint& edge = z_bck;
        valid = build_tree(info.depth, edge, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck,
                           p_bck_fwd, p_bck_bck, h0, -1.0, log_sum_weight_subtree);
      }
      if (!valid) break;
      ++info.depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (rng_.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = turning_ok(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && turning_ok(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && turning_ok(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }

    info.leapfrogs = leapfrogs_;
    info.divergent = divergent_;
    info.accept_stat = leapfrogs_ > 0 ? sum_metro_prob_ / double(leapfrogs_) : 0.0;
    z = z_sample;
    return info;
  }

 private:
  static bool turning_ok(const Eigen::VectorXd& p_sharp_minus, const Eigen::VectorXd& p_sharp_plus,
                         const Eigen::VectorXd& rho) {
    return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
  }

  // `z` is the trajectory edge being extended; on return it is the new edge.
  bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, Eigen::VectorXd& p_sharp_beg,
                  Eigen::VectorXd& p_sharp_end, Eigen::VectorXd& rho, Eigen::VectorXd& p_beg,
                  Eigen::VectorXd& p_end, double h0, double sign, double& log_sum_weight) {
    if (depth == 0) {
      evolve(z, sign * stepsize_);
      ++leapfrogs_;
      const double h = hamiltonian(z);
      if (h - h0 > kMaxEnergyError) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro_prob_ += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
      z_propose = z;
      p_sharp_beg = sharp(z.p);
      p_sharp_end = p_sharp_beg;
      rho += z.p;
      p_beg = z.p;
      p_end = p_beg;
      return !divergent_;
    }

    const Index dim = z.q.size();
    Eigen::VectorXd p_sharp_init_end(dim), p_init_end(dim);
    Eigen::VectorXd rho_init = Eigen::VectorXd::Zero(dim);
    double log_sum_weight_init = kNegInf;
    if (!build_tree(depth - 1, z, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                    p_init_end, h0, sign, log_sum_weight_init)) {
      return false;
    }

    PhasePoint z_propose_final = z;
    Eigen::VectorXd p_sharp_final_beg(dim), p_final_beg(dim);
    Eigen::VectorXd rho_final = Eigen::VectorXd::Zero(dim);
    double log_sum_weight_final = kNegInf;
    if (!build_tree(depth - 1, z, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                    p_final_beg, p_end, h0, sign, log_sum_weight_final)) {
      return false;
    }

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (rng_.uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = turning_ok(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && turning_ok(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
    persist = persist && turning_ok(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
    return persist;
  }

  const LogDensityFunction& f_;
  Rng& rng_;
  int max_depth_;
  Eigen::VectorXd inv_mass_;
  double stepsize_ = 1.0;
  bool divergent_ = false;
  int leapfrogs_ = 0;
  double sum_metro_prob_ = 0.0;
};

struct ChainResult {
  Eigen::MatrixXd draws;
  ChainStats stats;
};

ChainResult run_chain(const LogDensityFunction& f, Index dim, const SamplerConfig& config,
                      int chain_index) {
  Rng rng(config.seed, std::uint64_t(chain_index) + 1);
  NutsChain nuts(f, dim, config.max_tree_depth, rng);

  PhasePoint z;
  constexpr int kInitAttempts = 100;
  bool initialized = false;
  for (int attempt = 0; attempt < kInitAttempts && !initialized; ++attempt) {
    z.q.resize(dim);
    for (Index i = 0; i < dim; ++i) z.q[i] = rng.uniform(-2.0, 2.0);
    nuts.evaluate(z);
    initialized = z.log_density != kNegInf;
  }
  if (!initialized) {
    throw Error(ErrorKind::sampler_failure,
                "chain " + std::to_string(chain_index + 1) +
                    ": no finite log density found from Uniform(-2, 2) initializations");
  }

  nuts.init_stepsize(z);
  StepsizeAdapter stepsize_adapter(config.target_accept);
  stepsize_adapter.restart(nuts.stepsize());
  MassAdapter mass_adapter(dim, config.warmup);

  ChainResult out;
  out.draws.resize(config.draws, dim);
  double accept_sum = 0.0;
  double depth_sum = 0.0;
  for (int it = 0; it < config.warmup; ++it) {
    const TransitionInfo info = nuts.transition(z);
    out.stats.leapfrog_steps += info.leapfrogs;
    if (info.divergent) ++out.stats.warmup_divergences;
    nuts.set_stepsize(stepsize_adapter.learn(info.accept_stat));
    if (mass_adapter.learn(nuts.inverse_mass(), z.q)) {
      nuts.init_stepsize(z);
      stepsize_adapter.restart(nuts.stepsize());
    }
  }
  if (out.stats.warmup_divergences == config.warmup) {
    throw Error(ErrorKind::sampler_failure,
                "chain " + std::to_string(chain_index + 1) +
                    ": every warmup transition diverged; lower the step size by raising "
                    "target_accept or check the model parameterization");
  }
  nuts.set_stepsize(stepsize_adapter.final_stepsize());

  for (int it = 0; it < config.draws; ++it) {
    const TransitionInfo info = nuts.transition(z);
    out.stats.leapfrog_steps += info.leapfrogs;
    if (info.divergent) ++out.stats.divergences;
    accept_sum += info.accept_stat;
    depth_sum += info.depth;
    out.draws.row(it) = z.q.transpose();
  }
  out.stats.step_size = nuts.stepsize();
  out.stats.mean_accept = accept_sum / config.draws;
  out.stats.mean_tree_depth = depth_sum / config.draws;
  out.stats.inverse_mass = nuts.inverse_mass();
  return out;
}

}  // namespace

PosteriorDraws sample(const LogDensityFunction& log_density, Index dim,
                      std::vector<std::string> names, const SamplerConfig& config) {
  config.validate();
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "sampler needs dimension >= 1");
  if (Index(names.size()) != dim) {
    throw Error(ErrorKind::dimension_mismatch, "parameter name count differs from dimension");
  }

  std::vector<ChainResult> results(std::size_t(config.chains));
  std::vector<std::exception_ptr> errors(std::size_t(config.chains));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int c = next++; c < config.chains; c = next++) {
      try {
        results[std::size_t(c)] = run_chain(log_density, dim, config, c);
      } catch (...) {
        errors[std::size_t(c)] = std::current_exception();
      }
    }
  };
  const int workers = std::min(config.threads, config.chains);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<Eigen::MatrixXd> chains;
  std::vector<ChainStats> stats;
  for (auto& r : results) {
    chains.push_back(std::move(r.draws));
    stats.push_back(std::move(r.stats));
  }
  PosteriorDraws draws(std::move(chains), std::move(names));
  draws.stats = std::move(stats);
  draws.rng_name = std::string(Rng::kName);
  return draws;
}

PosteriorDraws sample(const PosteriorModel& model, const SamplerConfig& config) {
  const LogDensityFunction f = [&model](const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
    return model.log_density_gradient(q, grad);
  };
  return sample(f, model.dim(), model.layout().names, config);
}

PosteriorDraws sample(const ModelSpec& spec, const Dataset& data, const SamplerConfig& config) {
  const PosteriorModel model(spec, data);
  return sample(model, config);
}

}  // namespace lncass
