#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lncass/dataset.hpp"
#include "lncass/error.hpp"
#include "lncass/math.hpp"
#include "lncass/random.hpp"
#include "lncass/types.hpp"

namespace lncass {

enum class Likelihood { gaussian_linear, bernoulli_logit };
enum class PriorKind { lncass_basic, lncass_grouped, lncass_gam, horseshoe };
/// How slab coefficients are stored in the parameter vector. Centered stores
/// theta directly; non-centered stores z with theta = scale * z, which
/// removes the funnel between theta and its shrinkage scale. Both define the
/// same posterior over the regression coefficients.
enum class Parameterization { centered, noncentered };

const char* to_string(Likelihood likelihood);
const char* to_string(PriorKind prior);
const char* to_string(Parameterization parameterization);
/// Accepts the CLI spellings ("linear", "logistic") as well as the full names.
Likelihood parse_likelihood(std::string_view text);
PriorKind parse_prior(std::string_view text);
Parameterization parse_parameterization(std::string_view text);

/// Fixed hyperparameters of the LN-CASS family.
///
/// `mu_lambda` and `sigma_lambda` are the logit-normal location and spread.
/// Optional per-covariate overrides apply to the covariate-level lambda_tilde
/// entries (for the GAM prior, to every basis weight of that covariate);
/// group-level entries always use the scalar values.
struct HyperParams {
  double tau = 5.0;
  double mu_lambda = 0.0;
  double sigma_lambda = 10.0;
  double intercept_sd = 10.0;
  double noise_scale_sd = 5.0;
  Eigen::VectorXd mu_lambda_per_covariate;
  Eigen::VectorXd sigma_lambda_per_covariate;

  /// mu_lambda = logit(a) for a prior inclusion probability a in (0, 1).
  static HyperParams with_inclusion_probability(double a);

  double mu(Index covariate) const {
    return mu_lambda_per_covariate.size() ? mu_lambda_per_covariate[covariate] : mu_lambda;
  }
  double sigma(Index covariate) const {
    return sigma_lambda_per_covariate.size() ? sigma_lambda_per_covariate[covariate]
                                             : sigma_lambda;
  }

  /// p is the covariate count the overrides must match (if present).
  void validate(Index p) const;
};

struct ModelSpec {
  Likelihood likelihood = Likelihood::gaussian_linear;
  PriorKind prior = PriorKind::lncass_basic;
  /// Zero-based group index per covariate; required for lncass_grouped.
  std::vector<int> groups;
  /// Knot grid for lncass_gam: strictly increasing, first knot 0, all in [0,1).
  std::vector<double> knots;
  HyperParams hyper;
  Parameterization parameterization = Parameterization::noncentered;
  Index p = 0;
  Index n = 0;

  Index num_groups() const;
  Index basis_size() const { return prior == PriorKind::lncass_gam ? Index(knots.size()) : 1; }
  void validate() const;
};

/// Offsets of each parameter block inside the flat unconstrained vector.
///
/// Block order: [theta_group, lambda_tilde_group] (grouped only), theta (or
/// omega for the GAM, covariate-major / knot-minor), lambda_tilde (or
/// log_lambda for the horseshoe), alpha, log_sigma (gaussian only).
///
/// alpha is the intercept of the column-centered design. The model intercept
/// is alpha - mean(design) * beta and carries the intercept prior, so this is
/// an exact change of variables that decorrelates alpha from the slab.
struct ParameterLayout {
  explicit ParameterLayout(const ModelSpec& spec);

  Index dim = 0;
  Index num_groups = 0;
  Index theta_group = -1;
  Index lambda_group = -1;
  Index theta = 0;
  Index lambda = 0;
  Index coefficient_count = 0;  // length of the theta and lambda blocks
  Index intercept = 0;  // slot of alpha
  Index log_sigma = -1;
  std::vector<std::string> names;
};

struct ParameterVector {
  Eigen::VectorXd values;
  std::vector<std::string> names;
};

struct LogDensityResult {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

// ---------------------------------------------------------------------------
// Prior log densities on the unconstrained scale. Templated on the Eigen
// expression so they accept blocks, maps and segments without copies.
// ---------------------------------------------------------------------------

template <typename DerivedTheta, typename DerivedLambda>
typename DerivedTheta::Scalar log_prior_lncass_basic(
    const Eigen::MatrixBase<DerivedTheta>& theta,
    const Eigen::MatrixBase<DerivedLambda>& lambda_tilde, const HyperParams& hyper) {
  using Scalar = typename DerivedTheta::Scalar;
  if (theta.size() != lambda_tilde.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "log_prior_lncass_basic: theta has length " + std::to_string(theta.size()) +
                    " but lambda_tilde has length " + std::to_string(lambda_tilde.size()));
  }
  const Scalar log_tau = std::log(Scalar(hyper.tau));
  Scalar total(0);
  for (Index i = 0; i < theta.size(); ++i) {
    const Scalar lt = lambda_tilde(i);
    const Scalar log_scale = log_inv_logit(lt) + log_tau;
    const Scalar z = theta(i) * std::exp(-log_scale);
    total += -Scalar(kHalfLogTwoPi) - log_scale - Scalar(0.5) * z * z;
    total += log_normal_density<Scalar>(lt, Scalar(hyper.mu(i)), Scalar(hyper.sigma(i)));
  }
  return total;
}

/// `groups[i]` is the zero-based group of covariate i. The regression
/// coefficient of covariate i is theta_group[groups[i]] + theta[i].
template <typename DerivedTG, typename DerivedLG, typename DerivedT, typename DerivedL>
typename DerivedT::Scalar log_prior_lncass_grouped(
    const Eigen::MatrixBase<DerivedTG>& theta_group,
    const Eigen::MatrixBase<DerivedLG>& lambda_tilde_group,
    const Eigen::MatrixBase<DerivedT>& theta, const Eigen::MatrixBase<DerivedL>& lambda_tilde,
    std::span<const int> groups, const HyperParams& hyper) {
  using Scalar = typename DerivedT::Scalar;
  if (theta_group.size() != lambda_tilde_group.size() || theta.size() != lambda_tilde.size() ||
      Index(groups.size()) != theta.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "log_prior_lncass_grouped: inconsistent lengths (theta_group " +
                    std::to_string(theta_group.size()) + ", lambda_tilde_group " +
                    std::to_string(lambda_tilde_group.size()) + ", theta " +
                    std::to_string(theta.size()) + ", lambda_tilde " +
                    std::to_string(lambda_tilde.size()) + ", groups " +
                    std::to_string(groups.size()) + ")");
  }
  const Scalar log_tau = std::log(Scalar(hyper.tau));
  Scalar total(0);
  for (Index g = 0; g < theta_group.size(); ++g) {
    const Scalar lt = lambda_tilde_group(g);
    const Scalar log_scale = log_inv_logit(lt) + log_tau;
    const Scalar z = theta_group(g) * std::exp(-log_scale);
    total += -Scalar(kHalfLogTwoPi) - log_scale - Scalar(0.5) * z * z;
    total += log_normal_density<Scalar>(lt, Scalar(hyper.mu_lambda), Scalar(hyper.sigma_lambda));
  }
  for (Index i = 0; i < theta.size(); ++i) {
    const int g = groups[i];
    if (g < 0 || g >= theta_group.size()) {
      throw Error(ErrorKind::invalid_argument,
                  "log_prior_lncass_grouped: covariate " + std::to_string(i + 1) +
                      " has no valid group assignment (got " + std::to_string(g) + ")");
    }
    const Scalar lt = lambda_tilde(i);
    const Scalar log_scale = log_inv_logit(Scalar(lambda_tilde_group(g))) + log_inv_logit(lt) + log_tau;
    const Scalar z = theta(i) * std::exp(-log_scale);
    total += -Scalar(kHalfLogTwoPi) - log_scale - Scalar(0.5) * z * z;
    total += log_normal_density<Scalar>(lt, Scalar(hyper.mu(i)), Scalar(hyper.sigma(i)));
  }
  return total;
}

/// omega and lambda_tilde are M x p: row k holds basis weight k of every
/// covariate. Row 0 is the linear term and gates the remaining rows.
template <typename DerivedW, typename DerivedL>
typename DerivedW::Scalar log_prior_lncass_gam(const Eigen::MatrixBase<DerivedW>& omega,
                                               const Eigen::MatrixBase<DerivedL>& lambda_tilde,
                                               const HyperParams& hyper) {
  using Scalar = typename DerivedW::Scalar;
  if (omega.rows() != lambda_tilde.rows() || omega.cols() != lambda_tilde.cols()) {
    throw Error(ErrorKind::dimension_mismatch,
                "log_prior_lncass_gam: omega is " + std::to_string(omega.rows()) + "x" +
                    std::to_string(omega.cols()) + " but lambda_tilde is " +
                    std::to_string(lambda_tilde.rows()) + "x" +
                    std::to_string(lambda_tilde.cols()));
  }
  const Scalar log_tau = std::log(Scalar(hyper.tau));
  Scalar total(0);
  for (Index i = 0; i < omega.cols(); ++i) {
    const Scalar log_gate = log_inv_logit(Scalar(lambda_tilde(0, i)));
    for (Index k = 0; k < omega.rows(); ++k) {
      const Scalar lt = lambda_tilde(k, i);
      const Scalar log_scale = k == 0 ? log_gate + log_tau : log_gate + log_inv_logit(lt) + log_tau;
      const Scalar z = omega(k, i) * std::exp(-log_scale);
      total += -Scalar(kHalfLogTwoPi) - log_scale - Scalar(0.5) * z * z;
      total += log_normal_density<Scalar>(lt, Scalar(hyper.mu(i)), Scalar(hyper.sigma(i)));
    }
  }
  return total;
}

/// Horseshoe baseline: theta_i ~ N(0, (lambda_i tau)^2), lambda_i ~ C+(0, 1),
/// sampled as aux_i = log(lambda_i) with the log-Jacobian included.
template <typename DerivedTheta, typename DerivedAux>
typename DerivedTheta::Scalar log_prior_horseshoe(const Eigen::MatrixBase<DerivedTheta>& theta,
                                                  const Eigen::MatrixBase<DerivedAux>& aux,
                                                  const HyperParams& hyper) {
  using Scalar = typename DerivedTheta::Scalar;
  if (theta.size() != aux.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "log_prior_horseshoe: theta has length " + std::to_string(theta.size()) +
                    " but aux has length " + std::to_string(aux.size()));
  }
  const Scalar log_tau = std::log(Scalar(hyper.tau));
  const Scalar log_two_over_pi = std::log(Scalar(2) / Scalar(std::numbers::pi));
  Scalar total(0);
  for (Index i = 0; i < theta.size(); ++i) {
    const Scalar a = aux(i);
    const Scalar log_scale = a + log_tau;
    const Scalar z = theta(i) * std::exp(-log_scale);
    total += -Scalar(kHalfLogTwoPi) - log_scale - Scalar(0.5) * z * z;
    total += log_two_over_pi - softplus(Scalar(2) * a) + a;
  }
  return total;
}

/// Log posterior of a fitted model, with the design matrix (GAM-expanded when
/// needed) and response cached. All member functions are const and reentrant,
/// so one instance can serve several sampler threads.
class PosteriorModel {
 public:
  PosteriorModel(ModelSpec spec, const Dataset& data);

  const ModelSpec& spec() const { return spec_; }
  const ParameterLayout& layout() const { return layout_; }
  Index dim() const { return layout_.dim; }

  double log_likelihood(const Eigen::VectorXd& params) const;
  double log_prior(const Eigen::VectorXd& params) const;
  double log_hyperprior(const Eigen::VectorXd& params) const;
  double log_density(const Eigen::VectorXd& params) const;
  /// Returns the log density and writes its exact gradient into `gradient`.
  double log_density_gradient(const Eigen::VectorXd& params, Eigen::VectorXd& gradient) const;

  /// Effective regression coefficients: theta_group + theta for the grouped
  /// prior, theta otherwise, the flattened omega block for the GAM.
  Eigen::VectorXd coefficients(const Eigen::VectorXd& params) const;
  /// Slab values on the centered scale (theta_group block followed by the
  /// theta / omega block), whatever the stored parameterization.
  Eigen::VectorXd slab_values(const Eigen::VectorXd& params) const;
  /// Intercept on the raw design scale.
  double intercept(const Eigen::VectorXd& params) const;
  /// Linear predictor for raw covariates X (expanded internally for the GAM).
  Eigen::VectorXd linear_predictor(const Eigen::VectorXd& params, const Eigen::MatrixXd& X) const;
  /// The design matrix the coefficients act on: X itself, or its basis
  /// expansion for the GAM. Lets callers expand once and reuse across draws.
  Eigen::MatrixXd design_for(const Eigen::MatrixXd& X) const;

 private:
  void check_params(const Eigen::VectorXd& params) const;
  // Log prior scale of each slab entry, in slab_values order.
  Eigen::VectorXd slab_log_scales(const Eigen::VectorXd& params) const;

  ModelSpec spec_;
  ParameterLayout layout_;
  Eigen::MatrixXd design_;
  Eigen::RowVectorXd design_mean_;
  Eigen::VectorXd y_;
};

double log_likelihood(const ModelSpec& spec, const Dataset& data, const ParameterVector& params);
LogDensityResult log_posterior_with_gradient(const ModelSpec& spec, const Dataset& data,
                                             const ParameterVector& params);

/// Draws lambda = inv_logit(lambda_tilde) from the basic prior for `count`
/// coefficients; used for prior predictive checks of the spike shape.
Eigen::VectorXd draw_prior_inclusion(Index count, const HyperParams& hyper, Rng& rng);

}  // namespace lncass
