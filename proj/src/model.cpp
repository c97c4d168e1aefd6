#include "lncass/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lncass/gam_basis.hpp"

namespace lncass {

const char* to_string(Likelihood likelihood) {
  switch (likelihood) {
    case Likelihood::gaussian_linear: return "gaussian-linear";
    case Likelihood::bernoulli_logit: return "bernoulli-logit";
  }
  return "unknown";
}

const char* to_string(PriorKind prior) {
  switch (prior) {
    case PriorKind::lncass_basic: return "lncass";
    case PriorKind::lncass_grouped: return "lncass-grouped";
    case PriorKind::lncass_gam: return "lncass-gam";
    case PriorKind::horseshoe: return "horseshoe";
  }
  return "unknown";
}

const char* to_string(Parameterization parameterization) {
  return parameterization == Parameterization::centered ? "centered" : "noncentered";
}

Parameterization parse_parameterization(std::string_view text) {
  if (text == "centered") return Parameterization::centered;
  if (text == "noncentered" || text == "non-centered") return Parameterization::noncentered;
  throw Error(ErrorKind::invalid_argument, "unknown parameterization '" + std::string(text) + "'");
}

Likelihood parse_likelihood(std::string_view text) {
  if (text == "linear" || text == "gaussian-linear") return Likelihood::gaussian_linear;
  if (text == "logistic" || text == "bernoulli-logit") return Likelihood::bernoulli_logit;
  throw Error(ErrorKind::invalid_argument, "unknown model '" + std::string(text) + "'");
}

PriorKind parse_prior(std::string_view text) {
  if (text == "lncass" || text == "lncass-basic") return PriorKind::lncass_basic;
  if (text == "lncass-grouped") return PriorKind::lncass_grouped;
  if (text == "lncass-gam") return PriorKind::lncass_gam;
  if (text == "horseshoe") return PriorKind::horseshoe;
  throw Error(ErrorKind::invalid_argument, "unknown prior '" + std::string(text) + "'");
}

HyperParams HyperParams::with_inclusion_probability(double a) {
  if (!(a > 0.0 && a < 1.0)) {
    throw Error(ErrorKind::out_of_range, "prior inclusion probability must lie in (0, 1)");
  }
  HyperParams hyper;
  hyper.mu_lambda = logit(a);
  return hyper;
}

void HyperParams::validate(Index p) const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(tau)) throw Error(ErrorKind::invalid_argument, "tau must be positive");
  if (!positive(sigma_lambda)) {
    throw Error(ErrorKind::invalid_argument, "sigma_lambda must be positive");
  }
  if (!positive(intercept_sd)) {
    throw Error(ErrorKind::invalid_argument, "intercept_sd must be positive");
  }
  if (!positive(noise_scale_sd)) {
    throw Error(ErrorKind::invalid_argument, "noise_scale_sd must be positive");
  }
  if (!std::isfinite(mu_lambda)) throw Error(ErrorKind::invalid_argument, "mu_lambda must be finite");
  if (mu_lambda_per_covariate.size() && mu_lambda_per_covariate.size() != p) {
    throw Error(ErrorKind::dimension_mismatch,
                "per-covariate mu_lambda has length " +
                    std::to_string(mu_lambda_per_covariate.size()) + ", expected " +
                    std::to_string(p));
  }
  if (sigma_lambda_per_covariate.size()) {
    if (sigma_lambda_per_covariate.size() != p) {
      throw Error(ErrorKind::dimension_mismatch,
                  "per-covariate sigma_lambda has length " +
                      std::to_string(sigma_lambda_per_covariate.size()) + ", expected " +
                      std::to_string(p));
    }
    if (!(sigma_lambda_per_covariate.array() > 0.0).all()) {
      throw Error(ErrorKind::invalid_argument, "per-covariate sigma_lambda must be positive");
    }
  }
}

Index ModelSpec::num_groups() const {
  if (groups.empty()) return 0;
  return Index(*std::max_element(groups.begin(), groups.end())) + 1;
}

void ModelSpec::validate() const {
  if (p < 1) throw Error(ErrorKind::invalid_argument, "model needs at least one covariate");
  hyper.validate(p);
  if (prior == PriorKind::lncass_grouped) {
    if (Index(groups.size()) != p) {
      throw Error(ErrorKind::invalid_argument,
                  "grouped prior needs a group for each of the " + std::to_string(p) +
                      " covariates, got " + std::to_string(groups.size()));
    }
    std::vector<int> members(std::size_t(num_groups()), 0);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i] < 0) {
        throw Error(ErrorKind::invalid_argument,
                    "covariate " + std::to_string(i + 1) + " has no group assignment");
      }
      ++members[std::size_t(groups[i])];
    }
    for (std::size_t g = 0; g < members.size(); ++g) {
      if (members[g] == 0) {
        throw Error(ErrorKind::invalid_argument,
                    "group " + std::to_string(g + 1) + " has no members");
      }
    }
  }
  if (prior == PriorKind::lncass_gam) {
    validate_knots(knots);
  }
}

ParameterLayout::ParameterLayout(const ModelSpec& spec) {
  const Index p = spec.p;
  const Index m = spec.basis_size();
  Index offset = 0;
  if (spec.prior == PriorKind::lncass_grouped) {
    num_groups = spec.num_groups();
    theta_group = offset;
    offset += num_groups;
    lambda_group = offset;
    offset += num_groups;
  }
  coefficient_count = p * m;
  theta = offset;
  offset += coefficient_count;
  lambda = offset;
  offset += coefficient_count;
  intercept = offset++;
  if (spec.likelihood == Likelihood::gaussian_linear) {
    log_sigma = offset++;
  }
  dim = offset;

  names.reserve(std::size_t(dim));
  auto idx = [](Index i) { return std::to_string(i + 1); };
  const std::string raw = spec.parameterization == Parameterization::noncentered ? "z_" : "";
  for (Index g = 0; g < num_groups; ++g) names.push_back(raw + "theta_group[" + idx(g) + "]");
  for (Index g = 0; g < num_groups; ++g) names.push_back("lambda_tilde_group[" + idx(g) + "]");
  if (spec.prior == PriorKind::lncass_gam) {
    for (Index i = 0; i < p; ++i)
      for (Index k = 0; k < m; ++k) names.push_back(raw + "omega[" + idx(k) + "," + idx(i) + "]");
    for (Index i = 0; i < p; ++i)
      for (Index k = 0; k < m; ++k) names.push_back("lambda_tilde[" + idx(k) + "," + idx(i) + "]");
  } else {
    for (Index i = 0; i < p; ++i) names.push_back(raw + "theta[" + idx(i) + "]");
    const char* aux = spec.prior == PriorKind::horseshoe ? "log_lambda[" : "lambda_tilde[";
    for (Index i = 0; i < p; ++i) names.push_back(aux + idx(i) + "]");
  }
  names.push_back("alpha");
  if (log_sigma >= 0) names.push_back("log_sigma");
}

namespace {

// One Gaussian slab term logN(x; 0, exp(log_scale)^2) with its partials.
struct SlabTerm {
  double value;
  double d_x;
  double d_log_scale;
};

inline SlabTerm slab_term(double x, double log_scale) {
  const double inv_scale = std::exp(-log_scale);
  const double z = x * inv_scale;
  return {-kHalfLogTwoPi - log_scale - 0.5 * z * z, -z * inv_scale, z * z - 1.0};
}

inline double logit_normal_term(double lt, double mu, double sigma, double& d_lt) {
  const double z = (lt - mu) / sigma;
  d_lt = -z / sigma;
  return -kHalfLogTwoPi - std::log(sigma) - 0.5 * z * z;
}

}  // namespace

PosteriorModel::PosteriorModel(ModelSpec spec, const Dataset& data)
    : spec_(std::move(spec)), layout_((spec_.validate(), spec_)) {
  if (data.p() != spec_.p) {
    throw Error(ErrorKind::dimension_mismatch,
                "dataset has " + std::to_string(data.p()) + " covariates but the model expects " +
                    std::to_string(spec_.p));
  }
  if (spec_.n != 0 && data.n() != spec_.n) {
    throw Error(ErrorKind::dimension_mismatch,
                "dataset has " + std::to_string(data.n()) + " observations but the model expects " +
                    std::to_string(spec_.n));
  }
  if (data.y.size() != data.n()) {
    throw Error(ErrorKind::dimension_mismatch, "response length does not match the design rows");
  }
  if (!data.X.allFinite() || !data.y.allFinite()) {
    throw Error(ErrorKind::missing_value, "dataset contains missing or non-finite values");
  }
  if (spec_.likelihood == Likelihood::bernoulli_logit) {
    require_binary_response(data);
  }
  spec_.n = data.n();
  design_ = spec_.prior == PriorKind::lncass_gam ? expand_design(data.X, KnotGrid(spec_.knots))
                                                 : data.X;
  design_mean_ = design_.colwise().mean();
  y_ = data.y;
}

void PosteriorModel::check_params(const Eigen::VectorXd& params) const {
  if (params.size() != layout_.dim) {
    throw Error(ErrorKind::dimension_mismatch,
                "parameter vector has length " + std::to_string(params.size()) +
                    ", model dimension is " + std::to_string(layout_.dim));
  }
}

Eigen::VectorXd PosteriorModel::slab_log_scales(const Eigen::VectorXd& params) const {
  const auto& L = layout_;
  const double log_tau = std::log(spec_.hyper.tau);
  Eigen::VectorXd out(L.num_groups + L.coefficient_count);
  for (Index g = 0; g < L.num_groups; ++g) {
    out[g] = log_inv_logit(params[L.lambda_group + g]) + log_tau;
  }
  const Index m = spec_.basis_size();
  for (Index i = 0; i < L.coefficient_count; ++i) {
    const double aux = params[L.lambda + i];
    double ls = 0.0;
    switch (spec_.prior) {
      case PriorKind::lncass_basic:
        ls = log_inv_logit(aux);
        break;
      case PriorKind::lncass_grouped:
        ls = log_inv_logit(params[L.lambda_group + spec_.groups[std::size_t(i)]]) +
             log_inv_logit(aux);
        break;
      case PriorKind::lncass_gam:
        ls = log_inv_logit(params[L.lambda + (i / m) * m]);
        if (i % m != 0) ls += log_inv_logit(aux);
        break;
      case PriorKind::horseshoe:
        ls = aux;
        break;
    }
    out[L.num_groups + i] = ls + log_tau;
  }
  return out;
}

Eigen::VectorXd PosteriorModel::slab_values(const Eigen::VectorXd& params) const {
  check_params(params);
  const auto& L = layout_;
  Eigen::VectorXd x(L.num_groups + L.coefficient_count);
  x.head(L.num_groups) = params.segment(std::max<Index>(L.theta_group, 0), L.num_groups);
  x.tail(L.coefficient_count) = params.segment(L.theta, L.coefficient_count);
  if (spec_.parameterization == Parameterization::noncentered) {
    x.array() *= slab_log_scales(params).array().exp();
  }
  return x;
}

Eigen::VectorXd PosteriorModel::coefficients(const Eigen::VectorXd& params) const {
  const Eigen::VectorXd x = slab_values(params);
  Eigen::VectorXd beta = x.tail(layout_.coefficient_count);
  if (spec_.prior == PriorKind::lncass_grouped) {
    for (Index i = 0; i < beta.size(); ++i) beta[i] += x[spec_.groups[std::size_t(i)]];
  }
  return beta;
}

Eigen::MatrixXd PosteriorModel::design_for(const Eigen::MatrixXd& X) const {
  if (X.cols() != spec_.p) {
    throw Error(ErrorKind::dimension_mismatch,
                "prediction design has " + std::to_string(X.cols()) + " columns, model has " +
                    std::to_string(spec_.p));
  }
  return spec_.prior == PriorKind::lncass_gam ? expand_design(X, KnotGrid(spec_.knots)) : X;
}

double PosteriorModel::intercept(const Eigen::VectorXd& params) const {
  return params[layout_.intercept] - design_mean_.dot(coefficients(params));
}

Eigen::VectorXd PosteriorModel::linear_predictor(const Eigen::VectorXd& params,
                                                 const Eigen::MatrixXd& X) const {
  return (design_for(X) * coefficients(params)).array() + intercept(params);
}

double PosteriorModel::log_likelihood(const Eigen::VectorXd& params) const {
  check_params(params);
  const Eigen::VectorXd eta = (design_ * coefficients(params)).array() + intercept(params);
  if (spec_.likelihood == Likelihood::gaussian_linear) {
    const double log_sigma = params[layout_.log_sigma];
    const double n = double(y_.size());
    return -n * (kHalfLogTwoPi + log_sigma) -
           0.5 * (y_ - eta).squaredNorm() * std::exp(-2.0 * log_sigma);
  }
  double total = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    total += y_[i] * eta[i] - softplus(eta[i]);
  }
  return total;
}

double PosteriorModel::log_prior(const Eigen::VectorXd& params) const {
  const auto& L = layout_;
  // Priors are stated on the centered scale; a non-centered vector adds the
  // log-Jacobian of theta = scale * z.
  const Eigen::VectorXd x = slab_values(params);
  const auto theta_group = x.head(L.num_groups);
  const auto theta = x.tail(L.coefficient_count);
  const auto lambda = params.segment(L.lambda, L.coefficient_count);
  double total = 0.0;
  switch (spec_.prior) {
    case PriorKind::lncass_basic:
      total = log_prior_lncass_basic(theta, lambda, spec_.hyper);
      break;
    case PriorKind::lncass_grouped:
      total = log_prior_lncass_grouped(theta_group, params.segment(L.lambda_group, L.num_groups),
                                       theta, lambda, spec_.groups, spec_.hyper);
      break;
    case PriorKind::lncass_gam: {
      const Index m = spec_.basis_size();
      total = log_prior_lncass_gam(theta.reshaped(m, spec_.p), lambda.reshaped(m, spec_.p),
                                   spec_.hyper);
      break;
    }
    case PriorKind::horseshoe:
      total = log_prior_horseshoe(theta, lambda, spec_.hyper);
      break;
  }
  if (spec_.parameterization == Parameterization::noncentered) {
    total += slab_log_scales(params).sum();
  }
  return total;
}

double PosteriorModel::log_hyperprior(const Eigen::VectorXd& params) const {
  check_params(params);
  double total = log_normal_density(intercept(params), 0.0, spec_.hyper.intercept_sd);
  if (layout_.log_sigma >= 0) {
    const double log_sigma = params[layout_.log_sigma];
    total += std::log(2.0) +
             log_normal_density(std::exp(log_sigma), 0.0, spec_.hyper.noise_scale_sd) + log_sigma;
  }
  return total;
}

double PosteriorModel::log_density(const Eigen::VectorXd& params) const {
  return log_likelihood(params) + log_prior(params) + log_hyperprior(params);
}

double PosteriorModel::log_density_gradient(const Eigen::VectorXd& params,
                                            Eigen::VectorXd& gradient) const {
  check_params(params);
  const auto& L = layout_;
  const HyperParams& hyper = spec_.hyper;
  gradient.setZero(L.dim);

  // Likelihood, via the gradient with respect to the linear predictor.
  const Eigen::VectorXd beta = coefficients(params);
  const double b0 = params[L.intercept] - design_mean_.dot(beta);
  const Eigen::VectorXd eta = (design_ * beta).array() + b0;
  Eigen::VectorXd d_eta(eta.size());
  double value = 0.0;
  if (spec_.likelihood == Likelihood::gaussian_linear) {
    const double log_sigma = params[L.log_sigma];
    const double inv_var = std::exp(-2.0 * log_sigma);
    d_eta = y_ - eta;
    const double rss = d_eta.squaredNorm();
    const double n = double(y_.size());
    value = -n * (kHalfLogTwoPi + log_sigma) - 0.5 * rss * inv_var;
    d_eta *= inv_var;
    gradient[L.log_sigma] += -n + rss * inv_var;
  } else {
    for (Index i = 0; i < eta.size(); ++i) {
      value += y_[i] * eta[i] - softplus(eta[i]);
      d_eta[i] = y_[i] - inv_logit(eta[i]);
    }
  }
  // alpha enters eta and the intercept prior through b0; beta enters both
  // through the centered design.
  const double isd = hyper.intercept_sd;
  value += log_normal_density(b0, 0.0, isd);
  const double d_b0 = d_eta.sum() - b0 / (isd * isd);
  gradient[L.intercept] += d_b0;
  const Eigen::VectorXd d_beta =
      design_.transpose() * d_eta - design_mean_.transpose() * d_b0;

  // Likelihood gradient with respect to the centered slab values.
  const Index groups = L.num_groups;
  Eigen::VectorXd d_x = Eigen::VectorXd::Zero(groups + L.coefficient_count);
  d_x.tail(L.coefficient_count) = d_beta;
  if (spec_.prior == PriorKind::lncass_grouped) {
    for (Index i = 0; i < L.coefficient_count; ++i) d_x[spec_.groups[std::size_t(i)]] += d_beta[i];
  }

  // Slab terms. Each entry's log scale depends on at most two auxiliary
  // parameters; d_ls collects d(log density)/d(log scale).
  const Eigen::VectorXd log_scale = slab_log_scales(params);
  const bool noncentered = spec_.parameterization == Parameterization::noncentered;
  Eigen::VectorXd d_ls(log_scale.size());
  for (Index e = 0; e < log_scale.size(); ++e) {
    const Index slot = e < groups ? L.theta_group + e : L.theta + (e - groups);
    const double stored = params[slot];
    if (noncentered) {
      const double scale = std::exp(log_scale[e]);
      value += -kHalfLogTwoPi - 0.5 * stored * stored;
      gradient[slot] += -stored + d_x[e] * scale;
      d_ls[e] = d_x[e] * stored * scale;
    } else {
      const SlabTerm s = slab_term(stored, log_scale[e]);
      value += s.value;
      gradient[slot] += d_x[e] + s.d_x;
      d_ls[e] = s.d_log_scale;
    }
  }

  // Chain rule from the log scales to the auxiliary parameters, plus their
  // own priors.
  double d_lt = 0.0;
  for (Index g = 0; g < groups; ++g) {
    const Index slot = L.lambda_group + g;
    const double lt = params[slot];
    value += logit_normal_term(lt, hyper.mu_lambda, hyper.sigma_lambda, d_lt);
    gradient[slot] += d_lt + d_ls[g] * inv_logit(-lt);
  }
  const Index m = spec_.basis_size();
  const double log_two_over_pi = std::log(2.0 / std::numbers::pi);
  for (Index i = 0; i < L.coefficient_count; ++i) {
    const Index slot = L.lambda + i;
    const double aux = params[slot];
    const double d = d_ls[groups + i];
    switch (spec_.prior) {
      case PriorKind::lncass_basic:
        value += logit_normal_term(aux, hyper.mu(i), hyper.sigma(i), d_lt);
        gradient[slot] += d_lt + d * inv_logit(-aux);
        break;
      case PriorKind::lncass_grouped: {
        const Index g = L.lambda_group + spec_.groups[std::size_t(i)];
        value += logit_normal_term(aux, hyper.mu(i), hyper.sigma(i), d_lt);
        gradient[slot] += d_lt + d * inv_logit(-aux);
        gradient[g] += d * inv_logit(-params[g]);
        break;
      }
      case PriorKind::lncass_gam: {
        const Index covariate = i / m;
        const Index gate = L.lambda + covariate * m;
        value += logit_normal_term(aux, hyper.mu(covariate), hyper.sigma(covariate), d_lt);
        gradient[slot] += d_lt;
        gradient[gate] += d * inv_logit(-params[gate]);
        if (i % m != 0) gradient[slot] += d * inv_logit(-aux);
        break;
      }
      case PriorKind::horseshoe:
        // d/da of [-log(1 + e^{2a}) + a] is 1 - 2 inv_logit(2a).
        value += log_two_over_pi - softplus(2.0 * aux) + aux;
        gradient[slot] += d + 1.0 - 2.0 * inv_logit(2.0 * aux);
        break;
    }
  }

  // Noise-scale hyperprior.
  if (L.log_sigma >= 0) {
    const double log_sigma = params[L.log_sigma];
    const double sigma = std::exp(log_sigma);
    const double s = hyper.noise_scale_sd;
    value += std::log(2.0) + log_normal_density(sigma, 0.0, s) + log_sigma;
    gradient[L.log_sigma] += -(sigma * sigma) / (s * s) + 1.0;
  }
  return value;
}

namespace {

void check_names(const ParameterLayout& layout, const ParameterVector& params) {
  if (params.values.size() != layout.dim) {
    throw Error(ErrorKind::dimension_mismatch,
                "parameter vector has length " + std::to_string(params.values.size()) +
                    ", model dimension is " + std::to_string(layout.dim));
  }
  if (!params.names.empty() && params.names != layout.names) {
    throw Error(ErrorKind::invalid_argument, "parameter names do not match the model layout");
  }
  if (!params.values.allFinite()) {
    throw Error(ErrorKind::invalid_argument, "parameter vector has non-finite entries");
  }
}

}  // namespace

double log_likelihood(const ModelSpec& spec, const Dataset& data, const ParameterVector& params) {
  const PosteriorModel model(spec, data);
  check_names(model.layout(), params);
  return model.log_likelihood(params.values);
}

LogDensityResult log_posterior_with_gradient(const ModelSpec& spec, const Dataset& data,
                                             const ParameterVector& params) {
  const PosteriorModel model(spec, data);
  check_names(model.layout(), params);
  LogDensityResult result;
  result.value = model.log_density_gradient(params.values, result.gradient);
  return result;
}

Eigen::VectorXd draw_prior_inclusion(Index count, const HyperParams& hyper, Rng& rng) {
  Eigen::VectorXd lambda(count);
  for (Index i = 0; i < count; ++i) {
    lambda[i] = inv_logit(rng.normal(hyper.mu_lambda, hyper.sigma_lambda));
  }
  return lambda;
}

}  // namespace lncass
