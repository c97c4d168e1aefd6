#pragma once

#include <cmath>
#include <numbers>

namespace lncass {

inline constexpr double kHalfLogTwoPi = 0.91893853320467274178;

/// log(1 + exp(x)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x) {
  using std::exp;
  using std::log1p;
  return x > Scalar(0) ? x + log1p(exp(-x)) : log1p(exp(x));
}

template <typename Scalar>
Scalar inv_logit(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + exp(-x));
  }
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

/// log(inv_logit(x)), accurate in both tails.
template <typename Scalar>
Scalar log_inv_logit(Scalar x) {
  return -softplus(-x);
}

template <typename Scalar>
Scalar logit(Scalar p) {
  using std::log;
  return log(p) - log1p(-p);
}

template <typename Scalar>
Scalar log_normal_density(Scalar x, Scalar mean, Scalar sd) {
  using std::log;
  const Scalar z = (x - mean) / sd;
  return -Scalar(kHalfLogTwoPi) - log(sd) - Scalar(0.5) * z * z;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace lncass
