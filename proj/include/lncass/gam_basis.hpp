#pragma once

#include <span>
#include <vector>

#include "lncass/types.hpp"

namespace lncass {

/// Knots x_1 < ... < x_M on [0, 1) with x_1 = 0, so basis element 1 is the
/// identity and a covariate whose higher weights vanish has a linear effect.
class KnotGrid {
 public:
  explicit KnotGrid(std::vector<double> knots);

  /// M equally spaced knots (k - 1) / M.
  static KnotGrid equally_spaced(Index count);

  Index size() const { return Index(knots_.size()); }
  double operator[](Index k) const { return knots_[std::size_t(k)]; }
  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<double> knots_;
};

/// Checks the KnotGrid invariants; throws Error on violation.
void validate_knots(std::span<const double> knots);

/// Hinge basis element: 0 for x <= knot, (x - knot) / (1 - knot) above.
double phi(double x, double knot);

/// Column-blocked expansion of an n x p matrix on [0,1]: column i*M + k holds
/// phi(x_i, knot_k) (covariate-major, knot-minor).
Eigen::MatrixXd expand_design(const Eigen::MatrixXd& X, const KnotGrid& grid);

/// f(x) = sum_k weights[k] * phi(x, knot_k) at each query point.
Eigen::VectorXd reconstruct_f(const Eigen::VectorXd& weights, const KnotGrid& grid,
                              const Eigen::VectorXd& query_points);

}  // namespace lncass
