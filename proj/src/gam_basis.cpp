#include "lncass/gam_basis.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "lncass/error.hpp"

namespace lncass {

void validate_knots(std::span<const double> knots) {
  if (knots.empty()) {
    throw Error(ErrorKind::invalid_argument, "knot grid is empty");
  }
  if (knots[0] != 0.0) {
    throw Error(ErrorKind::invalid_argument, "first knot must be exactly 0");
  }
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (!(knots[k] >= 0.0 && knots[k] < 1.0)) {
      throw Error(ErrorKind::out_of_range,
                  "knot " + std::to_string(k + 1) + " lies outside [0, 1)");
    }
    if (k > 0 && !(knots[k] > knots[k - 1])) {
      throw Error(ErrorKind::invalid_argument, "knots must be strictly increasing");
    }
  }
}

KnotGrid::KnotGrid(std::vector<double> knots) : knots_(std::move(knots)) {
  validate_knots(knots_);
}

KnotGrid KnotGrid::equally_spaced(Index count) {
  if (count < 1) {
    throw Error(ErrorKind::invalid_argument, "knot count must be at least 1");
  }
  std::vector<double> knots(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    knots[std::size_t(k)] = double(k) / double(count);
  }
  return KnotGrid(std::move(knots));
}

double phi(double x, double knot) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorKind::out_of_range,
                "basis input " + std::to_string(x) + " is outside [0, 1]; scale covariates first");
  }
  if (!(knot >= 0.0 && knot < 1.0)) {
    throw Error(ErrorKind::out_of_range, "knot " + std::to_string(knot) + " is outside [0, 1)");
  }
  return x <= knot ? 0.0 : (x - knot) / (1.0 - knot);
}

Eigen::MatrixXd expand_design(const Eigen::MatrixXd& X, const KnotGrid& grid) {
  std::ostringstream bad;
  Index bad_count = 0;
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index i = 0; i < X.rows(); ++i) {
      const double x = X(i, j);
      if (!(x >= 0.0 && x <= 1.0)) {
        if (bad_count < 10) {
          bad << (bad_count ? ", " : "") << "(" << i + 1 << "," << j + 1 << ")=" << x;
        }
        ++bad_count;
      }
    }
  }
  if (bad_count > 0) {
    throw Error(ErrorKind::out_of_range,
                "expand_design: " + std::to_string(bad_count) +
                    " cell(s) outside [0, 1] (row,col): " + bad.str() +
                    (bad_count > 10 ? ", ..." : ""));
  }
  const Index m = grid.size();
  Eigen::MatrixXd out(X.rows(), X.cols() * m);
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index k = 0; k < m; ++k) {
      const double knot = grid[k];
      const double width = 1.0 - knot;
      out.col(j * m + k) =
          X.col(j).unaryExpr([=](double x) { return x <= knot ? 0.0 : (x - knot) / width; });
    }
  }
  return out;
}

Eigen::VectorXd reconstruct_f(const Eigen::VectorXd& weights, const KnotGrid& grid,
                              const Eigen::VectorXd& query_points) {
  if (weights.size() != grid.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "reconstruct_f: " + std::to_string(weights.size()) + " weights for " +
                    std::to_string(grid.size()) + " knots");
  }
  Eigen::VectorXd f = Eigen::VectorXd::Zero(query_points.size());
  for (Index q = 0; q < query_points.size(); ++q) {
    for (Index k = 0; k < grid.size(); ++k) {
      f[q] += weights[k] * phi(query_points[q], grid[k]);
    }
  }
  return f;
}

}  // namespace lncass
