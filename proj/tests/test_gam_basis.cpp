#include <doctest.h>

#include "lncass/gam_basis.hpp"
#include "support.hpp"

using namespace lncass;

TEST_SUITE("gam_basis") {

TEST_CASE("hinge basis values") {
  CHECK(phi(0.3, 0.5) == 0.0);
  CHECK(phi(0.5, 0.5) == 0.0);
  for (double k : {0.0, 0.2, 0.5, 0.9}) CHECK(phi(1.0, k) == doctest::Approx(1.0).epsilon(1e-15));
  for (double x : {0.0, 0.13, 0.5, 0.77, 1.0}) CHECK(phi(x, 0.0) == x);
  CHECK(phi(0.75, 0.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(phi(1.2, 0.0), Error);
  CHECK_THROWS_AS(phi(-0.1, 0.0), Error);
}

TEST_CASE("knot grids") {
  const KnotGrid grid = KnotGrid::equally_spaced(4);
  REQUIRE(grid.size() == 4);
  CHECK(grid[0] == 0.0);
  CHECK(grid[1] == 0.25);
  CHECK(grid[3] == 0.75);
  CHECK_THROWS_AS(KnotGrid({0.1, 0.5}), Error);
  CHECK_THROWS_AS(KnotGrid({0.0, 0.5, 0.5}), Error);
  CHECK_THROWS_AS(KnotGrid({0.0, 1.0}), Error);
  CHECK_THROWS_AS(KnotGrid::equally_spaced(0), Error);
}

TEST_CASE("design expansion") {
  Rng rng(3);
  Eigen::MatrixXd X(6, 3);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 3; ++j) X(i, j) = rng.uniform();
  CHECK(expand_design(X, KnotGrid({0.0})) == X);

  Eigen::MatrixXd single(1, 1);
  single << 0.75;
  const Eigen::MatrixXd row = expand_design(single, KnotGrid({0.0, 0.5}));
  REQUIRE(row.cols() == 2);
  CHECK(row(0, 0) == 0.75);
  CHECK(row(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

  CHECK(expand_design(Eigen::MatrixXd::Zero(4, 2), KnotGrid::equally_spaced(3)).isZero());

  const KnotGrid grid = KnotGrid::equally_spaced(3);
  const Eigen::MatrixXd big = expand_design(X, grid);
  REQUIRE(big.cols() == 9);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index k = 0; k < 3; ++k) CHECK(big(i, j * 3 + k) == phi(X(i, j), grid[k]));

  X(2, 1) = 1.5;
  CHECK_THROWS_AS(expand_design(X, grid), Error);
}

TEST_CASE("function reconstruction") {
  const KnotGrid grid = KnotGrid::equally_spaced(4);
  Eigen::VectorXd xs(5);
  xs << 0.0, 0.2, 0.5, 0.8, 1.0;
  CHECK(reconstruct_f(Eigen::VectorXd::Zero(4), grid, xs).isZero());
  Eigen::VectorXd linear = Eigen::VectorXd::Zero(4);
  linear[0] = 1.0;
  CHECK(reconstruct_f(linear, grid, xs).isApprox(xs));

  Eigen::VectorXd w(2), q(1);
  w << 1.0, 1.0;
  q << 0.75;
  CHECK(reconstruct_f(w, KnotGrid({0.0, 0.5}), q)[0] == doctest::Approx(1.25));
  CHECK_THROWS_AS(reconstruct_f(w, grid, xs), Error);
}

}  // TEST_SUITE
