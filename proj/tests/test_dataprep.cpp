#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <fstream>
#include <set>

#include "lncass/dataprep.hpp"
#include "support.hpp"

using namespace lncass;
using lncass::testing::scratch_dir;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

Dataset matrix_dataset(const Eigen::MatrixXd& X) {
  Dataset data;
  data.X = X;
  data.y = Eigen::VectorXd::Zero(X.rows());
  for (Index j = 0; j < X.cols(); ++j) data.column_names.push_back("c" + std::to_string(j));
  return data;
}

Eigen::VectorXd labels_of(std::initializer_list<double> values) {
  Eigen::VectorXd y(Index(values.size()));
  Index i = 0;
  for (double v : values) y[i++] = v;
  return y;
}

}  // namespace

TEST_SUITE("dataprep") {

TEST_CASE("csv loading") {
  const auto dir = scratch_dir("csv");
  write_text(dir / "a.csv", "a,b,y\n1,2,0\n3,4.5,1\n-1,0,1\n");
  const Dataset d = load_csv(dir / "a.csv", "y");
  CHECK(d.X == (Eigen::MatrixXd(3, 2) << 1, 2, 3, 4.5, -1, 0).finished());
  CHECK(d.y == labels_of({0, 1, 1}));
  CHECK(d.column_names == std::vector<std::string>{"a", "b"});

  write_text(dir / "missing.csv", "a,b,y\n1,,0\n3,4,1\n");
  const Dataset m = load_csv(dir / "missing.csv", "y");
  CHECK(m.missing_count() == 1);
  CHECK(m.missing_cells() == std::vector<std::pair<Index, Index>>{{0, 1}});

  write_text(dir / "bad.csv", "a,y\n1,0\nzebra,1\n");
  CHECK_THROWS_AS(load_csv(dir / "bad.csv", "y"), Error);
  CHECK_THROWS_AS(load_csv(dir / "a.csv", "outcome"), Error);
  CHECK(load_csv(dir / "a.csv", "outcome", false).p() == 3);
  CHECK_THROWS_AS(load_csv(dir / "nope.csv", "y"), Error);
  write_text(dir / "ragged.csv", "a,b,y\n1,2\n");
  CHECK_THROWS_AS(load_csv(dir / "ragged.csv", "y"), Error);
}

TEST_CASE("csv round trip") {
  const auto dir = scratch_dir("roundtrip");
  Rng rng(3);
  Dataset d = lncass::testing::random_dataset(7, 3, false, rng);
  d.X(2, 1) = std::nan("");
  d.X(4, 0) = 1e-300;
  save_csv(d, dir / "d.csv");
  const Dataset back = load_csv(dir / "d.csv", "y");
  CHECK(back.column_names == d.column_names);
  CHECK(back.y == d.y);
  CHECK(back.missing_cells() == d.missing_cells());
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 3; ++j)
      if (!std::isnan(d.X(i, j))) CHECK(back.X(i, j) == d.X(i, j));
}

TEST_CASE("log1p transform") {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, std::exp(1.0) - 1.0;
  const Dataset t = log1p_transform(matrix_dataset(X));
  CHECK(t.X(0, 0) == 0.0);
  CHECK(t.X(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  Rng rng(5);
  Eigen::MatrixXd R(10, 4);
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 4; ++j) R(i, j) = rng.uniform(0.0, 50.0);
  const Dataset r = log1p_transform(matrix_dataset(R));
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 4; ++j) CHECK(std::abs(r.X(i, j) - std::log1p(R(i, j))) <= 1e-15 * std::abs(r.X(i, j)));
  X(0, 0) = -2.0;
  CHECK_THROWS_AS(log1p_transform(matrix_dataset(X)), Error);
}

TEST_CASE("standardize") {
  Eigen::MatrixXd two(2, 1);
  two << 0.0, 2.0;
  const Dataset s = standardize(matrix_dataset(two));
  CHECK(s.X(0, 0) == doctest::Approx(-std::sqrt(0.5)));
  CHECK(s.X(1, 0) == doctest::Approx(std::sqrt(0.5)));

  Rng rng(7);
  Eigen::MatrixXd R(40, 3);
  for (Index i = 0; i < 40; ++i)
    for (Index j = 0; j < 3; ++j) R(i, j) = rng.normal(3.0, 2.0);
  const Dataset r = standardize(matrix_dataset(R));
  for (Index j = 0; j < 3; ++j) {
    const Eigen::VectorXd c = r.X.col(j);
    CHECK(std::abs(c.mean()) < 1e-12);
    CHECK(std::abs((c.array() - c.mean()).square().sum() / 39.0 - 1.0) < 1e-12);
  }
  CHECK((standardize(r).X - r.X).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(standardize(matrix_dataset(Eigen::MatrixXd::Ones(3, 1))), Error);
}

TEST_CASE("unit scaling") {
  Rng rng(9);
  Eigen::MatrixXd R(15, 2);
  for (Index i = 0; i < 15; ++i)
    for (Index j = 0; j < 2; ++j) R(i, j) = rng.normal();
  const Dataset u = scale_unit(matrix_dataset(R));
  for (Index j = 0; j < 2; ++j) {
    CHECK(u.X.col(j).minCoeff() == 0.0);
    CHECK(u.X.col(j).maxCoeff() == 1.0);
    const double lo = R.col(j).minCoeff(), hi = R.col(j).maxCoeff();
    for (Index i = 0; i < 15; ++i) CHECK(std::abs(u.X(i, j) - (R(i, j) - lo) / (hi - lo)) < 1e-15);
  }
  const Dataset affine = scale_unit(matrix_dataset((3.0 * R.array() + 7.0).matrix()));
  CHECK((affine.X - u.X).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mean imputation") {
  Eigen::MatrixXd X(3, 1);
  X << 1.0, std::nan(""), 3.0;
  const Dataset d = impute_mean(matrix_dataset(X));
  CHECK(d.X(1, 0) == 2.0);
  CHECK(d.X.col(0).mean() == 2.0);
  Rng rng(11);
  const Dataset full = lncass::testing::random_dataset(5, 2, false, rng);
  CHECK(impute_mean(full).X == full.X);
  Eigen::MatrixXd empty(2, 1);
  empty << std::nan(""), std::nan("");
  CHECK_THROWS_AS(impute_mean(matrix_dataset(empty)), Error);
}

TEST_CASE("preprocessor replays training statistics") {
  Rng rng(13);
  Dataset train = lncass::testing::random_dataset(20, 3, false, rng);
  Dataset test = lncass::testing::random_dataset(5, 3, false, rng);
  train.X(3, 2) = std::nan("");
  const PreprocessSteps steps{true, true, true, true};
  const Preprocessor pre = Preprocessor::fit(train, steps);
  const Dataset direct = scale_unit(standardize(log1p_transform(impute_mean(train))));
  CHECK((pre.apply(train).X - direct.X).cwiseAbs().maxCoeff() < 1e-12);
  const Dataset applied = pre.apply(test, true);
  CHECK(applied.X.minCoeff() >= 0.0);
  CHECK(applied.X.maxCoeff() <= 1.0);
}

TEST_CASE("wald screening") {
  Rng rng(17);
  const Index n = 100;
  Dataset d;
  d.X.resize(n, 3);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double strong = rng.normal();
    d.y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-2.0 * strong)) ? 1.0 : 0.0;
    d.X(i, 0) = rng.normal();  // independent of y
    d.X(i, 1) = strong;
    d.X(i, 2) = d.y[i] + 0.0;  // separates y exactly
  }
  d.column_names = {"noise", "strong", "separating"};
  const WaldScreenResult r = wald_screen(d, 3);
  CHECK(r.selected == std::vector<Index>{2, 1, 0});
  CHECK(std::abs(r.z[0]) < 3.0);
  CHECK(std::isfinite(r.z[2]));
  CHECK(r.score_substituted[2]);
  CHECK_FALSE(r.score_substituted[1]);
  CHECK(r.data.column_names == std::vector<std::string>{"separating", "strong", "noise"});

  // Score statistic oracle for the separating column: U / sqrt(I) at the
  // intercept-only fit.
  const double ybar = d.y.mean();
  const Eigen::VectorXd x = d.X.col(2);
  const double u = ((d.y.array() - ybar) * x.array()).sum();
  const double info = ybar * (1 - ybar) * (x.array() - x.mean()).square().sum();
  CHECK(std::abs(r.z[2]) == doctest::Approx(std::abs(u) / std::sqrt(info)).epsilon(1e-10));

  const WaldScreenResult one = wald_screen(d, 1);
  CHECK(one.data.p() == 1);
  CHECK_THROWS_AS(wald_screen(d, 0), Error);
  d.y[0] = 0.5;
  CHECK_THROWS_AS(wald_screen(d, 1), Error);
}

TEST_CASE("provenance records the applied sequence") {
  Rng rng(29);
  const Dataset d = lncass::testing::random_dataset(12, 2, true, rng);
  const Dataset t = scale_unit(standardize(log1p_transform(d)));
  CHECK(t.provenance == std::vector<std::string>{"log1p", "standardize", "unit-scale"});
  CHECK(wald_screen(t, 1).data.provenance.back() == "screen:1");
}

TEST_CASE("screening after standardization ignores positive column rescaling") {
  Rng rng(31);
  Dataset d = lncass::testing::random_dataset(50, 6, true, rng);
  for (Index i = 0; i < 50; ++i) d.X(i, 2) += 0.8 * d.y[i];
  Dataset scaled = d;
  scaled.X.col(2) *= 250.0;
  scaled.X.col(4) *= 0.003;
  const WaldScreenResult a = wald_screen(standardize(d), 3);
  const WaldScreenResult b = wald_screen(standardize(scaled), 3);
  CHECK(a.selected == b.selected);
  CHECK((a.z - b.z).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("wald statistic of the independent column is rarely large") {
  Rng rng(19);
  int large = 0;
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd x(100), y(100);
    for (Index i = 0; i < 100; ++i) {
      x[i] = rng.normal();
      y[i] = double(rng.below(2));
    }
    if (std::abs(wald_statistic(x, y).z) >= 3.0) ++large;
  }
  CHECK(large <= 3);
}

TEST_CASE("stratified k-fold") {
  Eigen::VectorXd y(37);
  for (Index i = 0; i < 37; ++i) y[i] = i < 15 ? 1.0 : 0.0;
  const FoldPlan plan = kfold_stratified(y, 5, 3);
  REQUIRE(plan.num_folds() == 5);
  std::vector<int> seen(37, 0);
  int min_pos = 100, max_pos = -1;
  for (int f = 0; f < 5; ++f) {
    int pos = 0;
    for (Index i : plan.test[std::size_t(f)]) {
      ++seen[std::size_t(i)];
      pos += int(y[i]);
    }
    min_pos = std::min(min_pos, pos);
    max_pos = std::max(max_pos, pos);
    CHECK(plan.train[std::size_t(f)].size() + plan.test[std::size_t(f)].size() == 37);
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  CHECK(max_pos - min_pos <= 1);
  CHECK(kfold_stratified(y, 5, 3).test == plan.test);

  Eigen::VectorXd balanced(6);
  balanced << 0, 1, 0, 1, 0, 1;
  const FoldPlan loo = kfold_stratified(balanced, 3, 1);
  for (const auto& t : loo.test) CHECK(t.size() == 2);
  CHECK_THROWS_AS(kfold_stratified(y, 16, 1), Error);
  CHECK_THROWS_AS(kfold_stratified(y, 1, 1), Error);
}

TEST_CASE("balanced leave-one-out") {
  Eigen::VectorXd y(11);
  y << 1, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0;
  const FoldPlan plan = loocv_balanced(y, 5);
  REQUIRE(plan.num_folds() == 11);
  std::set<double> positive_share;
  for (int f = 0; f < 11; ++f) {
    const auto& test = plan.test[std::size_t(f)];
    const auto& train = plan.train[std::size_t(f)];
    const auto& dropped = plan.dropped[std::size_t(f)];
    REQUIRE(test.size() == 1);
    REQUIRE(dropped.size() == 1);
    CHECK(train.size() == 9);
    CHECK(dropped[0] != test[0]);
    CHECK(y[dropped[0]] != y[test[0]]);
    double pos = 0;
    for (Index i : train) pos += y[i];
    positive_share.insert(pos);
  }
  CHECK(positive_share.size() == 1);
}

}  // TEST_SUITE
