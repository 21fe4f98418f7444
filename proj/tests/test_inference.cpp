#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <doctest.h>

#include "slasso/error.hpp"
#include "slasso/inference.hpp"
#include "slasso/simlab.hpp"
#include "support.hpp"

using namespace slasso;
using testing_support::small_problem;

namespace {

FitResult zero_fit(const FitResult& f) {
  FitResult z = f;
  const auto& s = f.surface;
  z.surface = CoefficientSurface(Eigen::MatrixXd::Zero(s.coefficients().rows(), s.coefficients().cols()),
                                 s.basis_s(), s.basis_t());
  return z;
}

}  // namespace

TEST_CASE("pointwise R^2 of transformed samples") {
  std::mt19937_64 rng(1);
  const Grid g = Grid::uniform(0, 1, 41);
  const FunctionalSample Y = testing_support::random_curves(10, g, rng);
  const R2Curve same = r2_pointwise(Y, Y);
  CHECK((same.values.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK_FALSE(same.any_undefined());
  const R2Curve half = r2_pointwise(Y, FunctionalSample(g, 0.5 * Y.values));
  CHECK((half.values.array() - 0.25).abs().maxCoeff() < 1e-12);
  // constant fitted curves have no variance
  const Eigen::RowVectorXd mean = Y.values.colwise().mean();
  const R2Curve flat = r2_pointwise(Y, FunctionalSample(g, Eigen::MatrixXd::Ones(10, 1) * mean));
  CHECK(flat.values.cwiseAbs().maxCoeff() < 1e-12);

  CHECK(r2_global(same) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r2_global(half) == doctest::Approx(0.25).epsilon(1e-12));

  const std::vector<int> two{0, 1};
  CHECK_THROWS_AS(r2_pointwise(Y.rows(two), Y.rows(two)), InvalidArgument);
  CHECK_THROWS_AS(r2_pointwise(Y, Y.rows(two)), ShapeError);
}

TEST_CASE("undefined points where the response is constant") {
  const Grid g = Grid::uniform(0, 1, 5);
  Eigen::MatrixXd v(4, 5);
  v << 1, 2, 3, 0, 1,
       2, 2, 1, 5, 1,
       0, 2, 4, 1, 1,
       3, 2, 0, 2, 1;
  const R2Curve c = r2_pointwise(FunctionalSample(g, v), FunctionalSample(g, 0.5 * v));
  CHECK(c.any_undefined());
  CHECK(c.undefined == std::vector<bool>{false, true, false, false, true});
  CHECK(c.values[1] == 0.0);
  CHECK(c.values[0] == doctest::Approx(0.25));
}

TEST_CASE("R^2 of fits") {
  auto p = small_problem(30, 5, 5, 1e-4, 1e-4, 0.0, 2);
  const FitResult f = fit(p.X, p.Y, p.params);
  const R2Curve c = r2_pointwise(f, p.X, p.Y, p.Y.grid);
  CHECK(c.values.minCoeff() >= 0.0);
  CHECK(c.values.maxCoeff() <= 1.0 + 1e-6);
  const double g = r2_global(f, p.X, p.Y);
  CHECK(g > 0.0);
  CHECK(g <= 1.0 + 1e-6);

  const FitResult z = zero_fit(f);
  CHECK(r2_global(z, p.X, p.Y) == 0.0);
  CHECK(r2_pointwise(z, p.X, p.Y, p.Y.grid).values.isZero(0.0));

  // a fit reproducing the data exactly has R^2 = 1
  const testing_support::Noiseless d = testing_support::noiseless(40, 3, 3, 401, 3);
  const FitResult exact = fit(d.X, d.Y, d.params);
  CHECK(r2_global(exact, d.X, d.Y) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("p-value rule") {
  CHECK(permutation_p_value(5.0, {1, 2, 3, 4}) == doctest::Approx(0.2));
  CHECK(permutation_p_value(0.0, {1, 2, 3, 4}) == 1.0);
  CHECK(permutation_p_value(2.0, {1, 2, 3, 4}) == doctest::Approx(4.0 / 5));
  // adding a permuted value at or above the observation never lowers p
  std::vector<double> perm{0.1, 0.5, 0.3};
  double p = permutation_p_value(0.4, perm);
  for (double extra : {0.4, 0.9, 0.45}) {
    perm.push_back(extra);
    const double q = permutation_p_value(0.4, perm);
    CHECK(q >= p);
    p = q;
  }
}

TEST_CASE("empirical percentile") {
  CHECK(empirical_percentile({3.0}, 0.95) == 3.0);
  CHECK(empirical_percentile({4, 1, 3, 2, 5}, 0.5) == 3.0);
  CHECK(empirical_percentile({1, 2, 3, 4, 5}, 0.95) == doctest::Approx(4.8));
  CHECK(empirical_percentile({1, 2}, 0.0) == 1.0);
  CHECK(empirical_percentile({1, 2}, 1.0) == 2.0);
  CHECK_THROWS_AS(empirical_percentile({}, 0.5), InvalidArgument);
  CHECK_THROWS_AS(empirical_percentile({1.0}, 1.5), InvalidArgument);
}

TEST_CASE("permutation indices") {
  const auto a = permutation_indices(20, 7, 3);
  CHECK(a == permutation_indices(20, 7, 3));
  CHECK(a != permutation_indices(20, 7, 4));
  CHECK(a != permutation_indices(20, 8, 3));
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> iota(20);
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(sorted == iota);
}

TEST_CASE("permutation test bookkeeping") {
  auto p = small_problem(20, 4, 4, 1e-3, 1e-3, 0.0, 4);
  const PermutationTest t = permutation_test(p.X, p.Y, p.params, 9, 11);
  CHECK(t.global.permuted.size() == 9);
  CHECK(t.global.n_perm == 9);
  CHECK(t.global.seed == 11);
  CHECK(t.global.p_value > 0.0);
  CHECK(t.global.p_value <= 1.0);
  CHECK(t.global.p_value == permutation_p_value(t.global.observed, t.global.permuted));
  CHECK(t.pointwise.permuted.rows() == 9);
  CHECK(t.pointwise.permuted.cols() == 61);
  for (Eigen::Index j = 0; j < 61; ++j) {
    const Eigen::VectorXd col = t.pointwise.permuted.col(j);
    CHECK(t.pointwise.envelope[j] == empirical_percentile({col.data(), col.data() + 9}, 0.95));
    CHECK(t.pointwise.exceeds[j] == (t.pointwise.observed[j] > t.pointwise.envelope[j]));
  }
  // the same seed reproduces everything; the wrappers agree with the combined call
  const PermutationResult g = permutation_test_global(p.X, p.Y, p.params, 9, 11);
  CHECK(g.permuted == t.global.permuted);
  const PointwisePermutationResult pw = permutation_test_pointwise(p.X, p.Y, p.params, 9, 11, {}, 0.5, 2);
  CHECK(pw.permuted == t.pointwise.permuted);
  CHECK(pw.percentile == 0.5);

  CHECK_THROWS_AS(permutation_test(p.X, p.Y, p.params, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(permutation_test(p.X, p.Y, p.params, 3, 1, {}, 1.5), InvalidArgument);
}

TEST_CASE("degenerate permutation counts") {
  auto p = small_problem(15, 3, 3, 1e-3, 1e-3, 0.0, 5);
  const PermutationTest t = permutation_test(p.X, p.Y, p.params, 1, 3);
  CHECK(t.pointwise.envelope == t.pointwise.permuted.row(0).transpose());
  CHECK((t.global.p_value == 0.5 || t.global.p_value == 1.0));
}

TEST_CASE("zero observed curve exceeds nothing") {
  // lambda_L huge: the observed fit is the zero surface
  auto p = small_problem(15, 3, 3, 1e-3, 1e-3, 1e6, 6);
  const PermutationTest t = permutation_test(p.X, p.Y, p.params, 5, 3);
  CHECK(t.pointwise.observed.isZero(0.0));
  CHECK(std::none_of(t.pointwise.exceeds.begin(), t.pointwise.exceeds.end(), [](bool b) { return b; }));
  CHECK(t.global.p_value == 1.0);
}

TEST_CASE("permuted statistics do not depend on input order") {
  auto p = small_problem(18, 4, 4, 1e-3, 1e-3, 0.0, 7);
  std::vector<int> shuffle(18);
  std::iota(shuffle.begin(), shuffle.end(), 0);
  std::mt19937_64 rng(8);
  std::shuffle(shuffle.begin(), shuffle.end(), rng);
  const PermutationResult a = permutation_test_global(p.X, p.Y, p.params, 15, 21);
  const PermutationResult b = permutation_test_global(p.X.rows(shuffle), p.Y.rows(shuffle), p.params, 15, 21);
  CHECK(a.observed == doctest::Approx(b.observed).epsilon(1e-10));
  std::vector<double> sa = a.permuted, sb = b.permuted;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i] == doctest::Approx(sb[i]).epsilon(1e-10));
}

TEST_CASE("signal is detected in scenario II") {
  SimConfig cfg;
  cfg.scenario = Scenario::II;
  cfg.n_train = 150;
  cfg.n_test = 1;
  cfg.seed = 12;
  const SimDataset d = gen_dataset(cfg);
  PenaltyParams prm;
  prm.M1 = prm.M2 = 10;
  prm.lambda_s = prm.lambda_t = 1e-3;
  const PermutationTest t = permutation_test(d.X_train, d.Y_train, prm, 39, 5);
  CHECK(t.global.p_value == doctest::Approx(1.0 / 40));
  CHECK(std::any_of(t.pointwise.exceeds.begin(), t.pointwise.exceeds.end(), [](bool b) { return b; }));
}
