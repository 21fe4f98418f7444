#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "slasso/estimator.hpp"
#include "slasso/fda.hpp"

namespace slasso {

/// Pointwise coefficient of determination on a grid. Points where the
/// response has zero sample variance are flagged and hold 0.
struct R2Curve {
  Grid grid;
  Eigen::VectorXd values;
  std::vector<bool> undefined;

  bool any_undefined() const;
};

/// Var_i[Yhat_i(t)] / Var_i[Y_i(t)] for two samples on the same grid.
R2Curve r2_pointwise(const FunctionalSample& Y, const FunctionalSample& Y_hat);

/// R^2(t) of a fit on (X, Y): fitted values are predicted on t_grid and Y is
/// interpolated there. Needs n >= 3.
R2Curve r2_pointwise(const FitResult& fit, const FunctionalSample& X, const FunctionalSample& Y, const Grid& t_grid);

/// Trapezoidal mean of the curve over its domain.
double r2_global(const R2Curve& curve);
double r2_global(const FitResult& fit, const FunctionalSample& X, const FunctionalSample& Y);

struct PermutationResult {
  double observed = 0.0;
  std::vector<double> permuted;
  double p_value = 1.0;
  int n_perm = 0;
  std::uint64_t seed = 0;
};

struct PointwisePermutationResult {
  Grid grid;
  Eigen::VectorXd observed;
  Eigen::MatrixXd permuted;  ///< n_perm x grid points
  Eigen::VectorXd envelope;  ///< pointwise empirical percentile of `permuted`
  std::vector<bool> exceeds;  ///< observed > envelope
  double percentile = 0.95;
  int n_perm = 0;
  std::uint64_t seed = 0;
};

struct PermutationTest {
  PermutationResult global;
  PointwisePermutationResult pointwise;
};

/// (1 + #{permuted >= observed}) / (n_perm + 1).
double permutation_p_value(double observed, const std::vector<double>& permuted);

/// Empirical quantile with linear interpolation between order statistics.
double empirical_percentile(std::vector<double> values, double q);

/// Row permutation of curve indices for permutation `index`, derived from
/// `seed` only.
std::vector<int> permutation_indices(int n, std::uint64_t seed, int index);

/// Fit with fixed `params` on (X, Y) and on n_perm row-permuted responses,
/// recording global and pointwise R^2 on the response grid. lambda_L == 0
/// uses the closed-form SMOOTH fit. Permutations act on the curves sorted by
/// their values, so reordering the input rows leaves the permuted statistics
/// unchanged (up to rounding).
PermutationTest permutation_test(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params,
                                 int n_perm, std::uint64_t seed, const SolverConfig& cfg = {},
                                 double percentile = 0.95, int jobs = 1);

PermutationResult permutation_test_global(const FunctionalSample& X, const FunctionalSample& Y,
                                          const PenaltyParams& params, int n_perm, std::uint64_t seed,
                                          const SolverConfig& cfg = {}, int jobs = 1);

PointwisePermutationResult permutation_test_pointwise(const FunctionalSample& X, const FunctionalSample& Y,
                                                      const PenaltyParams& params, int n_perm, std::uint64_t seed,
                                                      const SolverConfig& cfg = {}, double percentile = 0.95,
                                                      int jobs = 1);

}  // namespace slasso
