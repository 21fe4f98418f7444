#pragma once

#include <cstdint>
#include <vector>

#include "slasso/estimator.hpp"
#include "slasso/fda.hpp"
#include "slasso/owlqn.hpp"

namespace slasso {

struct CvRow {
  double lambda_s = 0.0;
  double lambda_t = 0.0;
  double lambda_l = 0.0;
  double cv_error = 0.0;  ///< mean held-out PMSE over folds
  double se = 0.0;        ///< standard error of the fold errors
};

using CvTable = std::vector<CvRow>;

struct CvScore {
  double mean = 0.0;
  double se = 0.0;
};

struct LambdaGrids {
  std::vector<double> lambda_s;
  std::vector<double> lambda_t;
  std::vector<double> lambda_l;

  /// 7 log-spaced points on [1e-6, 1e2] for both roughness parameters and
  /// {0} plus 7 log-spaced points on [1e-4, 1e1] for lambda_L.
  static LambdaGrids defaults();
};

/// `count` points evenly spaced in log10 between lo and hi inclusive.
std::vector<double> log_space(double lo, double hi, int count);

/// Shuffle 0..n-1 with `seed` and cut it into K contiguous folds whose sizes
/// differ by at most one (the first n mod K folds get the extra index).
std::vector<std::vector<int>> kfold_split(int n, int K, std::uint64_t seed);

/// Mean and standard error of a set of fold errors.
CvScore summarize_folds(const std::vector<double>& fold_errors);

/// K-fold CV error of one penalty choice. Each fold is centered with its
/// own training means.
CvScore cv_error(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params, int K,
                 std::uint64_t seed, const SolverConfig& cfg = {});

/// CV over the Cartesian product of the grids. Rows are ordered by lambda_s,
/// then lambda_t, then lambda_L, each in the order given. Within a fold the
/// lambda_L path is solved from the largest value down with warm starts, and
/// lambda_L = 0 uses the closed-form SMOOTH solve when it is well posed.
CvTable grid_search(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& base,
                    const LambdaGrids& grids, int K, std::uint64_t seed, const SolverConfig& cfg = {}, int jobs = 1);

/// Two-stage k-standard-error rule: keep the best row for every lambda_L,
/// then among those within k standard errors of the overall best return the
/// one with the largest lambda_L (ties: larger lambda_s, then lambda_t).
CvRow select_k_se(const CvTable& table, double k);

/// Apply a chosen row's lambdas to a parameter set.
PenaltyParams with_lambdas(PenaltyParams params, const CvRow& row);

}  // namespace slasso
