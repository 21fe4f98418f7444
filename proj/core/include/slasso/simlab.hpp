#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "slasso/estimator.hpp"
#include "slasso/fda.hpp"
#include "slasso/selection.hpp"

namespace slasso {

/// The four coefficient surfaces of the simulation study on [0,1]^2:
/// I zero everywhere, II a bump in the centre, III oscillations along the
/// edge, IV a non-vanishing polynomial.
enum class Scenario { I, II, III, IV };

std::string_view to_string(Scenario s);

/// Accepts "I".."IV" or "1".."4" (case-insensitive). Throws InvalidArgument.
Scenario parse_scenario(std::string_view text);

double scenario_beta(Scenario scenario, double s, double t);

/// Source of standard normal draws.
using NormalDraw = std::function<double()>;

/// n curves X_i = sum_j x_ij psi_j with i.i.d. N(0,1) coefficients on a cubic
/// B-spline basis of `n_basis` functions with evenly spaced knots on the grid
/// domain.
FunctionalSample gen_covariates(int n, int n_basis, const Grid& grid, const NormalDraw& draw);
FunctionalSample gen_covariates(int n, int n_basis, const Grid& grid, std::mt19937_64& rng);

/// Modified signal-to-noise ratio of a replicate:
/// (int Var[signal(t)] dt + max_t Var[signal(t)]) / int Var[noise(t)] dt,
/// with pointwise sample variances across curves.
double msn_statistic(const FunctionalSample& signal, const FunctionalSample& noise);

struct NoiseCalibration {
  double k = 1.0;
  FunctionalSample errors;
};

/// Scale raw errors by k so msn_statistic(signal, k * raw) == msn_target.
NoiseCalibration calibrate_noise(const FunctionalSample& signal, const FunctionalSample& raw_errors,
                                 double msn_target);

struct SimConfig {
  Scenario scenario = Scenario::II;
  int n_train = 150;
  int n_test = 1000;
  std::uint64_t seed = 1;
  double msn_target = 4.0;
  int n_basis_x = 32;
  int n_basis_eps = 20;
  /// Draw both basis counts uniformly from [10, 50] instead.
  bool randomize_basis_counts = false;
  int grid_points = 100;
  /// Replaces the calibrated noise scale when set (0 gives noiseless data).
  std::optional<double> noise_scale;

  void validate() const;
};

struct SimDataset {
  Scenario scenario = Scenario::I;
  FunctionalSample X_train, Y_train, X_test, Y_test;
  /// The integral term of the training / test responses.
  FunctionalSample signal_train, signal_test;
  double noise_k = 1.0;
  int n_basis_x = 32;
  int n_basis_eps = 20;
};

/// Y_i(t) = int X_i(s) beta(s,t) ds + eps_i(t). Training and test curves come
/// from separate random streams derived from cfg.seed.
SimDataset gen_dataset(const SimConfig& cfg);

/// Integrated squared error of beta_hat over the null (beta == 0) or non-null
/// region, normalized by its area: the mean of (beta_hat - beta)^2 over the
/// grid points in that region. Throws UndefinedRegion when it is empty.
double ise0(const CoefficientSurface& surface, Scenario scenario, const Grid& grid_s, const Grid& grid_t);
double ise1(const CoefficientSurface& surface, Scenario scenario, const Grid& grid_s, const Grid& grid_t);

/// 101-point uniform grid on [0, 1] used for the ISE metrics.
Grid ise_grid();

/// Mean over test curves of int (Y - Y_hat)^2 dt; test predictors are
/// centered with the training means inside predict.
double pmse(const FitResult& fit, const FunctionalSample& X_test, const FunctionalSample& Y_test);

enum class EstimatorKind { slasso, smooth };

std::string_view to_string(EstimatorKind e);

struct SelectionSpec {
  PenaltyParams base;
  LambdaGrids grids;
  int K = 10;
  /// Standard-error multiplier for the S-LASSO choice; SMOOTH always takes
  /// the minimum over the lambda_L = 0 rows.
  double k_se = 0.0;
  SolverConfig solver;
};

struct ReplicationRow {
  int replicate = 0;
  EstimatorKind estimator = EstimatorKind::slasso;
  double ise0 = 0.0;
  double ise1 = 0.0;  ///< NaN when the non-null region is empty
  double pmse = 0.0;
  double lambda_s = 0.0;
  double lambda_t = 0.0;
  double lambda_l = 0.0;
  double null_fraction = 0.0;  ///< null_region_fraction at tol 1e-8 on the ISE grid
  std::string error;           ///< non-empty when the replicate failed
};

/// Seed of replicate r, derived from the base seed only.
std::uint64_t replicate_seed(std::uint64_t base, int replicate);

/// Each replicate: generate data, run grid CV, refit every estimator on the
/// full training set, score it. Failures are recorded in the row, not thrown.
std::vector<ReplicationRow> run_replications(const SimConfig& cfg, const std::vector<EstimatorKind>& estimators,
                                             int n_reps, const SelectionSpec& selection, int jobs = 1);

/// CSV with header replicate,estimator,ise0,ise1,pmse,lambda_s,lambda_t,lambda_l.
std::string replications_csv(const std::vector<ReplicationRow>& rows);

}  // namespace slasso
