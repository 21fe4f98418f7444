#pragma once

#include <optional>

#include <Eigen/Dense>

#include "slasso/basis.hpp"
#include "slasso/fda.hpp"
#include "slasso/operators.hpp"
#include "slasso/owlqn.hpp"

namespace slasso {

/// Penalty strengths and tensor-basis layout. dim_s = M1 + k1, dim_t = M2 + k2.
struct PenaltyParams {
  double lambda_s = 0.0;
  double lambda_t = 0.0;
  double lambda_l = 0.0;
  int m_s = 2;
  int m_t = 2;
  int k1 = 4;
  int k2 = 4;
  int M1 = 56;
  int M2 = 56;

  void validate() const;
  int dim_s() const { return M1 + k1; }
  int dim_t() const { return M2 + k2; }
};

/// beta(s, t) = psi_s(s)^T B psi_t(t).
class CoefficientSurface {
 public:
  CoefficientSurface(Eigen::MatrixXd B, BSplineBasis basis_s, BSplineBasis basis_t);

  const Eigen::MatrixXd& coefficients() const { return B_; }
  const BSplineBasis& basis_s() const { return basis_s_; }
  const BSplineBasis& basis_t() const { return basis_t_; }

  double eval(double s, double t) const;

  /// Values on a tensor grid; entry (i, j) is beta(s[i], t[j]).
  Eigen::MatrixXd eval_grid(const Grid& s, const Grid& t) const;

 private:
  Eigen::MatrixXd B_;
  BSplineBasis basis_s_;
  BSplineBasis basis_t_;
};

/// The two bases of a fit and their Gram / penalty / weight matrices.
struct TensorSetup {
  BSplineBasis basis_s;
  BSplineBasis basis_t;
  AxisMatrices axis_s;
  AxisMatrices axis_t;
};

TensorSetup make_setup(const PenaltyParams& params, const Grid& grid_s, const Grid& grid_t);

/// Training data reduced to what every penalty choice shares: centered
/// samples, their means, and the cross-product matrices.
struct PreparedData {
  TensorSetup setup;
  Grid grid_x;
  Grid grid_y;
  Eigen::VectorXd mean_X;
  Eigen::VectorXd mean_Y;
  DesignMatrices design;
};

PreparedData prepare(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params);

ProblemData problem_for(const PreparedData& prepared, double lambda_s, double lambda_t, double lambda_l);

struct FitResult {
  CoefficientSurface surface;
  SolveReport report;
  Eigen::VectorXd mean_X;
  Eigen::VectorXd mean_Y;
  Grid grid_x;
  Grid grid_y;
  PenaltyParams params;

  /// Set when the solver stopped on its iteration limit.
  bool warning() const { return !report.converged(); }
};

/// Minimize the S-LASSO objective for `data` with OWL-QN, starting from B0
/// (zero when absent). Coefficients the solver zeroes are exactly 0.
///
/// With `precondition` the L-BFGS recursion starts from the exact inverse
/// Hessian of the smooth part (eigenvalues floored at 1e-10 of the largest),
/// so on the active orthant the step is a Newton step. Without it the usual
/// scaled identity is used.
SolveResult solve_slasso(const ProblemData& data, const SolverConfig& cfg,
                         const std::optional<Eigen::MatrixXd>& B0 = std::nullopt, bool precondition = true);

enum class SmoothMethod {
  eigen,  ///< simultaneous diagonalization of both axis pencils
  dense,  ///< LU of the materialized (dim_s*dim_t)-dimensional system
};

/// Solve X^TX B W_t + lambda_s R_s B W_t + lambda_t W_s B R_t = X^T Y.
/// Throws RankDeficiency when the system's condition estimate exceeds 1e12.
Eigen::MatrixXd solve_smooth(const ProblemData& data, SmoothMethod method = SmoothMethod::eigen);

FitResult fit_from_prepared(const PreparedData& prepared, const PenaltyParams& params, const SolverConfig& cfg,
                            const std::optional<Eigen::MatrixXd>& B0 = std::nullopt);

FitResult fit_slasso(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params,
                     const SolverConfig& cfg = {});

/// Roughness-penalized least squares (lambda_L ignored, reported as 0).
FitResult fit_smooth(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params,
                     SmoothMethod method = SmoothMethod::eigen);

/// fit_smooth when lambda_L == 0 (the solver takes over if that system is
/// rank deficient), fit_slasso otherwise.
FitResult fit(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params,
              const SolverConfig& cfg = {});

double eval_surface(const CoefficientSurface& surface, double s, double t);

/// Predicted response curves on `t_grid`. X_new must share the training
/// predictor grid; the training response mean is interpolated onto t_grid.
FunctionalSample predict(const FitResult& fit, const FunctionalSample& X_new, const Grid& t_grid);

/// Fraction of tensor grid points where |beta_hat| <= tol.
double null_region_fraction(const CoefficientSurface& surface, const Grid& grid_s, const Grid& grid_t, double tol);

}  // namespace slasso
