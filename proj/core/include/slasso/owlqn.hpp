#pragma once

#include <deque>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace slasso {

/// First trial step of each backtracking line search.
enum class InitialStep {
  inverse_pg_norm,  ///< alpha_0 = 1 / ||v||, v the negative pseudo-gradient
  unit,             ///< alpha_0 = 1 once curvature information exists, else 1 / ||v||
};

/// Which components of the quasi-Newton direction must agree in sign with
/// the negative pseudo-gradient v.
enum class DirectionProjection {
  all,         ///< every component (classic orthant-wise rule)
  zeros_only,  ///< only those at x_i == 0; steps must still satisfy (x+ - x)^T v > 0
};

struct SolverConfig {
  int memory = 10;
  double gamma = 1e-4;
  int max_iters = 500;
  int max_backtracks = 50;
  double tol_obj = 1e-12;  ///< relative objective decrease over `obj_window` iterations
  int obj_window = 5;
  double tol_pg = 1e-6;  ///< infinity norm of the pseudo-gradient
  InitialStep initial_step = InitialStep::unit;
  DirectionProjection projection = DirectionProjection::all;

  void validate() const;
};

enum class Termination { converged_objective, converged_pg, max_iters };

std::string_view to_string(Termination t);

struct SolveReport {
  int iterations = 0;
  std::vector<double> objective_trace;
  double pg_norm = 0.0;
  Termination reason = Termination::max_iters;

  bool converged() const { return reason != Termination::max_iters; }
};

struct SolveResult {
  Eigen::VectorXd x;
  SolveReport report;
};

/// Smooth part l: returns l(x) and writes its gradient.
using SmoothObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Symmetric positive definite map v -> H0 v used as the initial inverse
/// Hessian of the two-loop recursion.
using InverseHessian = std::function<Eigen::VectorXd(const Eigen::VectorXd& v)>;

/// Pseudo-gradient of l(x) + C * sum_i d_i |x_i|. At a zero coordinate the
/// one-sided derivatives are grad_i -/+ d_i C; the result is whichever one
/// points downhill, or 0 when 0 lies in the subdifferential.
Eigen::VectorXd pseudo_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& grad_l, const Eigen::VectorXd& d,
                                double C);

/// Zero every component of z whose sign differs from the matching one in y.
Eigen::VectorXd orthant_project(const Eigen::VectorXd& z, const Eigen::VectorXd& y);

/// sign(x_i) where x_i != 0, else sign(-pg_i).
Eigen::VectorXd choose_orthant(const Eigen::VectorXd& x, const Eigen::VectorXd& pg);

/// Curvature pairs for the L-BFGS inverse-Hessian approximation.
class LbfgsHistory {
 public:
  explicit LbfgsHistory(int memory);

  /// Stores (s, y) unless s^T y <= 1e-12 ||s|| ||y||; returns whether it was kept.
  bool push(const Eigen::VectorXd& s, const Eigen::VectorXd& y);
  void clear();
  std::size_t size() const { return s_.size(); }
  int memory() const { return memory_; }

  /// Two-loop recursion: H v, with H_0 = (s^T y / y^T y) I from the newest
  /// pair, or the identity when empty. A supplied `h0` replaces that H_0.
  Eigen::VectorXd apply(const Eigen::VectorXd& v, const InverseHessian* h0 = nullptr) const;

 private:
  int memory_;
  std::deque<Eigen::VectorXd> s_;
  std::deque<Eigen::VectorXd> y_;
  std::deque<double> rho_;
};

Eigen::VectorXd lbfgs_direction(const LbfgsHistory& history, const Eigen::VectorXd& v,
                                const InverseHessian* h0 = nullptr);

/// Minimize l(x) + C * sum_i d_i |x_i| by orthant-wise L-BFGS.
///
/// Throws SolverStall when the line search cannot make progress even along
/// the steepest pseudo-gradient direction, unless the decrease it asked for
/// is within rounding of the objective (reported as converged-objective).
/// NumericError if l or its gradient
/// stop being finite at an accepted point. `h0`, when given, seeds every
/// L-BFGS direction with a problem-specific inverse Hessian.
SolveResult solve(const SmoothObjective& l, const Eigen::VectorXd& d, double C, const Eigen::VectorXd& x0,
                  const SolverConfig& cfg = {}, const InverseHessian* h0 = nullptr);

}  // namespace slasso
