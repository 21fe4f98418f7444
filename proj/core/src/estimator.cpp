#include "slasso/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slasso/error.hpp"

namespace slasso {

void PenaltyParams::validate() const {
  if (!(lambda_s >= 0.0 && lambda_t >= 0.0 && lambda_l >= 0.0))
    throw InvalidArgument("penalty parameters must be non-negative");
  if (k1 < 1 || k2 < 1) throw InvalidArgument("spline orders must be >= 1");
  if (M1 < 0 || M2 < 0) throw InvalidArgument("interior knot counts must be >= 0");
  if (m_s < 1 || m_s > k1 - 1)
    throw InvalidArgument("penalty order exceeds spline smoothness: m_s=" + std::to_string(m_s) +
                          " needs 1 <= m_s <= k1-1=" + std::to_string(k1 - 1));
  if (m_t < 1 || m_t > k2 - 1)
    throw InvalidArgument("penalty order exceeds spline smoothness: m_t=" + std::to_string(m_t) +
                          " needs 1 <= m_t <= k2-1=" + std::to_string(k2 - 1));
}

CoefficientSurface::CoefficientSurface(Eigen::MatrixXd B, BSplineBasis basis_s, BSplineBasis basis_t)
    : B_(std::move(B)), basis_s_(std::move(basis_s)), basis_t_(std::move(basis_t)) {
  if (B_.rows() != basis_s_.dim() || B_.cols() != basis_t_.dim())
    throw ShapeError("coefficient matrix does not match the tensor basis dimensions");
}

double CoefficientSurface::eval(double s, double t) const {
  return basis_s_.eval(s).dot(B_ * basis_t_.eval(t));
}

Eigen::MatrixXd CoefficientSurface::eval_grid(const Grid& s, const Grid& t) const {
  return basis_s_.eval_matrix(s.points()) * B_ * basis_t_.eval_matrix(t.points()).transpose();
}

TensorSetup make_setup(const PenaltyParams& params, const Grid& grid_s, const Grid& grid_t) {
  params.validate();
  BSplineBasis bs = make_basis(grid_s.lo(), grid_s.hi(), params.k1, params.M1);
  BSplineBasis bt = make_basis(grid_t.lo(), grid_t.hi(), params.k2, params.M2);
  AxisMatrices as = axis_matrices(bs, params.m_s);
  AxisMatrices at = axis_matrices(bt, params.m_t);
  return TensorSetup{std::move(bs), std::move(bt), std::move(as), std::move(at)};
}

PreparedData prepare(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params) {
  if (X.n() != Y.n())
    throw ShapeError("predictor sample has " + std::to_string(X.n()) + " curves, response has " +
                     std::to_string(Y.n()));
  if (X.n() < 2) throw InvalidArgument("fitting needs at least two curves");
  TensorSetup setup = make_setup(params, X.grid, Y.grid);
  Centered cx = center(X);
  Centered cy = center(Y);
  DesignMatrices design = build_design(cx.sample, cy.sample, setup.basis_s, setup.basis_t);
  return PreparedData{std::move(setup), X.grid, Y.grid, std::move(cx.mean), std::move(cy.mean), std::move(design)};
}

ProblemData problem_for(const PreparedData& prepared, double lambda_s, double lambda_t, double lambda_l) {
  return make_problem(prepared.design, prepared.setup.axis_s, prepared.setup.axis_t, lambda_s, lambda_t, lambda_l);
}

namespace {

constexpr double kMaxCondition = 1e12;
constexpr Eigen::Index kMaxDenseDim = 4096;

std::string dims_text(const ProblemData& data) {
  return std::to_string(data.dim_s() * data.dim_t()) + "-dimensional system (dim_s=" +
         std::to_string(data.dim_s()) + ", dim_t=" + std::to_string(data.dim_t()) + ")";
}

// Both axis pencils diagonalized at once: the smooth-part operator
// Q(B) = (X^TX + lambda_s R_s) B W_t + lambda_t W_s B R_t acts as
// U^-T (Z .* den) V^-1 on Z = U^-1 B V^-T.
struct PencilDecomposition {
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  Eigen::MatrixXd den;
};

PencilDecomposition decompose(const ProblemData& data) {
  const Eigen::MatrixXd left = data.XtX + data.lambda_s * data.R_s;
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (left + left.transpose()), data.W_s);
  const Eigen::MatrixXd right = data.lambda_t * data.R_t;
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> et(0.5 * (right + right.transpose()), data.W_t);
  if (es.info() != Eigen::Success || et.info() != Eigen::Success)
    throw NumericError("eigendecomposition failed for the " + dims_text(data));
  const Eigen::VectorXd& nu = es.eigenvalues();
  const Eigen::VectorXd& mu = et.eigenvalues();
  return {es.eigenvectors(), et.eigenvectors(),
          nu.replicate(1, mu.size()) + mu.transpose().replicate(nu.size(), 1)};
}

}  // namespace

SolveResult solve_slasso(const ProblemData& data, const SolverConfig& cfg, const std::optional<Eigen::MatrixXd>& B0,
                         bool precondition) {
  const Eigen::Index ds = data.dim_s();
  const Eigen::Index dt = data.dim_t();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(ds * dt);
  if (B0) {
    check_coefficient_shape(data, *B0);
    x0 = Eigen::Map<const Eigen::VectorXd>(B0->data(), ds * dt);
  }
  const SmoothObjective loss = [&data, ds, dt](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const Eigen::Map<const Eigen::MatrixXd> B(x.data(), ds, dt);
    Eigen::MatrixXd G;
    const double value = smooth_loss_and_gradient(data, B, G);
    grad = Eigen::Map<const Eigen::VectorXd>(G.data(), G.size());
    return value;
  };
  const Eigen::VectorXd d = penalty_diagonal(data);
  if (!precondition) return solve(loss, d, data.lambda_l, x0, cfg);

  PencilDecomposition pd = decompose(data);
  // Hessian of the loss is 2Q; its inverse applied to V is U ((U^T V V) ./ 2den) V^T.
  const double floor = 1e-10 * pd.den.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd inv_den = (2.0 * pd.den.cwiseMax(floor)).cwiseInverse();
  const InverseHessian h0 = [&pd, &inv_den, ds, dt](const Eigen::VectorXd& v) {
    const Eigen::Map<const Eigen::MatrixXd> M(v.data(), ds, dt);
    const Eigen::MatrixXd Z = (pd.U.transpose() * M * pd.V).cwiseProduct(inv_den);
    Eigen::VectorXd out(ds * dt);
    Eigen::Map<Eigen::MatrixXd>(out.data(), ds, dt) = pd.U * Z * pd.V.transpose();
    return out;
  };
  SolverConfig seeded = cfg;
  seeded.projection = DirectionProjection::zeros_only;
  return solve(loss, d, data.lambda_l, x0, seeded, &h0);
}

namespace {

Eigen::MatrixXd solve_smooth_eigen(const ProblemData& data) {
  const PencilDecomposition pd = decompose(data);
  const Eigen::MatrixXd& den = pd.den;
  const double hi = den.cwiseAbs().maxCoeff();
  const double lo = den.minCoeff();
  if (!(hi > 0.0) || !(lo > hi / kMaxCondition))
    throw RankDeficiency("SMOOTH solve: singular or ill-conditioned " + dims_text(data) +
                         "; condition estimate " + std::to_string(lo > 0.0 ? hi / lo : INFINITY) +
                         " exceeds 1e12 (increase lambda_s/lambda_t or reduce M1/M2)");
  const Eigen::MatrixXd Z = (pd.U.transpose() * data.XtY * pd.V).cwiseQuotient(den);
  return pd.U * Z * pd.V.transpose();
}

Eigen::MatrixXd solve_smooth_dense(const ProblemData& data) {
  const Eigen::Index n = data.dim_s() * data.dim_t();
  if (n > kMaxDenseDim)
    throw InvalidArgument("dense SMOOTH solve limited to dimension 4096; the " + dims_text(data) +
                          " is too large, use the eigen method or smaller M1/M2");
  const Eigen::MatrixXd H = materialized_quadratic(data);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(H);
  const double rcond = lu.rcond();
  if (!(rcond > 1.0 / kMaxCondition))
    throw RankDeficiency("SMOOTH solve: singular or ill-conditioned " + dims_text(data) +
                         "; condition estimate " + std::to_string(rcond > 0.0 ? 1.0 / rcond : INFINITY) +
                         " exceeds 1e12 (increase lambda_s/lambda_t or reduce M1/M2)");
  const Eigen::Map<const Eigen::VectorXd> rhs(data.XtY.data(), n);
  const Eigen::VectorXd b = lu.solve(rhs);
  return Eigen::Map<const Eigen::MatrixXd>(b.data(), data.dim_s(), data.dim_t());
}

}  // namespace

Eigen::MatrixXd solve_smooth(const ProblemData& data, SmoothMethod method) {
  return method == SmoothMethod::dense ? solve_smooth_dense(data) : solve_smooth_eigen(data);
}

FitResult fit_from_prepared(const PreparedData& prepared, const PenaltyParams& params, const SolverConfig& cfg,
                            const std::optional<Eigen::MatrixXd>& B0) {
  const ProblemData data = problem_for(prepared, params.lambda_s, params.lambda_t, params.lambda_l);
  SolveResult res = solve_slasso(data, cfg, B0);
  Eigen::MatrixXd B = Eigen::Map<const Eigen::MatrixXd>(res.x.data(), data.dim_s(), data.dim_t());
  return FitResult{CoefficientSurface(std::move(B), prepared.setup.basis_s, prepared.setup.basis_t),
                   std::move(res.report),
                   prepared.mean_X,
                   prepared.mean_Y,
                   prepared.grid_x,
                   prepared.grid_y,
                   params};
}

FitResult fit_slasso(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params,
                     const SolverConfig& cfg) {
  return fit_from_prepared(prepare(X, Y, params), params, cfg);
}

FitResult fit_smooth(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params,
                     SmoothMethod method) {
  PenaltyParams p = params;
  p.lambda_l = 0.0;
  const PreparedData prepared = prepare(X, Y, p);
  const ProblemData data = problem_for(prepared, p.lambda_s, p.lambda_t, 0.0);
  Eigen::MatrixXd B = solve_smooth(data, method);
  SolveReport report;
  report.reason = Termination::converged_pg;
  report.pg_norm = smooth_gradient(data, B).lpNorm<Eigen::Infinity>();
  report.objective_trace.push_back(smooth_loss(data, B));
  return FitResult{CoefficientSurface(std::move(B), prepared.setup.basis_s, prepared.setup.basis_t),
                   std::move(report),
                   prepared.mean_X,
                   prepared.mean_Y,
                   prepared.grid_x,
                   prepared.grid_y,
                   p};
}

FitResult fit(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params,
              const SolverConfig& cfg) {
  if (params.lambda_l == 0.0) {
    try {
      return fit_smooth(X, Y, params);
    } catch (const RankDeficiency&) {
    }
  }
  return fit_slasso(X, Y, params, cfg);
}

double eval_surface(const CoefficientSurface& surface, double s, double t) { return surface.eval(s, t); }

FunctionalSample predict(const FitResult& fit, const FunctionalSample& X_new, const Grid& t_grid) {
  if (!X_new.grid.matches(fit.grid_x)) throw ShapeError("prediction predictors use a different grid than training");
  const FunctionalSample centered = apply_centering(X_new, fit.mean_X);
  const Eigen::MatrixXd xp = project(centered, fit.surface.basis_s());
  std::vector<double> pts(t_grid.points().begin(), t_grid.points().end());
  const auto& bt = fit.surface.basis_t();
  for (double& p : pts)
    if (std::abs(p - bt.lo()) < 1e-12 * (bt.hi() - bt.lo())) p = bt.lo();
    else if (std::abs(p - bt.hi()) < 1e-12 * (bt.hi() - bt.lo())) p = bt.hi();
  const Eigen::MatrixXd psi_t = bt.eval_matrix(pts);
  Eigen::MatrixXd yhat = xp * fit.surface.coefficients() * psi_t.transpose();
  yhat.rowwise() += interpolate_linear(fit.grid_y, fit.mean_Y, t_grid).transpose();
  return FunctionalSample(t_grid, std::move(yhat));
}

double null_region_fraction(const CoefficientSurface& surface, const Grid& grid_s, const Grid& grid_t, double tol) {
  if (!(tol >= 0.0)) throw InvalidArgument("null_region_fraction: tol must be non-negative");
  const Eigen::MatrixXd v = surface.eval_grid(grid_s, grid_t);
  const auto zeros = (v.array().abs() <= tol).count();
  return static_cast<double>(zeros) / static_cast<double>(v.size());
}

}  // namespace slasso
