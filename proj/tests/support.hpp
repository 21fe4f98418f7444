#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "slasso/basis.hpp"
#include "slasso/estimator.hpp"
#include "slasso/fda.hpp"
#include "slasso/operators.hpp"
#include "slasso/simlab.hpp"

namespace testing_support {

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = nd(rng);
  return m;
}

inline Eigen::MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng, double ridge = 0.5) {
  const Eigen::MatrixXd a = random_matrix(n, n, rng);
  return a * a.transpose() / static_cast<double>(n) + ridge * Eigen::MatrixXd::Identity(n, n);
}

/// Plain Kronecker product, written out so it does not share code with the
/// library.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Eigen::VectorXd vec(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

/// Composite trapezoid with n uniform points of a callable on [a, b].
template <class F>
double fine_trapezoid(F&& f, double a, double b, int n) {
  const double h = (b - a) / (n - 1);
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n - 1; ++i) s += f(a + h * i);
  return s * h;
}

/// Smooth random curves: a few random sines and cosines per curve.
inline slasso::FunctionalSample random_curves(int n, const slasso::Grid& grid, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd v(n, static_cast<Eigen::Index>(grid.size()));
  for (int i = 0; i < n; ++i) {
    double a[6];
    for (double& x : a) x = nd(rng);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double t = grid[j];
      v(i, static_cast<Eigen::Index>(j)) = a[0] + a[1] * std::sin(2 * M_PI * t) + a[2] * std::cos(2 * M_PI * t) +
                                           a[3] * std::sin(4 * M_PI * t) + a[4] * t + a[5] * std::cos(6 * M_PI * t);
    }
  }
  return slasso::FunctionalSample(grid, std::move(v));
}

/// Small regression problem with random data and the given penalties.
struct SmallProblem {
  slasso::PenaltyParams params;
  slasso::FunctionalSample X, Y;
  slasso::ProblemData data;
};

inline SmallProblem small_problem(int n, int M1, int M2, double ls, double lt, double ll, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const slasso::Grid g = slasso::Grid::uniform(0.0, 1.0, 61);
  SmallProblem p{{}, random_curves(n, g, rng), random_curves(n, g, rng), {}};
  p.params.M1 = M1;
  p.params.M2 = M2;
  p.params.lambda_s = ls;
  p.params.lambda_t = lt;
  p.params.lambda_l = ll;
  const slasso::PreparedData prep = slasso::prepare(p.X, p.Y, p.params);
  p.data = slasso::problem_for(prep, ls, lt, ll);
  return p;
}

// Responses lying exactly in the model span: Y_i(t) = (X_design B*)_i psi_t(t).
struct Noiseless {
  slasso::FunctionalSample X, Y;
  Eigen::MatrixXd Bstar;
  slasso::PenaltyParams params;
};

inline Noiseless noiseless(int n, int M1, int M2, int grid_points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const slasso::Grid g = slasso::Grid::uniform(0, 1, grid_points);
  Noiseless out;
  out.params.M1 = M1;
  out.params.M2 = M2;
  out.params.lambda_s = out.params.lambda_t = 1e-10;
  out.X = slasso::gen_covariates(n, 2 * (M1 + 4), g, rng);
  const slasso::BSplineBasis bs = slasso::make_basis(0, 1, 4, M1), bt = slasso::make_basis(0, 1, 4, M2);
  out.Bstar = random_matrix(bs.dim(), bt.dim(), rng);
  const Eigen::MatrixXd Xd = slasso::project(slasso::apply_centering(out.X, slasso::center(out.X).mean), bs);
  out.Y = slasso::FunctionalSample(g, Xd * out.Bstar * bt.eval_matrix(g.points()).transpose());
  return out;
}

/// Independent proximal-gradient (FISTA) oracle for
/// min_x 0.5 x^T A x - b^T x + C sum d_i |x_i|.
inline Eigen::VectorXd fista(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& d, double C,
                             double tol = 1e-13, int max_iter = 200000) {
  const double L = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().maxCoeff();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd y = x;
  double t = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd z = y - (A * y - b) / L;
    Eigen::VectorXd xn(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double thr = C * d[i] / L;
      xn[i] = z[i] > thr ? z[i] - thr : (z[i] < -thr ? z[i] + thr : 0.0);
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    const double step = (xn - x).lpNorm<Eigen::Infinity>();
    x = xn;
    t = tn;
    if (step < tol) break;
  }
  return x;
}

/// Max KKT violation of l(x) + C sum d_i |x_i| given the gradient of l.
inline double kkt_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& d, double C) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0)
      r = std::max(r, std::abs(g[i]) - C * d[i]);
    else
      r = std::max(r, std::abs(g[i] + C * d[i] * (x[i] > 0 ? 1.0 : -1.0)));
  }
  return std::max(r, 0.0);
}

}  // namespace testing_support
