#include "slasso/owlqn.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "slasso/error.hpp"

namespace slasso {

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

double weighted_l1(const Eigen::VectorXd& x, const Eigen::VectorXd& d) { return d.dot(x.cwiseAbs()); }

}  // namespace

void SolverConfig::validate() const {
  if (memory < 1) throw InvalidArgument("solver memory must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("line search gamma must lie in (0, 1)");
  if (max_iters < 0 || max_backtracks < 1) throw InvalidArgument("solver iteration limits must be positive");
  if (!(tol_obj > 0.0) || !(tol_pg > 0.0)) throw InvalidArgument("solver tolerances must be positive");
  if (obj_window < 1) throw InvalidArgument("objective window must be >= 1");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::converged_objective: return "converged-objective";
    case Termination::converged_pg: return "converged-pg";
    case Termination::max_iters: return "max-iters";
  }
  return "unknown";
}

Eigen::VectorXd pseudo_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& grad_l, const Eigen::VectorXd& d,
                                double C) {
  if (x.size() != grad_l.size() || x.size() != d.size())
    throw ShapeError("pseudo_gradient: vector lengths differ");
  if (!(C >= 0.0)) throw InvalidArgument("pseudo_gradient: C must be non-negative");
  Eigen::VectorXd pg(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(d[i] > 0.0)) throw InvalidArgument("pseudo_gradient: weight " + std::to_string(i) + " is not positive");
    const double thr = d[i] * C;
    const double g = grad_l[i];
    if (x[i] != 0.0)
      pg[i] = g + thr * sign(x[i]);
    else if (g < -thr)
      pg[i] = g + thr;
    else if (g > thr)
      pg[i] = g - thr;
    else
      pg[i] = 0.0;
  }
  return pg;
}

Eigen::VectorXd orthant_project(const Eigen::VectorXd& z, const Eigen::VectorXd& y) {
  if (z.size() != y.size()) throw ShapeError("orthant_project: vector lengths differ");
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = sign(z[i]) == sign(y[i]) ? z[i] : 0.0;
  return out;
}

Eigen::VectorXd choose_orthant(const Eigen::VectorXd& x, const Eigen::VectorXd& pg) {
  if (x.size() != pg.size()) throw ShapeError("choose_orthant: vector lengths differ");
  Eigen::VectorXd xi(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) xi[i] = x[i] != 0.0 ? sign(x[i]) : sign(-pg[i]);
  return xi;
}

LbfgsHistory::LbfgsHistory(int memory) : memory_(memory) {
  if (memory < 1) throw InvalidArgument("L-BFGS memory must be >= 1");
}

bool LbfgsHistory::push(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  const double sy = s.dot(y);
  if (!(sy > 1e-12 * s.norm() * y.norm())) return false;
  if (static_cast<int>(s_.size()) == memory_) {
    s_.pop_front();
    y_.pop_front();
    rho_.pop_front();
  }
  s_.push_back(s);
  y_.push_back(y);
  rho_.push_back(1.0 / sy);
  return true;
}

void LbfgsHistory::clear() {
  s_.clear();
  y_.clear();
  rho_.clear();
}

Eigen::VectorXd LbfgsHistory::apply(const Eigen::VectorXd& v, const InverseHessian* h0) const {
  Eigen::VectorXd q = v;
  const std::size_t m = s_.size();
  std::vector<double> alpha(m);
  for (std::size_t i = m; i-- > 0;) {
    alpha[i] = rho_[i] * s_[i].dot(q);
    q -= alpha[i] * y_[i];
  }
  if (h0)
    q = (*h0)(q);
  else if (m > 0)
    q *= s_.back().dot(y_.back()) / y_.back().squaredNorm();
  for (std::size_t i = 0; i < m; ++i) {
    const double beta = rho_[i] * y_[i].dot(q);
    q += (alpha[i] - beta) * s_[i];
  }
  return q;
}

Eigen::VectorXd lbfgs_direction(const LbfgsHistory& history, const Eigen::VectorXd& v, const InverseHessian* h0) {
  return history.apply(v, h0);
}

SolveResult solve(const SmoothObjective& l, const Eigen::VectorXd& d, double C, const Eigen::VectorXd& x0,
                  const SolverConfig& cfg, const InverseHessian* h0) {
  cfg.validate();
  if (d.size() != x0.size()) throw ShapeError("solve: weight and start vectors differ in length");
  if (!(C >= 0.0)) throw InvalidArgument("solve: C must be non-negative");
  if ((d.array() <= 0.0).any()) throw InvalidArgument("solve: weights must be positive");

  SolveResult out;
  SolveReport& rep = out.report;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(x.size());
  double fx = l(x, g) + C * weighted_l1(x, d);
  if (!std::isfinite(fx) || !g.allFinite()) throw NumericError("solve: objective or gradient not finite at start");
  rep.objective_trace.push_back(fx);

  LbfgsHistory history(cfg.memory);
  Eigen::VectorXd x_new(x.size());
  Eigen::VectorXd g_new(x.size());

  for (int k = 0;; ++k) {
    const Eigen::VectorXd pg = pseudo_gradient(x, g, d, C);
    rep.pg_norm = pg.lpNorm<Eigen::Infinity>();
    rep.iterations = k;
    if (rep.pg_norm <= cfg.tol_pg) {
      rep.reason = Termination::converged_pg;
      break;
    }
    const auto& trace = rep.objective_trace;
    if (k >= cfg.obj_window) {
      const double drop = trace[k - cfg.obj_window] - trace[k];
      if (drop <= cfg.tol_obj * std::max(std::abs(trace[k]), std::numeric_limits<double>::min())) {
        rep.reason = Termination::converged_objective;
        break;
      }
    }
    if (k >= cfg.max_iters) {
      rep.reason = Termination::max_iters;
      break;
    }

    const Eigen::VectorXd v = -pg;
    const Eigen::VectorXd xi = choose_orthant(x, pg);
    const double v_norm = v.norm();

    bool accepted = false;
    // First trial of the last attempt: slope and change, for the rounding check.
    double s1 = 0.0, d1 = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const InverseHessian* seed = attempt == 0 ? h0 : nullptr;
      if (attempt == 1) {
        // Retry along the steepest pseudo-gradient direction with fresh curvature.
        if (history.size() == 0 && !h0) break;
        history.clear();
      }
      Eigen::VectorXd p = lbfgs_direction(history, v, seed);
      if (cfg.projection == DirectionProjection::all || attempt == 1) {
        p = orthant_project(p, v);
      } else {
        for (Eigen::Index i = 0; i < p.size(); ++i)
          if (x[i] == 0.0 && sign(p[i]) != sign(v[i])) p[i] = 0.0;
      }
      if (p.isZero(0.0)) p = v;
      const bool has_curvature = seed || history.size() > 0;
      double alpha = (cfg.initial_step == InitialStep::unit && has_curvature) ? 1.0 : 1.0 / v_norm;
      s1 = 0.0;
      for (int bt = 0; bt <= cfg.max_backtracks; ++bt, alpha *= 0.5) {
        x_new = orthant_project(x + alpha * p, xi);
        const double l_new = l(x_new, g_new);
        const double f_new = l_new + C * weighted_l1(x_new, d);
        if (!std::isfinite(f_new)) continue;
        const double slope = (x_new - x).dot(v);
        if (!(slope > 0.0)) continue;
        if (s1 == 0.0) s1 = slope, d1 = f_new - fx;
        if (f_new <= fx - cfg.gamma * slope) {
          if (!g_new.allFinite()) throw NumericError("solve: gradient not finite at accepted step");
          accepted = true;
          fx = f_new;
          break;
        }
      }
    }
    if (!accepted && s1 > 0.0) {
      // Fit f(x + tau step) ~ fx - tau s1 + tau^2 q through the first trial.
      // If even the best decrease of that parabola is lost in the rounding
      // of fx, no line search can resolve progress: call it converged.
      const double q = d1 + s1;
      if (q > 0.0 && s1 * s1 / (4.0 * q) <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(fx)) {
        rep.reason = Termination::converged_objective;
        break;
      }
    }
    if (!accepted)
      throw SolverStall("solve: line search failed after " + std::to_string(cfg.max_backtracks) +
                            " backtracks at iteration " + std::to_string(k),
                        x);

    history.push(x_new - x, g_new - g);
    x.swap(x_new);
    g.swap(g_new);
    rep.objective_trace.push_back(fx);
  }
  out.x = std::move(x);
  return out;
}

}  // namespace slasso
