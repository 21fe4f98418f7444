#include "slasso/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>

#include "slasso/error.hpp"
#include "slasso/parallel.hpp"
#include "slasso/quadrature.hpp"

namespace slasso {

bool R2Curve::any_undefined() const { return std::find(undefined.begin(), undefined.end(), true) != undefined.end(); }

R2Curve r2_pointwise(const FunctionalSample& Y, const FunctionalSample& Y_hat) {
  if (Y.n() != Y_hat.n()) throw ShapeError("r2_pointwise: response and fitted samples differ in size");
  if (!Y.grid.matches(Y_hat.grid)) throw ShapeError("r2_pointwise: response and fitted samples use different grids");
  if (Y.n() < 3) throw InvalidArgument("r2_pointwise: need at least 3 curves");
  // Shifted by the first curve so identical columns give exactly zero.
  const auto var = [](const Eigen::MatrixXd& v) {
    const Eigen::MatrixXd d = v.rowwise() - v.row(0);
    const Eigen::RowVectorXd mean = d.colwise().mean();
    return ((d.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(v.rows() - 1)).transpose().eval();
  };
  const Eigen::VectorXd vy = var(Y.values);
  const Eigen::VectorXd vf = var(Y_hat.values);
  R2Curve out{Y.grid, Eigen::VectorXd::Zero(vy.size()), std::vector<bool>(static_cast<std::size_t>(vy.size()))};
  // Relative to the largest variance so rounding in a constant column counts as zero.
  const double scale = vy.maxCoeff();
  for (Eigen::Index j = 0; j < vy.size(); ++j) {
    if (!(vy[j] > 1e-14 * scale)) {
      out.undefined[static_cast<std::size_t>(j)] = true;
      continue;
    }
    out.values[j] = std::max(0.0, vf[j] / vy[j]);
  }
  return out;
}

R2Curve r2_pointwise(const FitResult& fit, const FunctionalSample& X, const FunctionalSample& Y, const Grid& t_grid) {
  if (X.n() != Y.n()) throw ShapeError("r2_pointwise: X has " + std::to_string(X.n()) + " curves, Y has " +
                                       std::to_string(Y.n()));
  return r2_pointwise(resample(Y, t_grid), predict(fit, X, t_grid));
}

double r2_global(const R2Curve& curve) {
  const std::span<const double> y(curve.values.data(), static_cast<std::size_t>(curve.values.size()));
  return trapezoid(y, curve.grid.points()) / (curve.grid.hi() - curve.grid.lo());
}

double r2_global(const FitResult& fit, const FunctionalSample& X, const FunctionalSample& Y) {
  return r2_global(r2_pointwise(fit, X, Y, Y.grid));
}

double permutation_p_value(double observed, const std::vector<double>& permuted) {
  const auto hits = std::count_if(permuted.begin(), permuted.end(), [&](double v) { return v >= observed; });
  return (1.0 + static_cast<double>(hits)) / (static_cast<double>(permuted.size()) + 1.0);
}

double empirical_percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("empirical_percentile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("empirical_percentile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * values[lo] + w * values[hi];
}

std::vector<int> permutation_indices(int n, std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x9e37u};
  std::mt19937_64 rng(seq);
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

namespace {

// Curve indices sorted lexicographically by (X row, Y row). Permutations are
// applied in this order so relabelling the input does not change which
// response gets paired with which predictor.
std::vector<int> canonical_order(const FunctionalSample& X, const FunctionalSample& Y) {
  std::vector<int> idx(static_cast<std::size_t>(X.n()));
  std::iota(idx.begin(), idx.end(), 0);
  const auto less = [](const Eigen::MatrixXd& m, int a, int b) -> int {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(a, j) < m(b, j)) return -1;
      if (m(a, j) > m(b, j)) return 1;
    }
    return 0;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const int c = less(X.values, a, b);
    return c != 0 ? c < 0 : less(Y.values, a, b) < 0;
  });
  return idx;
}

}  // namespace

PermutationTest permutation_test(const FunctionalSample& X, const FunctionalSample& Y, const PenaltyParams& params,
                                 int n_perm, std::uint64_t seed, const SolverConfig& cfg, double percentile,
                                 int jobs) {
  if (n_perm < 1) throw InvalidArgument("permutation test needs n_perm >= 1");
  if (!(percentile >= 0.0 && percentile <= 1.0)) throw InvalidArgument("percentile must lie in [0, 1]");
  params.validate();

  if (X.n() != Y.n()) throw ShapeError("permutation test: X has " + std::to_string(X.n()) + " curves, Y has " +
                                       std::to_string(Y.n()));
  const R2Curve observed = r2_pointwise(fit(X, Y, params, cfg), X, Y, Y.grid);
  const std::vector<int> canon = canonical_order(X, Y);
  const auto T = static_cast<Eigen::Index>(Y.grid.size());
  Eigen::MatrixXd curves(n_perm, T);
  std::vector<double> globals(static_cast<std::size_t>(n_perm));
  parallel_for(static_cast<std::size_t>(n_perm), jobs, [&](std::size_t k) {
    try {
      const std::vector<int> perm = permutation_indices(static_cast<int>(Y.n()), seed, static_cast<int>(k));
      std::vector<int> rows(perm.size());
      for (std::size_t i = 0; i < perm.size(); ++i) rows[canon[i]] = canon[perm[i]];
      const FunctionalSample Yp = Y.rows(rows);
      const R2Curve c = r2_pointwise(fit(X, Yp, params, cfg), X, Yp, Y.grid);
      curves.row(static_cast<Eigen::Index>(k)) = c.values.transpose();
      globals[k] = r2_global(c);
    } catch (...) {
      rethrow_tagged("permutation " + std::to_string(k) + ": ");
    }
  });

  PermutationTest out;
  out.global.observed = r2_global(observed);
  out.global.permuted = globals;
  out.global.p_value = permutation_p_value(out.global.observed, globals);
  out.global.n_perm = n_perm;
  out.global.seed = seed;

  PointwisePermutationResult& pw = out.pointwise;
  pw.grid = Y.grid;
  pw.observed = observed.values;
  pw.envelope.resize(T);
  pw.exceeds.assign(static_cast<std::size_t>(T), false);
  for (Eigen::Index j = 0; j < T; ++j) {
    const Eigen::VectorXd col = curves.col(j);
    pw.envelope[j] = empirical_percentile(std::vector<double>(col.data(), col.data() + col.size()), percentile);
    pw.exceeds[static_cast<std::size_t>(j)] = pw.observed[j] > pw.envelope[j];
  }
  pw.permuted = std::move(curves);
  pw.percentile = percentile;
  pw.n_perm = n_perm;
  pw.seed = seed;
  return out;
}

PermutationResult permutation_test_global(const FunctionalSample& X, const FunctionalSample& Y,
                                          const PenaltyParams& params, int n_perm, std::uint64_t seed,
                                          const SolverConfig& cfg, int jobs) {
  return permutation_test(X, Y, params, n_perm, seed, cfg, 0.95, jobs).global;
}

PointwisePermutationResult permutation_test_pointwise(const FunctionalSample& X, const FunctionalSample& Y,
                                                      const PenaltyParams& params, int n_perm, std::uint64_t seed,
                                                      const SolverConfig& cfg, double percentile, int jobs) {
  return std::move(permutation_test(X, Y, params, n_perm, seed, cfg, percentile, jobs).pointwise);
}

}  // namespace slasso
