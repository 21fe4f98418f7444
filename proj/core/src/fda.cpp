#include "slasso/fda.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slasso/error.hpp"
#include "slasso/quadrature.hpp"

namespace slasso {

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InvalidArgument("grid needs at least two points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) throw InvalidArgument("grid point " + std::to_string(i) + " is not finite");
    if (i > 0 && !(points_[i] > points_[i - 1]))
      throw InvalidArgument("grid points must be strictly increasing (index " + std::to_string(i) + ")");
  }
}

Grid Grid::uniform(double lo, double hi, int n_points) {
  if (n_points < 2) throw InvalidArgument("uniform grid needs at least two points");
  std::vector<double> p(n_points);
  const double step = (hi - lo) / (n_points - 1);
  for (int i = 0; i < n_points; ++i) p[i] = lo + i * step;
  p.back() = hi;
  return Grid(std::move(p));
}

bool Grid::matches(const Grid& other) const {
  if (size() != other.size()) return false;
  const double tol = 1e-12 * std::max(hi() - lo(), 1.0);
  for (std::size_t i = 0; i < size(); ++i)
    if (std::abs(points_[i] - other.points_[i]) > tol) return false;
  return true;
}

FunctionalSample::FunctionalSample(Grid g, Eigen::MatrixXd v) : grid(std::move(g)), values(std::move(v)) {
  if (values.rows() < 1) throw InvalidArgument("functional sample needs at least one curve");
  if (static_cast<std::size_t>(values.cols()) != grid.size())
    throw ShapeError("functional sample has " + std::to_string(values.cols()) + " columns but the grid has " +
                     std::to_string(grid.size()) + " points");
  if (!values.allFinite()) throw InvalidArgument("functional sample contains non-finite values");
}

FunctionalSample FunctionalSample::rows(std::span<const int> idx) const {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(idx.size()), values.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) v.row(static_cast<Eigen::Index>(r)) = values.row(idx[r]);
  return FunctionalSample(grid, std::move(v));
}

Centered center(const FunctionalSample& sample) {
  Eigen::VectorXd mean = sample.values.colwise().mean().transpose();
  return Centered{apply_centering(sample, mean), std::move(mean)};
}

FunctionalSample apply_centering(const FunctionalSample& sample, const Eigen::VectorXd& mean) {
  if (mean.size() != sample.values.cols())
    throw ShapeError("mean curve length " + std::to_string(mean.size()) + " does not match grid size " +
                     std::to_string(sample.values.cols()));
  return FunctionalSample(sample.grid, sample.values.rowwise() - mean.transpose());
}

double inner_product(std::span<const double> f, std::span<const double> g, const Grid& grid) {
  if (f.size() != grid.size() || g.size() != grid.size())
    throw ShapeError("inner_product: curve lengths must match the grid");
  std::vector<double> fg(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) fg[i] = f[i] * g[i];
  return trapezoid(fg, grid.points());
}

Eigen::MatrixXd project(const FunctionalSample& sample, const BSplineBasis& basis) {
  const Grid& grid = sample.grid;
  const double tol = 1e-9 * (basis.hi() - basis.lo());
  if (std::abs(grid.lo() - basis.lo()) > tol || std::abs(grid.hi() - basis.hi()) > tol)
    throw DomainError("sample grid [" + std::to_string(grid.lo()) + ", " + std::to_string(grid.hi()) +
                      "] does not span the basis domain [" + std::to_string(basis.lo()) + ", " +
                      std::to_string(basis.hi()) + "]");
  // Clamp endpoints that differ from the basis domain only by rounding.
  std::vector<double> pts(grid.points().begin(), grid.points().end());
  pts.front() = basis.lo();
  pts.back() = basis.hi();
  const Eigen::MatrixXd psi = basis.eval_matrix(pts);
  const std::vector<double> w = trapezoid_weights(grid.points());
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  return sample.values * (wv.asDiagonal() * psi);
}

DesignMatrices build_design(const FunctionalSample& x_sample, const FunctionalSample& y_sample,
                            const BSplineBasis& basis_s, const BSplineBasis& basis_t) {
  if (x_sample.n() != y_sample.n())
    throw ShapeError("predictor sample has " + std::to_string(x_sample.n()) + " curves, response has " +
                     std::to_string(y_sample.n()));
  DesignMatrices d;
  d.X = project(x_sample, basis_s);
  d.Y = project(y_sample, basis_t);
  const std::vector<double> w = trapezoid_weights(y_sample.grid.points());
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  d.y_sq = (y_sample.values.array().square().matrix() * wv).sum();
  return d;
}

Eigen::VectorXd interpolate_linear(const Grid& from, const Eigen::VectorXd& values, const Grid& to) {
  if (values.size() != static_cast<Eigen::Index>(from.size()))
    throw ShapeError("interpolate_linear: " + std::to_string(values.size()) + " values for a grid of " +
                     std::to_string(from.size()) + " points");
  if (from.matches(to)) return values;
  const auto xs = from.points();
  const double slack = 1e-12 * (from.hi() - from.lo());
  Eigen::VectorXd out(static_cast<Eigen::Index>(to.size()));
  for (std::size_t i = 0; i < to.size(); ++i) {
    const double t = to[i];
    if (t < from.lo() - slack || t > from.hi() + slack)
      throw DomainError("grid point " + std::to_string(t) + " outside [" + std::to_string(from.lo()) + ", " +
                        std::to_string(from.hi()) + "]");
    auto it = std::upper_bound(xs.begin(), xs.end(), t);
    const std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - xs.begin()), 1, xs.size() - 1);
    const std::size_t lo = hi - 1;
    const double w = std::clamp((t - xs[lo]) / (xs[hi] - xs[lo]), 0.0, 1.0);
    out[static_cast<Eigen::Index>(i)] = (1.0 - w) * values[lo] + w * values[hi];
  }
  return out;
}

FunctionalSample resample(const FunctionalSample& sample, const Grid& to) {
  if (sample.grid.matches(to)) return sample;
  Eigen::MatrixXd out(sample.n(), static_cast<Eigen::Index>(to.size()));
  for (Eigen::Index i = 0; i < sample.n(); ++i)
    out.row(i) = interpolate_linear(sample.grid, sample.values.row(i).transpose(), to).transpose();
  return FunctionalSample(to, std::move(out));
}

}  // namespace slasso
