#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "slasso/basis.hpp"

namespace slasso {

/// Strictly increasing discretization points of one domain.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<double> points);

  static Grid uniform(double lo, double hi, int n_points);

  std::span<const double> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double lo() const { return points_.front(); }
  double hi() const { return points_.back(); }
  double operator[](std::size_t i) const { return points_[i]; }

  /// Equal within 1e-12 relative to the domain length.
  bool matches(const Grid& other) const;

 private:
  std::vector<double> points_;
};

/// n curves observed on one shared grid; row i of `values` is curve i.
struct FunctionalSample {
  Grid grid;
  Eigen::MatrixXd values;

  FunctionalSample() = default;
  FunctionalSample(Grid g, Eigen::MatrixXd v);

  Eigen::Index n() const { return values.rows(); }
  FunctionalSample rows(std::span<const int> idx) const;
};

/// Projections onto the two bases plus the response energy sum_i int Y_i^2.
struct DesignMatrices {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  double y_sq = 0.0;
};

struct Centered {
  FunctionalSample sample;
  Eigen::VectorXd mean;
};

/// Subtract the pointwise mean curve.
Centered center(const FunctionalSample& sample);

/// Subtract a given mean curve (e.g. the training mean from test data).
FunctionalSample apply_centering(const FunctionalSample& sample, const Eigen::VectorXd& mean);

/// Trapezoidal value of int f g over the grid.
double inner_product(std::span<const double> f, std::span<const double> g, const Grid& grid);

/// n x dim matrix of trapezoidal integrals int X_i psi_j over the sample grid.
Eigen::MatrixXd project(const FunctionalSample& sample, const BSplineBasis& basis);

/// Piecewise-linear interpolation of `values` (given on `from`) at the points
/// of `to`. DomainError for points outside [from.lo(), from.hi()].
Eigen::VectorXd interpolate_linear(const Grid& from, const Eigen::VectorXd& values, const Grid& to);

/// Every curve of the sample interpolated onto `to`.
FunctionalSample resample(const FunctionalSample& sample, const Grid& to);

DesignMatrices build_design(const FunctionalSample& x_sample, const FunctionalSample& y_sample,
                            const BSplineBasis& basis_s, const BSplineBasis& basis_t);

}  // namespace slasso
