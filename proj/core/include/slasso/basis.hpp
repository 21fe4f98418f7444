#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace slasso {

/// Knots of one axis: the two domain endpoints plus the interior break points.
struct KnotVector {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> interior;

  /// `n_interior` equally spaced interior knots strictly inside (lo, hi).
  static KnotVector uniform(double lo, double hi, int n_interior);

  double length() const { return hi - lo; }
};

/// B-spline basis of order k (degree k-1) on a knot vector.
///
/// The extended partition repeats each boundary knot k times, so it holds
/// M + 2k values and the basis has M + k functions. Function i is supported
/// on [extended[i], extended[i+k]]. At x == hi the last function equals one
/// (the final span is closed on the right).
class BSplineBasis {
 public:
  BSplineBasis(int order, KnotVector knots);

  int order() const { return order_; }
  int dim() const { return static_cast<int>(extended_.size()) - order_; }
  double lo() const { return knots_.lo; }
  double hi() const { return knots_.hi; }
  const KnotVector& knots() const { return knots_; }
  const std::vector<double>& extended() const { return extended_; }

  /// All `dim()` basis values at x. Throws DomainError outside [lo, hi].
  Eigen::VectorXd eval(double x) const;

  /// The `order()` possibly non-zero values at x, written to `out`.
  /// Returns the index of the basis function corresponding to out[0].
  int eval_nonzero(double x, std::span<double> out) const;

  /// m-th derivative of every basis function at x.
  Eigen::VectorXd eval_derivative(double x, int m) const;

  /// Row r holds eval(xs[r]).
  Eigen::MatrixXd eval_matrix(std::span<const double> xs) const;

  /// Coefficient map of the m-th derivative: if f = sum_j c_j psi_j then
  /// D^m f = sum_r (D c)_r phi_r where phi is `derivative_basis(m)`.
  Eigen::MatrixXd derivative_map(int m) const;

  /// Order k-m basis on the same knots (extended partition trimmed by m at
  /// each end); the range of `derivative_map(m)`.
  BSplineBasis derivative_basis(int m) const;

  /// Index of the knot span containing x; always a span of positive length.
  int find_span(double x) const;

  /// Non-zero values at x given its span, without the domain check.
  void basis_funs(int span, double x, std::span<double> out) const;

 private:
  int order_;
  KnotVector knots_;
  std::vector<double> extended_;
};

/// Equally spaced basis. dim = n_interior + order.
BSplineBasis make_basis(double lo, double hi, int order, int n_interior);

/// W_ij = integral of psi_i psi_j, by Gauss-Legendre with `order` nodes per
/// knot span (exact for products of two splines of this order).
Eigen::MatrixXd gram_matrix(const BSplineBasis& basis);

/// R_ij = integral of (D^m psi_i)(D^m psi_j). Built as D^T G D with D the
/// derivative coefficient map and G the Gram matrix of the order k-m basis.
/// Requires 1 <= m <= order-1.
Eigen::MatrixXd derivative_penalty_matrix(const BSplineBasis& basis, int m);

/// w_i = (extended[i+k] - extended[i]) / k, which equals the integral of psi_i.
Eigen::VectorXd l1_weights(const BSplineBasis& basis);

/// Everything the regression needs from one axis.
struct AxisMatrices {
  Eigen::MatrixXd gram;
  Eigen::MatrixXd penalty;
  Eigen::VectorXd l1_weights;
  int m = 2;
};

AxisMatrices axis_matrices(const BSplineBasis& basis, int m);

}  // namespace slasso
