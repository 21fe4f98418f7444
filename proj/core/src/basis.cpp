#include "slasso/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slasso/error.hpp"
#include "slasso/quadrature.hpp"

namespace slasso {

KnotVector KnotVector::uniform(double lo, double hi, int n_interior) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw InvalidArgument("knot vector: need finite lo < hi");
  if (n_interior < 0) throw InvalidArgument("knot vector: negative interior knot count");
  KnotVector kv{lo, hi, {}};
  kv.interior.reserve(n_interior);
  const double step = (hi - lo) / (n_interior + 1);
  for (int i = 1; i <= n_interior; ++i) kv.interior.push_back(lo + i * step);
  return kv;
}

BSplineBasis::BSplineBasis(int order, KnotVector knots) : order_(order), knots_(std::move(knots)) {
  if (order_ < 1 || order_ > 63) throw InvalidArgument("B-spline order must be in [1, 63]");
  if (!(knots_.hi > knots_.lo) || !std::isfinite(knots_.lo) || !std::isfinite(knots_.hi))
    throw InvalidArgument("B-spline domain needs finite lo < hi");
  int run = 1;
  for (std::size_t i = 0; i < knots_.interior.size(); ++i) {
    const double x = knots_.interior[i];
    if (!(x > knots_.lo && x < knots_.hi))
      throw InvalidArgument("interior knot " + std::to_string(i) + " not strictly inside the domain");
    if (i > 0) {
      if (x < knots_.interior[i - 1]) throw InvalidArgument("interior knots must be non-decreasing");
      run = (x == knots_.interior[i - 1]) ? run + 1 : 1;
      if (run > order_) throw InvalidArgument("interior knot multiplicity exceeds the spline order");
    }
  }
  extended_.reserve(knots_.interior.size() + 2 * order_);
  extended_.insert(extended_.end(), order_, knots_.lo);
  extended_.insert(extended_.end(), knots_.interior.begin(), knots_.interior.end());
  extended_.insert(extended_.end(), order_, knots_.hi);
}

int BSplineBasis::find_span(double x) const {
  const int last = dim() - 1;
  auto it = std::upper_bound(extended_.begin(), extended_.end(), x);
  int span = static_cast<int>(it - extended_.begin()) - 1;
  span = std::clamp(span, order_ - 1, last);
  // A repeated interior knot leaves empty spans; step back to a real one.
  while (span > order_ - 1 && extended_[span] == extended_[span + 1]) --span;
  return span;
}

void BSplineBasis::basis_funs(int span, double x, std::span<double> out) const {
  const int p = order_ - 1;
  double left[64];
  double right[64];
  out[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - extended_[span + 1 - j];
    right[j] = extended_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    out[j] = saved;
  }
}

int BSplineBasis::eval_nonzero(double x, std::span<double> out) const {
  if (!(x >= knots_.lo && x <= knots_.hi))
    throw DomainError("B-spline evaluation point " + std::to_string(x) + " outside [" +
                      std::to_string(knots_.lo) + ", " + std::to_string(knots_.hi) + "]");
  const int span = find_span(x);
  basis_funs(span, x, out);
  return span - (order_ - 1);
}

Eigen::VectorXd BSplineBasis::eval(double x) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim());
  std::vector<double> nz(order_);
  const int first = eval_nonzero(x, nz);
  for (int r = 0; r < order_; ++r) v[first + r] = nz[r];
  return v;
}

Eigen::MatrixXd BSplineBasis::eval_matrix(std::span<const double> xs) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()), dim());
  std::vector<double> nz(order_);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int first = eval_nonzero(xs[i], nz);
    for (int r = 0; r < order_; ++r) m(static_cast<Eigen::Index>(i), first + r) = nz[r];
  }
  return m;
}

namespace {

// One differentiation step for order q on extended partition `ext`:
// returns the (n-1) x n coefficient map into the order q-1 basis.
Eigen::MatrixXd derivative_step(const std::vector<double>& ext, int q) {
  const int n = static_cast<int>(ext.size()) - q;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 1, n);
  for (int j = 0; j < n; ++j) {
    if (j >= 1) {
      const double den = ext[j + q - 1] - ext[j];
      if (den > 0.0) d(j - 1, j) += (q - 1) / den;
    }
    if (j <= n - 2) {
      const double den = ext[j + q] - ext[j + 1];
      if (den > 0.0) d(j, j) -= (q - 1) / den;
    }
  }
  return d;
}

}  // namespace

Eigen::MatrixXd BSplineBasis::derivative_map(int m) const {
  if (m < 0 || m >= order_)
    throw InvalidArgument("derivative order " + std::to_string(m) + " must be below the spline order " +
                          std::to_string(order_));
  Eigen::MatrixXd total = Eigen::MatrixXd::Identity(dim(), dim());
  std::vector<double> ext = extended_;
  for (int step = 0; step < m; ++step) {
    const int q = order_ - step;
    total = derivative_step(ext, q) * total;
    ext = std::vector<double>(ext.begin() + 1, ext.end() - 1);
  }
  return total;
}

BSplineBasis BSplineBasis::derivative_basis(int m) const {
  if (m < 0 || m >= order_) throw InvalidArgument("derivative order must be below the spline order");
  return BSplineBasis(order_ - m, knots_);
}

Eigen::VectorXd BSplineBasis::eval_derivative(double x, int m) const {
  if (m == 0) return eval(x);
  const Eigen::MatrixXd d = derivative_map(m);
  return d.transpose() * derivative_basis(m).eval(x);
}

BSplineBasis make_basis(double lo, double hi, int order, int n_interior) {
  if (!(hi > lo)) throw InvalidArgument("make_basis: non-positive domain span");
  if (order < 1) throw InvalidArgument("make_basis: order must be >= 1");
  if (n_interior < 0) throw InvalidArgument("make_basis: negative interior knot count");
  return BSplineBasis(order, KnotVector::uniform(lo, hi, n_interior));
}

Eigen::MatrixXd gram_matrix(const BSplineBasis& basis) {
  const int k = basis.order();
  const int n = basis.dim();
  const auto& ext = basis.extended();
  const QuadratureRule ref = gauss_legendre(k);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> nz(k);
  for (int span = k - 1; span <= n - 1; ++span) {
    const double a = ext[span];
    const double b = ext[span + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const int first = span - (k - 1);
    for (int q = 0; q < k; ++q) {
      basis.basis_funs(span, mid + half * ref.nodes[q], nz);
      const double wq = half * ref.weights[q];
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) w(first + r, first + c) += wq * (nz[r] * nz[c]);
    }
  }
  return w;
}

Eigen::MatrixXd derivative_penalty_matrix(const BSplineBasis& basis, int m) {
  if (m < 1 || m > basis.order() - 1)
    throw InvalidArgument("penalty order exceeds spline smoothness: need 1 <= m <= order-1 (m=" +
                          std::to_string(m) + ", order=" + std::to_string(basis.order()) + ")");
  const Eigen::MatrixXd d = basis.derivative_map(m);
  const Eigen::MatrixXd g = gram_matrix(basis.derivative_basis(m));
  Eigen::MatrixXd r = d.transpose() * g * d;
  return 0.5 * (r + r.transpose());
}

Eigen::VectorXd l1_weights(const BSplineBasis& basis) {
  const int k = basis.order();
  const auto& ext = basis.extended();
  Eigen::VectorXd w(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) w[i] = (ext[i + k] - ext[i]) / k;
  return w;
}

AxisMatrices axis_matrices(const BSplineBasis& basis, int m) {
  return AxisMatrices{gram_matrix(basis), derivative_penalty_matrix(basis, m), l1_weights(basis), m};
}

}  // namespace slasso
