#pragma once

#include <span>
#include <vector>

namespace slasso {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree
/// up to 2n-1.
QuadratureRule gauss_legendre(int n);

/// The same rule mapped onto [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

/// Composite trapezoidal rule for samples `f` taken at the points `x`.
double trapezoid(std::span<const double> f, std::span<const double> x);

/// Trapezoidal weights for the grid `x`: sum_i w_i f(x_i) is the trapezoid
/// value of f. Lets callers integrate many curves with one dot product each.
std::vector<double> trapezoid_weights(std::span<const double> x);

}  // namespace slasso
