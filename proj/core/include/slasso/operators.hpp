#pragma once

#include <Eigen/Dense>

#include "slasso/basis.hpp"
#include "slasso/fda.hpp"

namespace slasso {

/// Everything the S-LASSO objective depends on, in matrix form.
///
/// The coefficient matrix B is (dim_s x dim_t). Its vectorization stacks
/// columns (Eigen's native storage order), under which the quadratic operator
/// is W_t (x) X^T X and the L1 weight of entry (i, j) sits at position
/// j * dim_s + i with value w_s[i] * w_t[j].
struct ProblemData {
  Eigen::MatrixXd XtX;
  Eigen::MatrixXd XtY;
  double y_sq = 0.0;
  Eigen::MatrixXd W_s, W_t, R_s, R_t;
  Eigen::VectorXd w_s, w_t;
  double lambda_s = 0.0;
  double lambda_t = 0.0;
  double lambda_l = 0.0;
  int m_s = 2;
  int m_t = 2;

  Eigen::Index dim_s() const { return XtX.rows(); }
  Eigen::Index dim_t() const { return W_t.rows(); }
};

ProblemData make_problem(const DesignMatrices& design, const AxisMatrices& axis_s, const AxisMatrices& axis_t,
                         double lambda_s, double lambda_t, double lambda_l);

/// Throws ShapeError unless B is dim_s x dim_t.
void check_coefficient_shape(const ProblemData& data, const Eigen::MatrixXd& B);

/// (X^T X + lambda_s R_s) B W_t + lambda_t W_s B R_t, i.e. half the Hessian
/// of the smooth part applied to B.
Eigen::MatrixXd apply_quadratic(const ProblemData& data, const Eigen::MatrixXd& B);

/// Residual sum of squares plus both roughness penalties.
double smooth_loss(const ProblemData& data, const Eigen::MatrixXd& B);

Eigen::MatrixXd smooth_gradient(const ProblemData& data, const Eigen::MatrixXd& B);

/// Value and gradient sharing the one operator application.
double smooth_loss_and_gradient(const ProblemData& data, const Eigen::MatrixXd& B, Eigen::MatrixXd& grad);

/// lambda_L * w_s^T |B| w_t.
double l1_penalty(const ProblemData& data, const Eigen::MatrixXd& B);

double objective(const ProblemData& data, const Eigen::MatrixXd& B);

/// w_t (x) w_s: the L1 weight of every entry of vec(B).
Eigen::VectorXd penalty_diagonal(const ProblemData& data);

/// Dense (dim_s*dim_t)^2 matrix of the quadratic form. Only for the direct
/// SMOOTH solve on small problems.
Eigen::MatrixXd materialized_quadratic(const ProblemData& data);

}  // namespace slasso
