#include "slasso/operators.hpp"

#include <string>

#include "slasso/error.hpp"

namespace slasso {

ProblemData make_problem(const DesignMatrices& design, const AxisMatrices& axis_s, const AxisMatrices& axis_t,
                         double lambda_s, double lambda_t, double lambda_l) {
  if (design.X.cols() != axis_s.gram.rows())
    throw ShapeError("predictor projection has " + std::to_string(design.X.cols()) + " columns, basis s has " +
                     std::to_string(axis_s.gram.rows()) + " functions");
  if (design.Y.cols() != axis_t.gram.rows())
    throw ShapeError("response projection has " + std::to_string(design.Y.cols()) + " columns, basis t has " +
                     std::to_string(axis_t.gram.rows()) + " functions");
  if (design.X.rows() != design.Y.rows()) throw ShapeError("design matrices disagree on the number of curves");
  if (!(lambda_s >= 0.0 && lambda_t >= 0.0 && lambda_l >= 0.0))
    throw InvalidArgument("penalty parameters must be non-negative");
  ProblemData d;
  d.XtX = design.X.transpose() * design.X;
  d.XtX = 0.5 * (d.XtX + d.XtX.transpose());
  d.XtY = design.X.transpose() * design.Y;
  d.y_sq = design.y_sq;
  d.W_s = axis_s.gram;
  d.W_t = axis_t.gram;
  d.R_s = axis_s.penalty;
  d.R_t = axis_t.penalty;
  d.w_s = axis_s.l1_weights;
  d.w_t = axis_t.l1_weights;
  d.lambda_s = lambda_s;
  d.lambda_t = lambda_t;
  d.lambda_l = lambda_l;
  d.m_s = axis_s.m;
  d.m_t = axis_t.m;
  return d;
}

void check_coefficient_shape(const ProblemData& data, const Eigen::MatrixXd& B) {
  if (B.rows() != data.dim_s() || B.cols() != data.dim_t())
    throw ShapeError("coefficient matrix is " + std::to_string(B.rows()) + "x" + std::to_string(B.cols()) +
                     ", expected " + std::to_string(data.dim_s()) + "x" + std::to_string(data.dim_t()));
}

Eigen::MatrixXd apply_quadratic(const ProblemData& data, const Eigen::MatrixXd& B) {
  check_coefficient_shape(data, B);
  Eigen::MatrixXd left = data.XtX * B;
  if (data.lambda_s != 0.0) left.noalias() += data.lambda_s * (data.R_s * B);
  Eigen::MatrixXd q = left * data.W_t;
  if (data.lambda_t != 0.0) q.noalias() += data.lambda_t * (data.W_s * B * data.R_t);
  return q;
}

double smooth_loss(const ProblemData& data, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd q = apply_quadratic(data, B);
  return data.y_sq - 2.0 * (data.XtY.array() * B.array()).sum() + (q.array() * B.array()).sum();
}

Eigen::MatrixXd smooth_gradient(const ProblemData& data, const Eigen::MatrixXd& B) {
  return 2.0 * (apply_quadratic(data, B) - data.XtY);
}

double smooth_loss_and_gradient(const ProblemData& data, const Eigen::MatrixXd& B, Eigen::MatrixXd& grad) {
  const Eigen::MatrixXd q = apply_quadratic(data, B);
  grad = 2.0 * (q - data.XtY);
  return data.y_sq + ((q - 2.0 * data.XtY).array() * B.array()).sum();
}

double l1_penalty(const ProblemData& data, const Eigen::MatrixXd& B) {
  check_coefficient_shape(data, B);
  if (data.lambda_l == 0.0) return 0.0;
  return data.lambda_l * data.w_s.dot(B.cwiseAbs() * data.w_t);
}

double objective(const ProblemData& data, const Eigen::MatrixXd& B) {
  return smooth_loss(data, B) + l1_penalty(data, B);
}

Eigen::VectorXd penalty_diagonal(const ProblemData& data) {
  const Eigen::MatrixXd outer = data.w_s * data.w_t.transpose();
  return Eigen::Map<const Eigen::VectorXd>(outer.data(), outer.size());
}

Eigen::MatrixXd materialized_quadratic(const ProblemData& data) {
  const Eigen::Index ds = data.dim_s();
  const Eigen::Index dt = data.dim_t();
  const Eigen::MatrixXd left = data.XtX + data.lambda_s * data.R_s;
  Eigen::MatrixXd h(ds * dt, ds * dt);
  for (Eigen::Index j = 0; j < dt; ++j)
    for (Eigen::Index l = 0; l < dt; ++l)
      h.block(j * ds, l * ds, ds, ds) = data.W_t(j, l) * left + (data.lambda_t * data.R_t(j, l)) * data.W_s;
  return h;
}

}  // namespace slasso
