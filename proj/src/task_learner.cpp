#include "fcl/task_learner.hpp"

#include <cmath>
#include <sstream>

namespace fcl::task_learner {

namespace {

// log(1 + exp(-m)) without overflow.
double log1p_exp_neg(double m) {
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_point(const TaskData& data, const Vector& point) {
  if (point.size() != data.dim()) {
    std::ostringstream msg;
    msg << "task '" << data.task_id << "': point has length " << point.size()
        << " but features have dimension " << data.dim();
    throw Error(msg.str());
  }
  if (!point.allFinite()) throw Error("task '" + data.task_id + "': non-finite evaluation point");
}

double ridge_objective(const TaskData& data, const Vector& w, double ridge) {
  return loss_value(data, w) + 0.5 * ridge * w.squaredNorm();
}

}  // namespace

double loss_value(const TaskData& data, const Vector& point) {
  check_point(data, point);
  const double n = static_cast<double>(data.samples());
  const Vector margin = data.features.transpose() * point;
  if (data.loss_kind == LossKind::squared) {
    return (margin - data.targets).squaredNorm() / (2.0 * n);
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) total += log1p_exp_neg(data.targets[i] * margin[i]);
  return total / n;
}

Vector loss_gradient(const TaskData& data, const Vector& point) {
  check_point(data, point);
  const double n = static_cast<double>(data.samples());
  const Vector margin = data.features.transpose() * point;
  if (data.loss_kind == LossKind::squared) {
    return data.features * (margin - data.targets) / n;
  }
  Vector coeff(margin.size());
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    const double y = data.targets[i];
    coeff[i] = -y * sigmoid(-y * margin[i]);
  }
  return data.features * coeff / n;
}

Matrix hessian_at(const TaskData& data, const Vector& point) {
  check_point(data, point);
  const double n = static_cast<double>(data.samples());
  Matrix h;
  if (data.loss_kind == LossKind::squared) {
    h = data.features * data.features.transpose() / (2.0 * n);
  } else {
    const Vector margin = data.features.transpose() * point;
    Vector weight(margin.size());
    for (Eigen::Index i = 0; i < margin.size(); ++i) {
      const double s = sigmoid(margin[i]);
      weight[i] = s * (1.0 - s);
    }
    h = data.features * weight.asDiagonal() * data.features.transpose() / (2.0 * n);
  }
  // Symmetrize away round-off from the product.
  return 0.5 * (h + h.transpose());
}

SingleTaskModel fit_single_task(const TaskData& data, const FitOptions& options) {
  validate(data);
  if (options.ridge < 0) throw Error("ridge must be non-negative");
  const Eigen::Index d = data.dim();
  const double n = static_cast<double>(data.samples());
  const Matrix identity = Matrix::Identity(d, d);

  SingleTaskModel model;
  if (data.loss_kind == LossKind::squared) {
    Matrix normal = data.features * data.features.transpose() / n + options.ridge * identity;
    const Vector rhs = data.features * data.targets / n;
    Eigen::LDLT<Matrix> ldlt(normal);
    const double scale = std::max(normal.diagonal().cwiseAbs().maxCoeff(), 1.0);
    const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                          ldlt.vectorD().minCoeff() <= 1e-12 * scale;
    if (singular) {
      throw Error("task '" + data.task_id +
                  "': singular normal equations; use ridge > 0 for rank-deficient designs");
    }
    model.w = ldlt.solve(rhs);
  } else {
    Vector w = Vector::Zero(d);
    double objective = ridge_objective(data, w, options.ridge);
    double grad_norm = 0.0;
    bool converged = false;
    for (int iter = 0; iter < options.max_newton_iter; ++iter) {
      const Vector grad = loss_gradient(data, w) + options.ridge * w;
      grad_norm = grad.norm();
      if (grad_norm <= options.gradient_tol) {
        converged = true;
        break;
      }
      const Matrix hess = 2.0 * hessian_at(data, w) + options.ridge * identity;
      Eigen::LDLT<Matrix> ldlt(hess);
      Vector step = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite() || step.dot(grad) >= 0) step = -grad;
      // Armijo backtracking keeps the iteration from overshooting on flat
      // (near-separable) regions.
      double t = 1.0;
      const double slope = step.dot(grad);
      Vector trial = w + step;
      double trial_obj = ridge_objective(data, trial, options.ridge);
      while (trial_obj > objective + 1e-4 * t * slope && t > 1e-12) {
        t *= 0.5;
        trial = w + t * step;
        trial_obj = ridge_objective(data, trial, options.ridge);
      }
      w = trial;
      objective = trial_obj;
    }
    if (!converged) {
      const Vector grad = loss_gradient(data, w) + options.ridge * w;
      grad_norm = grad.norm();
      if (grad_norm > options.gradient_tol) {
        std::ostringstream msg;
        msg << "task '" << data.task_id << "': logistic solver did not converge after "
            << options.max_newton_iter << " iterations (gradient norm " << grad_norm << ")";
        throw Error(msg.str());
      }
    }
    model.w = w;
  }
  model.omega = hessian_at(data, model.w);
  model.loss_at_w = loss_value(data, model.w);
  return model;
}

}  // namespace fcl::task_learner
