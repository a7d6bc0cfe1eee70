#pragma once

#include "fcl/types.hpp"

namespace fcl::task_learner {

/// Single-task fit: parameter vector, half-Hessian of the loss at it, and the
/// loss value there (ridge excluded).
struct SingleTaskModel {
  Vector w;
  Matrix omega;
  double loss_at_w = 0.0;
};

struct FitOptions {
  double ridge = 1e-4;
  double gradient_tol = 1e-8;
  int max_newton_iter = 200;
};

// Losses are normalized per sample:
//   squared:  (1/(2n)) ||X'w - y||^2
//   logistic: (1/n) sum log(1 + exp(-y_i w'x_i))
double loss_value(const TaskData& data, const Vector& point);
Vector loss_gradient(const TaskData& data, const Vector& point);

/// Half of the loss Hessian at `point`. For squared loss this is X X'/(2n)
/// regardless of the point.
Matrix hessian_at(const TaskData& data, const Vector& point);

/// Minimizes loss + (ridge/2)||w||^2. Squared loss is solved in closed form;
/// logistic loss by damped Newton. Omega excludes the ridge term.
SingleTaskModel fit_single_task(const TaskData& data, const FitOptions& options = {});

}  // namespace fcl::task_learner
