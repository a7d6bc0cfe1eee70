#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace fcl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Single error type for every failure surfaced by the library. Messages name
/// the offending quantity so callers can annotate them (e.g. with a task id).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

enum class LossKind { squared, logistic };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

/// One supervised task. Columns of `features` are samples (d x n).
struct TaskData {
  Matrix features;
  Vector targets;
  LossKind loss_kind = LossKind::squared;
  std::string task_id;

  Eigen::Index dim() const { return features.rows(); }
  Eigen::Index samples() const { return features.cols(); }
};

/// Throws Error if the task violates its invariants (shape, finiteness,
/// +-1 labels for classification).
void validate(const TaskData& data);

/// Quadratic form v' M v.
inline double quad_form(const Vector& v, const Matrix& m) { return v.dot(m * v); }

}  // namespace fcl
