#include "fcl/types.hpp"

namespace fcl {

std::string to_string(LossKind kind) {
  return kind == LossKind::squared ? "regression" : "classification";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "regression" || name == "squared") return LossKind::squared;
  if (name == "classification" || name == "logistic") return LossKind::logistic;
  throw Error("unknown problem kind '" + name + "'");
}

void validate(const TaskData& data) {
  const std::string where = "task '" + data.task_id + "': ";
  if (data.features.rows() < 1 || data.features.cols() < 1)
    throw Error(where + "features must be non-empty (d >= 1, n >= 1)");
  if (data.targets.size() != data.features.cols())
    throw Error(where + "targets length " + std::to_string(data.targets.size()) +
                " does not match sample count " + std::to_string(data.features.cols()));
  if (!data.features.allFinite()) throw Error(where + "non-finite feature entry");
  if (!data.targets.allFinite()) throw Error(where + "non-finite target entry");
  if (data.loss_kind == LossKind::logistic) {
    for (Eigen::Index i = 0; i < data.targets.size(); ++i) {
      const double y = data.targets[i];
      if (y != 1.0 && y != -1.0)
        throw Error(where + "classification label " + std::to_string(y) + " at sample " +
                    std::to_string(i) + " is not +1/-1");
    }
  }
}

}  // namespace fcl
