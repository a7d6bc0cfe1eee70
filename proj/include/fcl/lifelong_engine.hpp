#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fcl/assignment_solver.hpp"
#include "fcl/knowledge_libraries.hpp"
#include "fcl/sparse_coder.hpp"
#include "fcl/task_learner.hpp"
#include "fcl/types.hpp"

namespace fcl::lifelong_engine {

struct HyperParams {
  double lambda1 = 1e-3;
  double lambda2 = 0.03;
  double alpha = 0.01;
  double beta = 1.0;
  double rho = 1.0;
  double gamma = 0.2;
  double mu = 6e-4;
  double ridge = 1e-4;
  int p = 24;
  sparse_coder::Activation phi = sparse_coder::Activation::identity;
  int max_outer = 20;
  double outer_tol = 1e-5;
  sparse_coder::EncodeOptions encode{};
  int admm_max_iter = 2000;
  double admm_tol = 1e-6;
  int newton_max_iter = 200;
  /// When false, only the first task enters the model library.
  bool admission = true;
  std::uint64_t seed = 0;
};

/// Throws Error on negative scalars, or non-positive lambda2/alpha/beta/rho/gamma
/// while admission is on. lambda2 = 0 is the dictionary-only ablation.
void validate(const HyperParams& hp);

struct TaskRecord {
  TaskData data;  // accumulated training data
  Vector code;
  assignment_solver::Assignment assignment;
  task_learner::SingleTaskModel single;
};

struct TaskOutcome {
  std::string task_id;
  int arrival = 0;  // 1-based position in the stream
  bool new_task = true;
  bool admitted = false;
  int reps_before = 0;
  int outer_rounds = 0;
  double outlier_weight = 0.0;
  Vector distances;
  assignment_solver::Assignment assignment;
  /// Alternation objective after each outer round.
  std::vector<double> objective_trace;
};

struct EngineState {
  HyperParams config;
  bool initialized = false;
  int arrivals = 0;
  knowledge_libraries::FeatureLibrary flib;
  knowledge_libraries::ModelLibrary mlib;
  std::map<std::string, TaskRecord> per_task;
  std::vector<std::string> learn_order;  // first arrival of each task

  explicit EngineState(HyperParams hp = {});
  int representative_count() const { return static_cast<int>(mlib.size()); }
};

/// Learns one task (new, or more data for a known one) and updates both
/// libraries. Sub-module errors are rethrown prefixed with the task id.
std::pair<EngineState, TaskOutcome> learn_task(const EngineState& state, const TaskData& data);

struct Prediction {
  Vector scores;
  Vector labels;  // sign(scores) for classification tasks, empty for regression
};

/// Scores X' D s_t with the current decoder, so later tasks transfer back.
Prediction predict(const EngineState& state, const std::string& task_id, const Matrix& features);

/// D s_t for the current decoder.
Vector reconstruct_model(const EngineState& state, const std::string& task_id);

/// Alternation objective for fixed (s, Z):
///   ||w - Ds||^2_Omega + ||s - phi(Lw)||^2 + lambda1 ||s||_1
///   + lambda2 (sum_k z_k d_k(s) + z_out d0 + alpha ||Z||_1)
double alternation_objective(const sparse_coder::CodeProblem& prob, const Vector& code, const Vector& z,
                             double d0, double alpha);

}  // namespace fcl::lifelong_engine
