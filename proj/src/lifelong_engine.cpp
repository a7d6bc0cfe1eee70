#include "fcl/lifelong_engine.hpp"

#include <cmath>
#include <optional>

namespace fcl::lifelong_engine {

namespace ac = assignment_solver;
namespace kl = knowledge_libraries;
namespace sc = sparse_coder;
namespace tl = task_learner;

void validate(const HyperParams& hp) {
  const double scalars[] = {hp.lambda1, hp.lambda2, hp.alpha, hp.beta, hp.rho,
                            hp.gamma,   hp.mu,      hp.ridge, hp.outer_tol};
  for (double v : scalars) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("hyperparameters must be finite and non-negative");
  }
  if (hp.p < 1) throw Error("code dimension p must be positive");
  if (hp.max_outer < 1) throw Error("max_outer must be at least 1");
  if (!(hp.beta > 0.0) || !(hp.rho > 0.0)) throw Error("beta and rho must be positive");
  if (hp.admission && !(hp.lambda2 > 0.0 && hp.alpha > 0.0 && hp.gamma > 0.0))
    throw Error("lambda2, alpha and gamma must be positive when representative admission is on");
}

EngineState::EngineState(HyperParams hp) : config(std::move(hp)) {}

double alternation_objective(const sc::CodeProblem& prob, const Vector& code, const Vector& z, double d0,
                             double alpha) {
  const auto k = static_cast<Eigen::Index>(prob.reps.size());
  if (z.size() != k + 1) throw Error("dimension mismatch: assignment vs representatives");
  sc::CodeProblem weighted = prob;
  for (Eigen::Index i = 0; i < k; ++i) weighted.reps[static_cast<std::size_t>(i)].weight = z[i];
  return sc::composite_objective(weighted, code) + prob.lambda2 * (z[k] * d0 + alpha * z.lpNorm<1>());
}

namespace {

void set_weights(sc::CodeProblem& prob, const Vector& z) {
  for (std::size_t i = 0; i < prob.reps.size(); ++i) prob.reps[i].weight = z[static_cast<Eigen::Index>(i)];
}

TaskData merged_data(const TaskData& old_data, const TaskData& fresh) {
  if (old_data.dim() != fresh.dim())
    throw Error("dimension mismatch: new data has d=" + std::to_string(fresh.dim()) + ", task has d=" +
                std::to_string(old_data.dim()));
  if (old_data.loss_kind != fresh.loss_kind) throw Error("loss kind changed between presentations");
  TaskData merged;
  merged.task_id = old_data.task_id;
  merged.loss_kind = old_data.loss_kind;
  merged.features.resize(old_data.dim(), old_data.samples() + fresh.samples());
  merged.features << old_data.features, fresh.features;
  merged.targets.resize(old_data.samples() + fresh.samples());
  merged.targets << old_data.targets, fresh.targets;
  return merged;
}

std::pair<EngineState, TaskOutcome> learn_task_impl(const EngineState& state, const TaskData& incoming) {
  const HyperParams& hp = state.config;
  validate(hp);
  validate(incoming);

  EngineState next = state;
  TaskOutcome outcome;
  outcome.task_id = incoming.task_id;
  outcome.arrival = state.arrivals + 1;

  const auto known = state.per_task.find(incoming.task_id);
  outcome.new_task = known == state.per_task.end();
  const TaskData data = outcome.new_task ? incoming : merged_data(known->second.data, incoming);

  if (!next.initialized) {
    next.flib = kl::init_libraries(static_cast<int>(data.dim()), hp.p, hp.seed);
    next.initialized = true;
  } else if (data.dim() != next.flib.dim()) {
    throw Error("dimension mismatch: task has d=" + std::to_string(data.dim()) + ", libraries have d=" +
                std::to_string(next.flib.dim()));
  }

  tl::FitOptions fit;
  fit.ridge = hp.ridge;
  fit.max_newton_iter = hp.newton_max_iter;
  const tl::SingleTaskModel single = tl::fit_single_task(data, fit);

  const Matrix& decoder = state.initialized ? state.flib.decoder : next.flib.decoder;
  const Matrix& encoder = state.initialized ? state.flib.encoder : next.flib.encoder;

  sc::CodeProblem prob;
  prob.w = single.w;
  prob.omega = single.omega;
  prob.decoder = decoder;
  prob.encoder_image = sc::apply_activation(hp.phi, encoder * single.w);
  prob.lambda1 = hp.lambda1;
  prob.lambda2 = hp.lambda2;

  // Hessians at each representative use the decoder as of this arrival.
  std::vector<ac::RepresentativeView> views;
  for (const auto& rep : state.mlib.reps) {
    const Matrix omega_k = tl::hessian_at(data, decoder * rep.code);
    views.push_back({rep.code, omega_k});
    prob.reps.push_back({rep.code, omega_k, 0.0});
  }
  const auto k = static_cast<Eigen::Index>(views.size());
  outcome.reps_before = static_cast<int>(k);

  Vector z = Vector::Constant(k + 1, 1.0 / static_cast<double>(k + 1));
  set_weights(prob, z);

  ac::AdmmOptions admm;
  admm.lambda2 = hp.lambda2;
  admm.alpha = hp.alpha;
  admm.beta = hp.beta;
  admm.rho = hp.rho;
  admm.max_iter = hp.admm_max_iter;
  admm.tol = hp.admm_tol;

  std::optional<Vector> code;
  double d0 = 0.0;
  Vector distances;
  int rounds = 0;
  ac::Assignment assignment;
  assignment.z = z;
  // With no representatives, or lambda2 = 0, Z does not enter the code
  // problem and a single code step is the whole alternation.
  const bool alternate = k > 0 && hp.lambda2 > 0.0;
  for (int round = 0; round < hp.max_outer; ++round) {
    ++rounds;
    const sc::EncodeResult enc = sc::encode_task(prob, hp.encode, code);
    code = enc.code;
    if (k > 0) {
      distances = ac::representative_distances(decoder, *code, views);
      // d0 is held fixed for the rest of this task so the alternation
      // minimizes one objective.
      if (round == 0) d0 = ac::effective_outlier_weight(distances, hp.gamma);
    }
    bool z_settled = false;
    if (alternate) {
      const ac::Assignment candidate = ac::solve_assignment(distances, d0, admm);
      // An unchanged Z leaves the next code step where this one ended.
      z_settled = round > 0 && (candidate.z - z).lpNorm<Eigen::Infinity>() <= hp.admm_tol;
      const double current = alternation_objective(prob, *code, z, d0, hp.alpha);
      const double proposed = alternation_objective(prob, *code, candidate.z, d0, hp.alpha);
      if (proposed <= current) {
        z = candidate.z;
        assignment = candidate;
        set_weights(prob, z);
      }
    }
    const double objective = alternation_objective(prob, *code, z, d0, hp.alpha);
    outcome.objective_trace.push_back(objective);
    if (!alternate || z_settled) break;
    if (round > 0) {
      const double previous = outcome.objective_trace[outcome.objective_trace.size() - 2];
      if (std::abs(previous - objective) <= hp.outer_tol * std::abs(previous)) break;
    }
  }
  assignment.z = z;
  outcome.outer_rounds = rounds;
  outcome.outlier_weight = d0;
  outcome.distances = distances;
  outcome.assignment = assignment;

  if (outcome.new_task) {
    ++next.flib.tasks_seen;
    next.learn_order.push_back(data.task_id);
  }
  next.flib = kl::update_decoder(next.flib, *code, single.omega, prob.reps, hp.lambda2, single.w, hp.mu);
  next.flib = kl::update_encoder(next.flib, *code, single.w, hp.phi, hp.mu);

  if (hp.admission || next.mlib.empty()) {
    auto [mlib, admitted] = kl::admit_representative(next.mlib, *code, assignment, data.task_id, outcome.arrival);
    next.mlib = std::move(mlib);
    outcome.admitted = admitted;
  }

  next.per_task[data.task_id] = TaskRecord{data, *code, assignment, single};
  next.arrivals = outcome.arrival;
  return {std::move(next), std::move(outcome)};
}

const TaskRecord& record_for(const EngineState& state, const std::string& task_id) {
  const auto it = state.per_task.find(task_id);
  if (it == state.per_task.end()) throw Error("unknown task id '" + task_id + "'");
  return it->second;
}

}  // namespace

std::pair<EngineState, TaskOutcome> learn_task(const EngineState& state, const TaskData& data) {
  try {
    return learn_task_impl(state, data);
  } catch (const Error& e) {
    throw Error("task '" + data.task_id + "': " + e.what());
  }
}

Vector reconstruct_model(const EngineState& state, const std::string& task_id) {
  return state.flib.decoder * record_for(state, task_id).code;
}

Prediction predict(const EngineState& state, const std::string& task_id, const Matrix& features) {
  const TaskRecord& rec = record_for(state, task_id);
  const Vector weights = state.flib.decoder * rec.code;
  if (features.rows() != weights.size())
    throw Error("dimension mismatch: features have d=" + std::to_string(features.rows()) +
                ", model has d=" + std::to_string(weights.size()));
  Prediction out;
  out.scores = features.transpose() * weights;
  if (rec.data.loss_kind == LossKind::logistic) {
    out.labels = out.scores.unaryExpr([](double v) { return v > 0.0 ? 1.0 : -1.0; });
  }
  return out;
}

}  // namespace fcl::lifelong_engine
