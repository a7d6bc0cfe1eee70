#include "fcl/baselines.hpp"

namespace fcl::baselines {

std::vector<task_learner::SingleTaskModel> run_stl(const datasets::TaskCorpus& corpus, double ridge) {
  task_learner::FitOptions options;
  options.ridge = ridge;
  std::vector<task_learner::SingleTaskModel> models;
  models.reserve(corpus.tasks.size());
  for (const auto& task : corpus.tasks) {
    try {
      models.push_back(task_learner::fit_single_task(task, options));
    } catch (const Error& e) {
      throw Error("STL on task '" + task.task_id + "': " + e.what());
    }
  }
  return models;
}

EngineRun run_engine(const datasets::TaskCorpus& corpus, const lifelong_engine::HyperParams& hyper) {
  EngineRun run{lifelong_engine::EngineState(hyper), {}};
  for (const auto& task : corpus.tasks) {
    auto [next, outcome] = lifelong_engine::learn_task(run.state, task);
    run.state = std::move(next);
    run.outcomes.push_back(std::move(outcome));
  }
  return run;
}

lifelong_engine::HyperParams ablation_params(lifelong_engine::HyperParams hyper) {
  hyper.lambda2 = 0.0;
  hyper.admission = false;
  return hyper;
}

EngineRun run_dictionary_ablation(const datasets::TaskCorpus& corpus, const lifelong_engine::HyperParams& hyper) {
  return run_engine(corpus, ablation_params(hyper));
}

}  // namespace fcl::baselines
