#pragma once

#include <vector>

#include "fcl/datasets.hpp"
#include "fcl/lifelong_engine.hpp"
#include "fcl/task_learner.hpp"

namespace fcl::baselines {

/// Independent per-task fits, in corpus order.
std::vector<task_learner::SingleTaskModel> run_stl(const datasets::TaskCorpus& corpus, double ridge);

struct EngineRun {
  lifelong_engine::EngineState state;
  std::vector<lifelong_engine::TaskOutcome> outcomes;
};

/// Streams the corpus tasks, in order, through a fresh engine.
EngineRun run_engine(const datasets::TaskCorpus& corpus, const lifelong_engine::HyperParams& hyper);

/// The engine with lambda2 = 0 and admission off: a shared-dictionary
/// lifelong learner without the representative terms.
lifelong_engine::HyperParams ablation_params(lifelong_engine::HyperParams hyper);
EngineRun run_dictionary_ablation(const datasets::TaskCorpus& corpus, const lifelong_engine::HyperParams& hyper);

}  // namespace fcl::baselines
