#include <doctest.h>

#include <cmath>
#include <vector>

#include "fcl/baselines.hpp"
#include "fcl/datasets.hpp"
#include "fcl/experiment.hpp"
#include "fcl/lifelong_engine.hpp"
#include "test_support.hpp"

using namespace fcl;
using namespace fcl::lifelong_engine;
using fcl::testing::Rng;

namespace {

datasets::TaskCorpus small_stream(std::uint64_t seed, int tasks_per_cluster = 3) {
  datasets::DisjointParams params;
  params.tasks_per_cluster = tasks_per_cluster;
  params.d = 12;
  params.n_per_task = 30;
  datasets::TaskCorpus corpus = datasets::generate_disjoint(seed, params);
  datasets::Split split = datasets::split_corpus(corpus, 0.5, seed);
  datasets::standardize_targets(split);
  return split.train;
}

HyperParams small_hyper() {
  HyperParams hp;
  hp.p = 6;
  return hp;
}

double train_rmse(const Vector& w, const TaskData& t) {
  return std::sqrt((t.features.transpose() * w - t.targets).squaredNorm() / static_cast<double>(t.samples()));
}

}  // namespace

TEST_CASE("a single task initializes both libraries") {
  Rng rng(1);
  const TaskData t = fcl::testing::regression_task(rng, 8, 20, 0.1, "only");
  const auto [state, outcome] = learn_task(EngineState(small_hyper()), t);
  CHECK(state.representative_count() == 1);
  CHECK(state.per_task.size() == 1);
  CHECK(state.flib.tasks_seen == 1);
  CHECK(outcome.admitted);
  CHECK(outcome.outer_rounds == 1);
  const TaskRecord& rec = state.per_task.at("only");
  CHECK(rec.code.size() == 6);
  const Vector r = rec.single.w - reconstruct_model(state, "only");
  CHECK(std::isfinite(r.dot(rec.single.omega * r)));
}

TEST_CASE("a repeated task is absorbed by its own representative") {
  Rng rng(2);
  const datasets::TaskCorpus corpus = small_stream(4);
  EngineState state(small_hyper());
  for (const auto& t : corpus.tasks) state = learn_task(state, t).first;
  TaskData copy = corpus.tasks.back();
  copy.task_id = "copy";
  TaskData original = corpus.tasks.back();
  original.task_id = "original";
  state = learn_task(state, original).first;
  const int before = state.representative_count();
  const auto [after, outcome] = learn_task(state, copy);
  CHECK(outcome.outer_rounds <= 2);
  CHECK_FALSE(outcome.admitted);
  CHECK(after.representative_count() == before);
}

TEST_CASE("property: stream invariants") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const datasets::TaskCorpus corpus = small_stream(seed);
    EngineState state(small_hyper());
    std::vector<knowledge_libraries::Representative> snapshot;
    int previous_k = 0;
    for (const auto& t : corpus.tasks) {
      auto [next, outcome] = learn_task(state, t);
      // The alternation never increases its objective.
      for (std::size_t i = 1; i < outcome.objective_trace.size(); ++i)
        CHECK(outcome.objective_trace[i] <= outcome.objective_trace[i - 1] * (1.0 + 1e-12));
      CHECK(next.representative_count() >= previous_k);
      previous_k = next.representative_count();
      // Admitted codes are never touched again.
      for (std::size_t k = 0; k < snapshot.size(); ++k) {
        CHECK(next.mlib.reps[k].code == snapshot[k].code);
        CHECK(next.mlib.reps[k].source_task == snapshot[k].source_task);
      }
      snapshot = next.mlib.reps;
      CHECK(next.per_task.size() == static_cast<std::size_t>(outcome.arrival));
      state = std::move(next);
    }
    CHECK(state.learn_order.size() == corpus.tasks.size());
  }
}

TEST_CASE("runs are deterministic") {
  const datasets::TaskCorpus corpus = small_stream(9);
  const auto a = baselines::run_engine(corpus, small_hyper());
  const auto b = baselines::run_engine(corpus, small_hyper());
  CHECK(a.state.flib.decoder == b.state.flib.decoder);
  CHECK(a.state.flib.encoder == b.state.flib.encoder);
  for (const auto& [id, rec] : a.state.per_task) CHECK(rec.code == b.state.per_task.at(id).code);
}

TEST_CASE("vanishing lambda2 without admission matches the dictionary ablation") {
  // Both paths start every task from the same ablation state, so solver
  // round-off is not amplified through later decoder solves.
  const datasets::TaskCorpus corpus = small_stream(5);
  HyperParams hp = small_hyper();
  hp.encode.tol = 1e-15;
  hp.encode.max_iter = 100000;
  HyperParams degenerate = hp;
  degenerate.lambda2 = 1e-12;
  degenerate.admission = false;
  EngineState state(baselines::ablation_params(hp));
  for (const auto& t : corpus.tasks) {
    auto [next, outcome] = learn_task(state, t);
    EngineState other = state;
    other.config = degenerate;
    const auto [alt, alt_outcome] = learn_task(other, t);
    CHECK((alt.per_task.at(t.task_id).code - next.per_task.at(t.task_id).code).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(alt.representative_count() == 1);
    state = std::move(next);
  }
}

TEST_CASE("predict and reconstruct") {
  const datasets::TaskCorpus corpus = small_stream(6);
  EngineState state(small_hyper());
  state = learn_task(state, corpus.tasks[0]).first;
  const std::string first = corpus.tasks[0].task_id;
  const Matrix X = corpus.tasks[0].features;

  CHECK(predict(state, first, Matrix::Zero(12, 4)).scores.isZero(0.0));
  CHECK(predict(state, first, X).scores == X.transpose() * reconstruct_model(state, first));
  CHECK(predict(state, first, X).labels.size() == 0);
  CHECK_THROWS_AS(predict(state, "missing", X), Error);
  CHECK_THROWS_AS(reconstruct_model(state, "missing"), Error);
  CHECK_THROWS_AS(predict(state, first, Matrix::Zero(3, 2)), Error);

  SUBCASE("identity decoder returns the code") {
    EngineState square = state;
    square.flib.decoder = Matrix::Identity(6, 6);
    CHECK(reconstruct_model(square, first) == square.per_task.at(first).code);
  }
  SUBCASE("later tasks move earlier predictions") {
    const Vector before = predict(state, first, X).scores;
    for (std::size_t i = 1; i < corpus.tasks.size(); ++i) state = learn_task(state, corpus.tasks[i]).first;
    CHECK((predict(state, first, X).scores - before).norm() > 0.0);
  }
}

TEST_CASE("classification predictions carry labels") {
  Rng rng(7);
  EngineState state(small_hyper());
  const TaskData t = fcl::testing::classification_task(rng, 8, 40, "c");
  state = learn_task(state, t).first;
  const Prediction p = predict(state, "c", t.features);
  REQUIRE(p.labels.size() == 40);
  for (Eigen::Index i = 0; i < 40; ++i) CHECK(p.labels[i] == (p.scores[i] > 0.0 ? 1.0 : -1.0));
}

TEST_CASE("a lone linear task fits about as well as the single-task model") {
  // Clipping a decoder column shrinks D s along w; the comparison holds
  // whenever no column is clipped, and the direction is kept either way.
  Rng rng(11);
  int unclipped = 0;
  for (int trial = 0; trial < 20; ++trial) {
    TaskData t = fcl::testing::regression_task(rng, 6, 40, 0.0, "lin");
    t.targets /= std::sqrt(t.targets.squaredNorm() / 40.0);
    HyperParams hp;
    hp.p = 6;
    hp.lambda1 = 1e-6;
    hp.lambda2 = 1e-6;
    const auto [state, outcome] = learn_task(EngineState(hp), t);
    const Vector w = state.per_task.at("lin").single.w;
    const Vector r = reconstruct_model(state, "lin");
    CHECK(r.dot(w) / (r.norm() * w.norm()) >= 0.999);
    if (state.flib.decoder.colwise().norm().maxCoeff() < 1.0 - 1e-9) {
      ++unclipped;
      CHECK(train_rmse(r, t) <= train_rmse(w, t) + 0.05);
    }
  }
  CHECK(unclipped >= 5);
}

TEST_CASE("relearning a seen task merges its data") {
  const datasets::TaskCorpus corpus = small_stream(8);
  EngineState state(small_hyper());
  state = learn_task(state, corpus.tasks[0]).first;
  state = learn_task(state, corpus.tasks[1]).first;
  const auto [again, outcome] = learn_task(state, corpus.tasks[0]);
  CHECK_FALSE(outcome.new_task);
  CHECK(again.flib.tasks_seen == 2);
  CHECK(again.per_task.at(corpus.tasks[0].task_id).data.samples() == 2 * corpus.tasks[0].samples());
}

TEST_CASE("errors name the task") {
  const datasets::TaskCorpus corpus = small_stream(3);
  EngineState state = learn_task(EngineState(small_hyper()), corpus.tasks[0]).first;
  Rng rng(1);
  const TaskData wrong = fcl::testing::regression_task(rng, 5, 20, 0.1, "narrow");
  CHECK_THROWS_WITH_AS(learn_task(state, wrong), doctest::Contains("narrow"), Error);
  HyperParams bad = small_hyper();
  bad.gamma = 0.0;
  CHECK_THROWS_AS(validate(bad), Error);
  bad.admission = false;
  CHECK_NOTHROW(validate(bad));
}

TEST_CASE("reconstructed Disjoint models align with the ground truth") {
  experiment::ExperimentConfig config;
  config.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  config.run_stl = false;
  config.run_ablation = false;
  double total = 0.0;
  int count = 0;
  for (const auto& seed_result : experiment::run_experiment(config).seeds) {
    const Matrix& truth = seed_result.ground_truth->weights;
    const auto& state = seed_result.fcl.state;
    for (std::size_t t = 0; t < seed_result.task_ids.size(); ++t) {
      const Vector w = reconstruct_model(state, seed_result.task_ids[t]);
      const Vector g = truth.col(static_cast<Eigen::Index>(t));
      total += w.dot(g) / (w.norm() * g.norm());
      ++count;
    }
  }
  CHECK(total / count >= 0.8);
}
