// Runs every acceptance criterion once and prints one PASS/FAIL line each.
// Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fcl/assignment_solver.hpp"
#include "fcl/datasets.hpp"
#include "fcl/experiment.hpp"
#include "fcl/lifelong_engine.hpp"
#include "fcl/sparse_coder.hpp"
#include "fcl/task_learner.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fcl;
namespace fs = std::filesystem;
namespace le = lifelong_engine;
using fcl::testing::Rng;

namespace {

int failures = 0;
int known_failures = 0;
std::set<int> known_gaps;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (pass) return;
  if (known_gaps.count(id)) {
    std::printf("  (criterion %d is a documented known gap)\n", id);
    ++known_failures;
  } else {
    ++failures;
  }
}

template <class... Args>
std::string fmt(const char* pattern, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double summary_mean(const experiment::ExperimentReport& r, const std::string& model, const std::string& metric) {
  for (const auto& row : r.summary)
    if (row.model == model && row.metric == metric) return row.mean;
  throw Error("summary row " + model + "/" + metric + " missing");
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

experiment::ExperimentConfig disjoint_config(experiment::TaskOrder order, const fs::path& out) {
  experiment::ExperimentConfig config;
  config.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  config.task_order = order;
  config.output_dir = out;
  return config;
}

// 1-4 and 11 share the default Disjoint runs.
void disjoint_criteria(const fs::path& scratch) {
  const auto start = std::chrono::steady_clock::now();
  const auto config = disjoint_config(experiment::TaskOrder::random, scratch / "random_a");
  const auto random = experiment::run_experiment(config);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const double fcl = summary_mean(random, "FCL3", "rmse");
  const double stl = summary_mean(random, "STL", "rmse");
  const double abl = summary_mean(random, "ablation", "rmse");
  report(1, fcl <= stl - 0.10 && fcl <= abl + 0.005 && seconds < 120.0,
         fmt("FCL3 %.4f, STL %.4f, ablation %.4f, 10 seeds in %.1f s", fcl, stl, abl, seconds));

  std::vector<double> counts;
  for (const auto& s : random.seeds) counts.push_back(s.fcl.state.representative_count());
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  const double med = median(counts);
  report(2, *lo >= 2 && *hi <= 6 && med >= 3 && med <= 5,
         fmt("representatives min %.0f, max %.0f, median %.1f", *lo, *hi, med));

  double contrast = 0.0;
  for (const auto& s : random.seeds) contrast += s.block_contrast.value_or(0.0);
  contrast /= static_cast<double>(random.seeds.size());
  report(3, contrast >= 0.15, fmt("mean within-minus-cross correlation %.4f", contrast));

  const auto clustered =
      experiment::run_experiment(disjoint_config(experiment::TaskOrder::one_by_one_clusters, scratch / "clustered"));
  const double fcl_c = summary_mean(clustered, "FCL3", "rmse");
  const double abl_c = summary_mean(clustered, "ablation", "rmse");
  report(4, std::abs(fcl - fcl_c) <= 0.08 && fcl < abl && fcl_c < abl_c,
         fmt("random %.4f (ablation %.4f), one-by-one %.4f (ablation %.4f), gap %.4f", fcl, abl, fcl_c, abl_c,
             std::abs(fcl - fcl_c)));

  experiment::run_experiment(disjoint_config(experiment::TaskOrder::random, scratch / "random_b"));
  const std::string a = slurp(scratch / "random_a" / "summary.csv");
  const std::string b = slurp(scratch / "random_b" / "summary.csv");
  report(11, !a.empty() && a == b, fmt("summary.csv %zu bytes, identical: %s", a.size(), a == b ? "yes" : "no"));
}

datasets::TaskCorpus stream_corpus(std::uint64_t seed) {
  auto split = datasets::split_corpus(datasets::generate_disjoint(seed), 0.5, seed);
  datasets::standardize_targets(split);
  std::mt19937_64 rng(seed);
  std::shuffle(split.train.tasks.begin(), split.train.tasks.end(), rng);
  return split.train;
}

// Bounded T * ||X_T - X_{T-1}|| after T = 5, and a falling step size.
bool settles(const std::vector<double>& steps, std::string& detail, const char* name) {
  const std::size_t n = steps.size();
  const double at5 = 5.0 * steps[4];
  double worst = 0.0;
  for (std::size_t t = 5; t <= n; ++t) worst = std::max(worst, static_cast<double>(t) * steps[t - 1]);
  const std::size_t third = n / 3;
  const double early = median({steps.begin(), steps.begin() + static_cast<long>(third)});
  const double late = median({steps.end() - static_cast<long>(third), steps.end()});
  detail += fmt("%s: max T*step %.4g vs 10x T=5 %.4g, medians %.4g -> %.4g; ", name, worst, 10.0 * at5, early, late);
  return worst <= 10.0 * at5 && late < early;
}

void convergence_criterion() {
  const auto corpus = stream_corpus(0);
  le::EngineState state{le::HyperParams{}};
  std::vector<double> dsteps, lsteps;
  for (const auto& task : corpus.tasks) {
    Matrix d_prev, l_prev;
    if (state.initialized) d_prev = state.flib.decoder, l_prev = state.flib.encoder;
    auto [next, outcome] = le::learn_task(state, task);
    if (!state.initialized) {
      // The first step is measured from the initial libraries.
      const auto init = knowledge_libraries::init_libraries(static_cast<int>(task.dim()), next.config.p, next.config.seed);
      d_prev = init.decoder, l_prev = init.encoder;
    }
    dsteps.push_back((next.flib.decoder - d_prev).norm());
    lsteps.push_back((next.flib.encoder - l_prev).norm());
    state = std::move(next);
  }
  std::string detail = fmt("%zu tasks; ", dsteps.size());
  const bool d_ok = settles(dsteps, detail, "D");
  const bool l_ok = settles(lsteps, detail, "L");
  report(5, d_ok && l_ok, detail);
}

void admm_criterion() {
  Rng rng(606);
  double worst_coord = 0.0, worst_obj = -1e300, worst_feas = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = rng.integer(1, 4);
    Vector d(k);
    for (int i = 0; i < k; ++i) d[i] = rng.uniform(0.0, 3.0);
    const double d0 = rng.uniform(0.0, 3.0);
    assignment_solver::AdmmOptions opt;
    opt.lambda2 = rng.uniform(0.5, 2.0);
    opt.alpha = 0.01;
    const auto a = assignment_solver::solve_assignment(d, d0, opt);
    auto objective = [&](const Vector& z) { return assignment_solver::assignment_objective(d, d0, z, opt.lambda2, opt.alpha); };
    const Vector grid = fcl::testing::simplex_grid_search(k + 1, objective);
    worst_coord = std::max(worst_coord, (a.z - grid).cwiseAbs().maxCoeff());
    worst_obj = std::max(worst_obj, objective(a.z) - objective(grid));
    worst_feas = std::max({worst_feas, std::abs(a.z.sum() - 1.0), std::max(0.0, -a.z.minCoeff())});
  }
  report(6, worst_coord <= 2e-3 && worst_obj <= 1e-4 && worst_feas <= 1e-6,
         fmt("200 instances: max coordinate gap %.2e, max objective excess %.2e, max infeasibility %.2e", worst_coord,
             worst_obj, worst_feas));
}

void sparse_coder_criterion() {
  Rng rng(707);
  sparse_coder::EncodeOptions tight;
  tight.tol = 1e-15;
  tight.max_iter = 100000;
  double worst_linear = 0.0, worst_excess = -1e300;
  for (int trial = 0; trial < 100; ++trial) {
    const auto prob = fcl::testing::random_problem(rng, 8, 5, trial % 4, 0.0, rng.uniform(0.0, 2.0));
    const auto r = sparse_coder::encode_task(prob, tight);
    worst_linear = std::max(worst_linear, (r.code - fcl::testing::direct_solve(prob)).cwiseAbs().maxCoeff());
  }
  for (int trial = 0; trial < 100; ++trial) {
    const auto prob = fcl::testing::random_problem(rng, 8, 5, trial % 4, rng.uniform(0.01, 0.5), rng.uniform(0.0, 2.0));
    const auto r = sparse_coder::encode_task(prob);
    const double oracle = fcl::testing::subgradient_oracle(prob, std::max(10 * r.iterations, 2000));
    worst_excess = std::max(worst_excess, r.objective - oracle);
  }
  report(7, worst_linear <= 1e-6 && worst_excess <= 1e-5,
         fmt("lambda1 = 0: max coordinate gap %.2e; lambda1 > 0: max excess over subgradient oracle %.2e",
             worst_linear, worst_excess));
}

void taylor_criterion() {
  Rng rng(808);
  double worst = 0.0;
  for (int task = 0; task < 30; ++task) {
    const TaskData t = fcl::testing::regression_task(rng, 10, 25);
    const auto model = task_learner::fit_single_task(t);
    const Vector g = task_learner::loss_gradient(t, model.w);
    for (int probe = 0; probe < 100; ++probe) {
      const Vector p = rng.vector(10, 3.0);
      const Vector delta = p - model.w;
      const double surrogate = model.loss_at_w + g.dot(delta) + fcl::quad_form(delta, model.omega);
      const double truth = task_learner::loss_value(t, p);
      worst = std::max(worst, std::abs(surrogate - truth) / std::max(1.0, std::abs(truth)));
    }
  }
  report(8, worst <= 1e-10, fmt("30 tasks x 100 probes: max relative error %.2e", worst));
}

void gradient_criterion() {
  Rng rng(909);
  double worst_code = 0.0, worst_logistic = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto prob = fcl::testing::random_problem(rng, 7, 4, trial % 4, 0.0, rng.uniform(0.0, 2.0));
    const Vector s = rng.vector(4);
    const Vector fd = fcl::testing::numeric_gradient(
        [&](const Vector& x) { return sparse_coder::smooth_objective(prob, x); }, s, 1e-5);
    worst_code = std::max(worst_code, fcl::testing::relative_error(sparse_coder::smooth_gradient(prob, s), fd));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const TaskData t = fcl::testing::classification_task(rng, 6, 30);
    const Vector p = rng.vector(6);
    const Vector fd = fcl::testing::numeric_gradient([&](const Vector& x) { return task_learner::loss_value(t, x); }, p, 1e-5);
    worst_logistic = std::max(worst_logistic, fcl::testing::relative_error(task_learner::loss_gradient(t, p), fd));
  }
  report(9, worst_code <= 1e-5 && worst_logistic <= 1e-5,
         fmt("max relative error: code gradient %.2e, logistic gradient %.2e", worst_code, worst_logistic));
}

double relative(const Matrix& got, const Matrix& want) { return (got - want).norm() / std::max(1.0, want.norm()); }

void accumulator_criterion() {
  using fcl::testing::column_major;
  using fcl::testing::kron;
  const auto corpus = stream_corpus(1);
  le::HyperParams hp;
  le::EngineState state(hp);
  const Eigen::Index d = corpus.dim(), p = hp.p;
  Matrix A = Matrix::Zero(d * p, d * p), M = Matrix::Zero(p, d), C = Matrix::Zero(d, d);
  Vector b = Vector::Zero(d * p);
  double worst = 0.0;
  for (const auto& task : corpus.tasks) {
    auto [next, outcome] = le::learn_task(state, task);
    const auto& rec = next.per_task.at(task.task_id);
    const Vector& s = rec.code;
    const Vector& w = rec.single.w;
    // Rebuild this task's contribution from the state it arrived to.
    A += kron(s * s.transpose(), rec.single.omega);
    for (std::size_t k = 0; k < state.mlib.size(); ++k) {
      const Vector& sk = state.mlib.reps[k].code;
      const Matrix omega_k = task_learner::hessian_at(task, state.flib.decoder * sk);
      const Vector diff = sk - s;
      A += hp.lambda2 * outcome.assignment.z[static_cast<Eigen::Index>(k)] * kron(diff * diff.transpose(), omega_k);
    }
    b += column_major(rec.single.omega * w * s.transpose());
    M += s * w.transpose();
    C += w * w.transpose();
    worst = std::max({worst, relative(next.flib.acc_A, A), relative(next.flib.acc_b, b),
                      relative(next.flib.acc_M, M), relative(next.flib.acc_C, C)});
    state = std::move(next);
  }
  report(10, worst <= 1e-9, fmt("%zu-task stream: max relative gap over all prefixes %.2e", corpus.tasks.size(), worst));
}

void guarded(int id, const std::function<void()>& run) {
  try {
    run();
  } catch (const std::exception& e) {
    report(id, false, std::string("error: ") + e.what());
  }
}

}  // namespace

// --known-gap N keeps a documented failure of criterion N out of the exit code.
// Its FAIL line is still printed.
int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; i += 2)
    if (std::string(argv[i]) == "--known-gap") known_gaps.insert(std::atoi(argv[i + 1]));
  const fs::path scratch = fs::temp_directory_path() / "fcl_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  guarded(1, [&] { disjoint_criteria(scratch); });
  guarded(5, convergence_criterion);
  guarded(6, admm_criterion);
  guarded(7, sparse_coder_criterion);
  guarded(8, taylor_criterion);
  guarded(9, gradient_criterion);
  guarded(10, accumulator_criterion);
  std::printf("%s: %d criterion failure(s), %d known gap(s)\n", failures ? "FAIL" : "PASS", failures,
              known_failures);
  return failures ? 1 : 0;
}
