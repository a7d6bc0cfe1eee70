#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fcl/types.hpp"

namespace fcl::datasets {

struct GroundTruth {
  std::vector<int> clusters;  // one label per task
  Matrix weights;             // d x T, column t belongs to tasks[t]
};

struct TaskCorpus {
  std::string name;
  LossKind problem_kind = LossKind::squared;
  std::vector<TaskData> tasks;
  std::optional<GroundTruth> ground_truth;

  Eigen::Index dim() const { return tasks.empty() ? 0 : tasks.front().dim(); }
};

/// Throws Error when tasks disagree on d or loss kind, or violate TaskData
/// invariants.
void validate(const TaskCorpus& corpus);

struct DisjointParams {
  int clusters = 3;
  int tasks_per_cluster = 10;
  int d = 40;
  int n_per_task = 50;
  double noise_std = 0.1;
  double center_std = 30.0;  // N(0, 900)
  double task_std = 4.0;     // N(0, 16)
};

/// Synthetic clustered regression corpus. The first d/2 coordinates carry
/// only task-specific components; the remaining coordinates are split into
/// contiguous blocks, one per cluster, holding that cluster's center. Each
/// task adds a task-specific component on the shared half and on its
/// cluster's block. Tasks are listed cluster by cluster.
TaskCorpus generate_disjoint(std::uint64_t seed, const DisjointParams& params = {});

/// Reads a manifest (JSON: name, problem_kind, d, tasks[{id, file}], and
/// optionally clusters[] / weights_file) plus one CSV per task with header
/// f0,...,f{d-1},target. Paths in the manifest are relative to it.
TaskCorpus load_corpus(const std::filesystem::path& manifest);

/// Writes `corpus` as manifest.json plus task CSVs (17 significant digits)
/// into `dir`; returns the manifest path.
std::filesystem::path write_corpus(const TaskCorpus& corpus, const std::filesystem::path& dir);

struct Split {
  TaskCorpus train;
  TaskCorpus test;
};

/// Per-task shuffled split; train receives round(fraction * n_t) samples.
Split split_corpus(const TaskCorpus& corpus, double train_fraction, std::uint64_t seed);

/// Divides every target (train and test alike), and any ground-truth
/// weights, by the root-mean-square of all training targets. Returns the
/// scale used. Regression corpora only.
double standardize_targets(Split& split);

}  // namespace fcl::datasets
