#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcl/baselines.hpp"
#include "fcl/datasets.hpp"
#include "fcl/evaluation.hpp"
#include "fcl/lifelong_engine.hpp"

namespace fcl::experiment {

enum class TaskOrder { random, as_listed, one_by_one_clusters };
std::string to_string(TaskOrder order);
TaskOrder task_order_from_string(const std::string& name);

struct ExperimentConfig {
  // Exactly one of the two dataset sources is used.
  std::optional<datasets::DisjointParams> disjoint = datasets::DisjointParams{};
  std::optional<std::filesystem::path> corpus_path;

  std::vector<std::uint64_t> seeds{0};
  TaskOrder task_order = TaskOrder::random;
  lifelong_engine::HyperParams hyper{};
  double train_fraction = 0.5;
  bool standardize_targets = true;
  std::filesystem::path output_dir;  // empty: compute only, write nothing
  bool run_stl = true;
  bool run_ablation = true;
  int checkpoint_every = 0;  // 0: final checkpoint only
  bool eval_every_task = false;
};

void validate(const ExperimentConfig& config);

/// Parses the JSON config layout documented in the README.
ExperimentConfig config_from_json_text(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

inline constexpr const char* kModelFcl = "FCL3";
inline constexpr const char* kModelStl = "STL";
inline constexpr const char* kModelAblation = "ablation";

struct CurvePoint {
  int learned_tasks = 0;
  double metric = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::string dataset;
  evaluation::MetricKind metric = evaluation::MetricKind::rmse;
  /// Primary metric (RMSE or AUC) per model; accuracy is added for
  /// classification corpora under the same model names.
  std::map<std::string, evaluation::MetricReport> reports;
  std::map<std::string, evaluation::MetricReport> accuracy;
  std::vector<std::string> task_ids;  // corpus order
  std::optional<datasets::GroundTruth> ground_truth;  // corpus order, standardized units
  baselines::EngineRun fcl;
  evaluation::Timeline timeline;
  evaluation::CorrelationMatrix correlation;
  std::optional<double> block_contrast;
  std::vector<CurvePoint> curve;
};

struct SummaryRow {
  std::string model;
  std::string dataset;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
};

struct ExperimentReport {
  std::vector<SeedResult> seeds;
  std::vector<SummaryRow> summary;
};

/// Generates or loads the corpus, splits it, orders the tasks, streams
/// them through the engine and the enabled baselines, and evaluates every
/// learned task on its held-out split at the end of the stream.
SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed);

/// All seeds plus the mean/std summary. Writes outputs when
/// config.output_dir is set.
ExperimentReport run_experiment(const ExperimentConfig& config);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace fcl::experiment
