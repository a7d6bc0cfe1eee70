#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fcl/datasets.hpp"
#include "fcl/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kFailureMarker = "FAILED";

void flag_partial_outputs(const fs::path& dir, const std::string& message) {
  if (dir.empty() || !fs::exists(dir)) return;
  std::ofstream out(dir / kFailureMarker);
  out << message << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustered lifelong learning experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string output;
  std::string order;
  bool no_baselines = false;
  int checkpoint_every = -1;
  bool eval_every_task = false;
  run->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seeds, "Seed (repeatable); replaces the config's seed list");
  run->add_option("--output", output, "Output directory");
  run->add_option("--order", order, "Task order")
      ->check(CLI::IsMember({"random", "as_listed", "one_by_one_clusters"}));
  run->add_flag("--no-baselines", no_baselines, "Skip STL and the ablation");
  run->add_option("--checkpoint-every", checkpoint_every, "Checkpoint every N arrivals")->check(CLI::NonNegativeNumber);
  run->add_flag("--eval-every-task", eval_every_task, "Evaluate all learned tasks after every arrival");

  auto* gen = app.add_subcommand("generate", "Write a synthetic clustered regression corpus");
  std::uint64_t gen_seed = 0;
  std::string gen_dir;
  fcl::datasets::DisjointParams params;
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--output", gen_dir, "Corpus directory")->required();
  gen->add_option("--clusters", params.clusters);
  gen->add_option("--tasks-per-cluster", params.tasks_per_cluster);
  gen->add_option("--dim", params.d);
  gen->add_option("--samples", params.n_per_task);
  gen->add_option("--noise", params.noise_std);

  CLI11_PARSE(app, argc, argv);

  fs::path out_dir;
  try {
    if (*gen) {
      const auto manifest = fcl::datasets::write_corpus(fcl::datasets::generate_disjoint(gen_seed, params), gen_dir);
      std::cout << manifest.string() << '\n';
      return 0;
    }
    auto config = fcl::experiment::load_config(config_path);
    if (!seeds.empty()) config.seeds = seeds;
    if (!output.empty()) config.output_dir = output;
    if (!order.empty()) config.task_order = fcl::experiment::task_order_from_string(order);
    if (no_baselines) config.run_stl = config.run_ablation = false;
    if (checkpoint_every >= 0) config.checkpoint_every = checkpoint_every;
    if (eval_every_task) config.eval_every_task = true;
    fcl::experiment::validate(config);
    out_dir = config.output_dir;
    if (!out_dir.empty() && fs::exists(out_dir / kFailureMarker)) fs::remove(out_dir / kFailureMarker);

    const auto report = fcl::experiment::run_experiment(config);
    fcl::experiment::write_summary_csv(std::cout, report.summary);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    flag_partial_outputs(out_dir, e.what());
    return 1;
  }
}
