#include "fcl/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "fcl/checkpoint.hpp"
#include "fcl/hyper_json.hpp"

namespace fcl::experiment {

namespace fs = std::filesystem;
using json = nlohmann::json;
namespace le = lifelong_engine;
namespace ev = evaluation;

std::string to_string(TaskOrder order) {
  switch (order) {
    case TaskOrder::random:
      return "random";
    case TaskOrder::as_listed:
      return "as_listed";
    case TaskOrder::one_by_one_clusters:
      return "one_by_one_clusters";
  }
  return "unknown";
}

TaskOrder task_order_from_string(const std::string& name) {
  if (name == "random") return TaskOrder::random;
  if (name == "as_listed") return TaskOrder::as_listed;
  if (name == "one_by_one_clusters") return TaskOrder::one_by_one_clusters;
  throw Error("unknown task order '" + name + "' (expected random|as_listed|one_by_one_clusters)");
}

void validate(const ExperimentConfig& config) {
  if (config.disjoint.has_value() == config.corpus_path.has_value())
    throw Error("config must name exactly one dataset source (disjoint parameters or a corpus path)");
  if (config.seeds.empty()) throw Error("config needs at least one seed");
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
    throw Error("train_fraction must lie in (0, 1)");
  if (config.checkpoint_every < 0) throw Error("checkpoint_every must be non-negative");
  le::validate(config.hyper);
}

ExperimentConfig config_from_json_text(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("config: malformed JSON: ") + e.what());
  }
  static const std::set<std::string> known{"dataset",  "seeds",      "task_order",       "hyper",
                                           "train_fraction", "standardize_targets", "output_dir",
                                           "baselines", "checkpoint_every", "eval_every_task"};
  ExperimentConfig config;
  try {
    for (const auto& [key, value] : j.items())
      if (!known.count(key)) throw Error("config: unknown key '" + key + "'");
    if (j.contains("dataset")) {
      const json& ds = j.at("dataset");
      static const std::set<std::string> dataset_keys{"kind", "clusters", "tasks_per_cluster", "d",
                                                      "n_per_task", "noise_std", "path"};
      for (const auto& [key, value] : ds.items())
        if (!dataset_keys.count(key)) throw Error("config: unknown dataset key '" + key + "'");
      const std::string kind = ds.value("kind", "disjoint");
      if (kind == "disjoint") {
        datasets::DisjointParams params;
        params.clusters = ds.value("clusters", params.clusters);
        params.tasks_per_cluster = ds.value("tasks_per_cluster", params.tasks_per_cluster);
        params.d = ds.value("d", params.d);
        params.n_per_task = ds.value("n_per_task", params.n_per_task);
        params.noise_std = ds.value("noise_std", params.noise_std);
        config.disjoint = params;
        config.corpus_path.reset();
      } else if (kind == "corpus") {
        fs::path path = ds.at("path").get<std::string>();
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        config.corpus_path = path;
        config.disjoint.reset();
      } else {
        throw Error("config: unknown dataset kind '" + kind + "'");
      }
    }
    if (j.contains("seeds")) config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("task_order")) config.task_order = task_order_from_string(j.at("task_order").get<std::string>());
    if (j.contains("hyper")) j.at("hyper").get_to(config.hyper);
    config.train_fraction = j.value("train_fraction", config.train_fraction);
    config.standardize_targets = j.value("standardize_targets", config.standardize_targets);
    if (j.contains("output_dir")) {
      fs::path out = j.at("output_dir").get<std::string>();
      if (out.is_relative() && !base_dir.empty()) out = base_dir / out;
      config.output_dir = out;
    }
    if (j.contains("baselines")) {
      const json& b = j.at("baselines");
      config.run_stl = b.value("stl", config.run_stl);
      config.run_ablation = b.value("ablation", config.run_ablation);
    }
    config.checkpoint_every = j.value("checkpoint_every", config.checkpoint_every);
    config.eval_every_task = j.value("eval_every_task", config.eval_every_task);
  } catch (const json::exception& e) {
    throw Error(std::string("config: invalid field: ") + e.what());
  }
  validate(config);
  return config;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_from_json_text(buffer.str(), path.parent_path());
}

namespace {

// Independent, reproducible streams per (seed, purpose).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> task_order(const datasets::TaskCorpus& corpus, TaskOrder order, std::uint64_t seed) {
  std::vector<std::size_t> idx(corpus.tasks.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  switch (order) {
    case TaskOrder::as_listed:
      break;
    case TaskOrder::random: {
      std::mt19937_64 rng(seed);
      std::shuffle(idx.begin(), idx.end(), rng);
      break;
    }
    case TaskOrder::one_by_one_clusters: {
      if (!corpus.ground_truth) throw Error("one_by_one_clusters order needs cluster labels in the corpus");
      const auto& labels = corpus.ground_truth->clusters;
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
      break;
    }
  }
  return idx;
}

struct TaskScores {
  double primary = 0.0;
  double accuracy = 0.0;
};

TaskScores score_task(const TaskData& test, const Vector& scores) {
  TaskScores out;
  if (test.loss_kind == LossKind::squared) {
    out.primary = ev::rmse(scores, test.targets);
  } else {
    out.primary = ev::auc(scores, test.targets);
    const Vector labels = scores.unaryExpr([](double v) { return v > 0.0 ? 1.0 : -1.0; });
    out.accuracy = ev::accuracy(labels, test.targets);
  }
  return out;
}

void add_reports(SeedResult& result, const std::string& model, const std::map<std::string, TaskScores>& scores,
                 LossKind kind) {
  std::map<std::string, double> primary, acc;
  for (const auto& [id, s] : scores) {
    primary[id] = s.primary;
    acc[id] = s.accuracy;
  }
  result.reports[model] = ev::make_report(result.metric, std::move(primary));
  if (kind == LossKind::logistic) result.accuracy[model] = ev::make_report(ev::MetricKind::accuracy, std::move(acc));
}

std::map<std::string, TaskScores> score_engine(const le::EngineState& state, const datasets::TaskCorpus& test) {
  std::map<std::string, TaskScores> out;
  for (const auto& task : test.tasks) {
    if (!state.per_task.count(task.task_id)) continue;
    out[task.task_id] = score_task(task, le::predict(state, task.task_id, task.features).scores);
  }
  return out;
}

double mean_primary(const std::map<std::string, TaskScores>& scores) {
  double total = 0.0;
  for (const auto& [id, s] : scores) total += s.primary;
  return scores.empty() ? 0.0 : total / static_cast<double>(scores.size());
}

std::string fixed6(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << v;
  return out.str();
}

}  // namespace

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  validate(config);
  datasets::TaskCorpus corpus = config.disjoint ? datasets::generate_disjoint(derive_seed(seed, 1), *config.disjoint)
                                                : datasets::load_corpus(*config.corpus_path);
  datasets::validate(corpus);
  datasets::Split split = datasets::split_corpus(corpus, config.train_fraction, derive_seed(seed, 2));
  if (config.standardize_targets && corpus.problem_kind == LossKind::squared) datasets::standardize_targets(split);

  SeedResult result;
  result.seed = seed;
  result.dataset = corpus.name;
  result.metric = corpus.problem_kind == LossKind::squared ? ev::MetricKind::rmse : ev::MetricKind::auc;
  for (const auto& t : corpus.tasks) result.task_ids.push_back(t.task_id);
  result.ground_truth = split.train.ground_truth;

  const auto order = task_order(split.train, config.task_order, derive_seed(seed, 3));
  datasets::TaskCorpus ordered = split.train;
  ordered.tasks.clear();
  for (std::size_t i : order) ordered.tasks.push_back(split.train.tasks[i]);

  le::HyperParams hyper = config.hyper;
  hyper.seed = derive_seed(seed ^ config.hyper.seed, 4);

  const bool write = !config.output_dir.empty();
  if (write) fs::create_directories(config.output_dir);

  // Main model, streamed by hand so curves and checkpoints can be taken
  // between arrivals.
  result.fcl.state = le::EngineState(hyper);
  for (const auto& task : ordered.tasks) {
    auto [next, outcome] = le::learn_task(result.fcl.state, task);
    result.fcl.state = std::move(next);
    result.fcl.outcomes.push_back(std::move(outcome));
    const int arrivals = result.fcl.state.arrivals;
    if (config.eval_every_task)
      result.curve.push_back({arrivals, mean_primary(score_engine(result.fcl.state, split.test))});
    if (write && config.checkpoint_every > 0 && arrivals % config.checkpoint_every == 0) {
      checkpoint::save(result.fcl.state, config.output_dir / ("checkpoint_" + std::to_string(seed) + "_" +
                                                              std::to_string(arrivals) + ".json"));
    }
  }
  const auto fcl_scores = score_engine(result.fcl.state, split.test);
  if (!config.eval_every_task)
    result.curve.push_back({result.fcl.state.arrivals, mean_primary(fcl_scores)});
  add_reports(result, kModelFcl, fcl_scores, corpus.problem_kind);
  if (write) checkpoint::save(result.fcl.state, config.output_dir / ("checkpoint_" + std::to_string(seed) + ".json"));

  if (config.run_stl) {
    const auto models = baselines::run_stl(split.train, hyper.ridge);
    std::map<std::string, TaskScores> scores;
    for (std::size_t t = 0; t < models.size(); ++t) {
      const TaskData& test = split.test.tasks[t];
      scores[test.task_id] = score_task(test, test.features.transpose() * models[t].w);
    }
    add_reports(result, kModelStl, scores, corpus.problem_kind);
  }
  if (config.run_ablation) {
    const auto run = baselines::run_dictionary_ablation(ordered, hyper);
    add_reports(result, kModelAblation, score_engine(run.state, split.test), corpus.problem_kind);
  }

  result.timeline = ev::representative_timeline(result.fcl.outcomes);
  Matrix recon(corpus.dim(), static_cast<Eigen::Index>(corpus.tasks.size()));
  for (std::size_t t = 0; t < corpus.tasks.size(); ++t)
    recon.col(static_cast<Eigen::Index>(t)) = le::reconstruct_model(result.fcl.state, corpus.tasks[t].task_id);
  if (recon.cols() >= 2) {
    result.correlation = ev::model_correlation_matrix(recon);
    if (corpus.ground_truth) result.block_contrast = ev::block_contrast(result.correlation.values, corpus.ground_truth->clusters);
  }

  if (write) {
    const std::string tag = std::to_string(seed);
    {
      std::ofstream out(config.output_dir / ("per_task_" + tag + ".csv"), std::ios::binary);
      bool header = true;
      for (const auto& [model, report] : result.reports) {
        ev::write_report_csv(out, model, report, header);
        header = false;
      }
      for (const auto& [model, report] : result.accuracy) ev::write_report_csv(out, model, report, false);
    }
    {
      std::ofstream out(config.output_dir / ("metrics_" + tag + ".jsonl"), std::ios::binary);
      for (const auto& [model, report] : result.reports) ev::write_report_jsonl(out, model, report);
      for (const auto& [model, report] : result.accuracy) ev::write_report_jsonl(out, model, report);
    }
    {
      std::ofstream out(config.output_dir / ("timeline_" + tag + ".csv"), std::ios::binary);
      ev::write_timeline_csv(out, result.timeline);
    }
    if (result.correlation.values.size() > 0) {
      std::ofstream out(config.output_dir / ("correlation_" + tag + ".csv"), std::ios::binary);
      ev::write_matrix_csv(out, result.correlation.values, result.task_ids);
    }
    {
      std::ofstream out(config.output_dir / ("curve_" + tag + ".csv"), std::ios::binary);
      out << "learned_tasks," << ev::to_string(result.metric) << '\n';
      for (const auto& point : result.curve) out << point.learned_tasks << ',' << fixed6(point.metric) << '\n';
    }
  }
  return result;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "model,dataset,metric,mean,std\n";
  for (const auto& r : rows)
    out << r.model << ',' << r.dataset << ',' << r.metric << ',' << fixed6(r.mean) << ',' << fixed6(r.std) << '\n';
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate(config);
  ExperimentReport report;
  // Seeds are independent; each gets its own engine and output files.
  std::vector<std::future<SeedResult>> pending;
  for (std::uint64_t seed : config.seeds)
    pending.push_back(std::async(std::launch::async, [&config, seed] { return run_seed(config, seed); }));
  for (auto& f : pending) report.seeds.push_back(f.get());

  const SeedResult& first = report.seeds.front();
  std::vector<std::string> models;
  for (const auto& [model, r] : first.reports) models.push_back(model);
  // Main model first, then baselines in a fixed order.
  std::stable_sort(models.begin(), models.end(), [](const std::string& a, const std::string& b) {
    auto rank = [](const std::string& m) { return m == kModelFcl ? 0 : m == kModelStl ? 1 : 2; };
    return rank(a) < rank(b);
  });
  for (const auto& model : models) {
    std::vector<double> means;
    for (const auto& s : report.seeds) means.push_back(s.reports.at(model).mean);
    const auto [mean, sd] = ev::mean_std(means);
    report.summary.push_back({model, first.dataset, ev::to_string(first.metric), mean, sd});
    if (first.accuracy.count(model)) {
      std::vector<double> acc;
      for (const auto& s : report.seeds) acc.push_back(s.accuracy.at(model).mean);
      const auto [am, as] = ev::mean_std(acc);
      report.summary.push_back({model, first.dataset, "accuracy", am, as});
    }
  }
  std::vector<double> reps;
  for (const auto& s : report.seeds) reps.push_back(static_cast<double>(s.fcl.state.representative_count()));
  const auto [rm, rs] = ev::mean_std(reps);
  report.summary.push_back({kModelFcl, first.dataset, "representatives", rm, rs});
  if (first.block_contrast) {
    std::vector<double> contrast;
    for (const auto& s : report.seeds) contrast.push_back(s.block_contrast.value_or(0.0));
    const auto [cm, cs] = ev::mean_std(contrast);
    report.summary.push_back({kModelFcl, first.dataset, "block_contrast", cm, cs});
  }

  if (!config.output_dir.empty()) {
    fs::create_directories(config.output_dir);
    std::ofstream out(config.output_dir / "summary.csv", std::ios::binary);
    write_summary_csv(out, report.summary);
    json meta{{"dataset", first.dataset},
              {"seeds", config.seeds},
              {"task_order", to_string(config.task_order)},
              {"train_fraction", config.train_fraction},
              {"standardize_targets", config.standardize_targets},
              {"curve_split", "test"},
              {"curve_points", config.eval_every_task ? "every_arrival" : "end_of_stream"},
              {"hyper", config.hyper}};
    std::ofstream mout(config.output_dir / "metadata.json", std::ios::binary);
    mout << meta.dump(2) << '\n';
  }
  return report;
}

}  // namespace fcl::experiment
