#include "fcl/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace fcl::datasets {

namespace fs = std::filesystem;
using json = nlohmann::json;

void validate(const TaskCorpus& corpus) {
  if (corpus.tasks.empty()) throw Error("corpus '" + corpus.name + "' has no tasks");
  const Eigen::Index d = corpus.dim();
  for (const auto& task : corpus.tasks) {
    fcl::validate(task);
    if (task.dim() != d)
      throw Error("task '" + task.task_id + "' has d=" + std::to_string(task.dim()) + ", corpus has d=" +
                  std::to_string(d));
    if (task.loss_kind != corpus.problem_kind)
      throw Error("task '" + task.task_id + "' loss kind differs from corpus problem kind");
  }
  if (corpus.ground_truth) {
    const auto t = static_cast<Eigen::Index>(corpus.tasks.size());
    if (static_cast<Eigen::Index>(corpus.ground_truth->clusters.size()) != t)
      throw Error("ground-truth cluster labels do not match task count");
    if (corpus.ground_truth->weights.size() != 0 &&
        (corpus.ground_truth->weights.rows() != d || corpus.ground_truth->weights.cols() != t))
      throw Error("ground-truth weights must be d x T");
  }
}

TaskCorpus generate_disjoint(std::uint64_t seed, const DisjointParams& params) {
  const int c = params.clusters;
  const int d = params.d;
  if (c < 1 || params.tasks_per_cluster < 1 || params.n_per_task < 1)
    throw Error("disjoint corpus needs positive cluster, task and sample counts");
  if (d < 2 * c) throw Error("disjoint corpus needs d >= 2 * clusters");
  if (params.noise_std < 0.0) throw Error("noise std must be non-negative");

  const int shared = d / 2;
  const int block = (d - shared + c - 1) / c;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  auto block_range = [&](int cluster) {
    const int begin = shared + cluster * block;
    return std::pair{begin, std::min(d, begin + block)};
  };

  Matrix centers = Matrix::Zero(d, c);
  for (int k = 0; k < c; ++k) {
    const auto [begin, end] = block_range(k);
    for (int i = begin; i < end; ++i) centers(i, k) = params.center_std * unit(rng);
  }

  TaskCorpus corpus;
  corpus.name = "disjoint";
  corpus.problem_kind = LossKind::squared;
  GroundTruth truth;
  const int total = c * params.tasks_per_cluster;
  truth.weights = Matrix::Zero(d, total);
  for (int k = 0; k < c; ++k) {
    const auto [begin, end] = block_range(k);
    for (int j = 0; j < params.tasks_per_cluster; ++j) {
      const int t = k * params.tasks_per_cluster + j;
      Vector w = centers.col(k);
      for (int i = 0; i < shared; ++i) w[i] += params.task_std * unit(rng);
      for (int i = begin; i < end; ++i) w[i] += params.task_std * unit(rng);

      TaskData task;
      std::ostringstream id;
      id << "c" << k << "_t" << std::setw(2) << std::setfill('0') << j;
      task.task_id = id.str();
      task.loss_kind = LossKind::squared;
      task.features.resize(d, params.n_per_task);
      for (Eigen::Index col = 0; col < task.features.cols(); ++col)
        for (Eigen::Index row = 0; row < task.features.rows(); ++row) task.features(row, col) = unit(rng);
      task.targets = task.features.transpose() * w;
      for (Eigen::Index s = 0; s < task.targets.size(); ++s) task.targets[s] += params.noise_std * unit(rng);

      truth.weights.col(t) = w;
      truth.clusters.push_back(k);
      corpus.tasks.push_back(std::move(task));
    }
  }
  corpus.ground_truth = std::move(truth);
  return corpus;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const fs::path& file, std::size_t line_no) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\r')) --end;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw Error(file.string() + ":" + std::to_string(line_no) + ": cannot parse number '" + text + "'");
  }
  return value;
}

// Reads rows of `cols` numbers after a header line; returns them row-major.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& file, std::size_t cols,
                                                  const std::vector<std::string>* expected_header) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open '" + file.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(file.string() + ":1: missing header row");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() != cols)
    throw Error(file.string() + ":1: header has " + std::to_string(header.size()) + " fields, expected " +
                std::to_string(cols));
  if (expected_header && header != *expected_header)
    throw Error(file.string() + ":1: unexpected header (expected f0,...,f{d-1},target)");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != cols)
      throw Error(file.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                  " fields, found " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(cols);
    for (const auto& f : fields) row.push_back(parse_double(f, file, line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> task_header(Eigen::Index d) {
  std::vector<std::string> header;
  for (Eigen::Index i = 0; i < d; ++i) header.push_back("f" + std::to_string(i));
  header.emplace_back("target");
  return header;
}

void write_number(std::ostream& out, double v) { out << std::setprecision(17) << v; }

}  // namespace

TaskCorpus load_corpus(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open manifest '" + manifest_path.string() + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw Error(manifest_path.string() + ": malformed manifest: " + e.what());
  }
  const fs::path base = manifest_path.parent_path();
  TaskCorpus corpus;
  try {
    corpus.name = manifest.at("name").get<std::string>();
    corpus.problem_kind = loss_kind_from_string(manifest.at("problem_kind").get<std::string>());
    const auto d = manifest.at("d").get<Eigen::Index>();
    if (d < 1) throw Error(manifest_path.string() + ": d must be positive");
    const auto header = task_header(d);
    for (const auto& entry : manifest.at("tasks")) {
      const std::string id = entry.at("id").get<std::string>();
      const fs::path file = base / entry.at("file").get<std::string>();
      if (!fs::exists(file))
        throw Error(manifest_path.string() + ": task '" + id + "' file '" + file.string() + "' not found");
      std::ifstream probe(file);
      std::string first;
      std::getline(probe, first);
      if (!first.empty() && first.back() == '\r') first.pop_back();
      const std::size_t found_cols = split_fields(first).size();
      if (found_cols != static_cast<std::size_t>(d + 1))
        throw Error(file.string() + ":1: task has " + std::to_string(found_cols == 0 ? 0 : found_cols - 1) +
                    " features but manifest declares d=" + std::to_string(d));
      const auto rows = read_numeric_csv(file, static_cast<std::size_t>(d + 1), &header);
      if (rows.empty()) throw Error(file.string() + ": no samples");
      TaskData task;
      task.task_id = id;
      task.loss_kind = corpus.problem_kind;
      task.features.resize(d, static_cast<Eigen::Index>(rows.size()));
      task.targets.resize(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t s = 0; s < rows.size(); ++s) {
        for (Eigen::Index i = 0; i < d; ++i)
          task.features(i, static_cast<Eigen::Index>(s)) = rows[s][static_cast<std::size_t>(i)];
        task.targets[static_cast<Eigen::Index>(s)] = rows[s][static_cast<std::size_t>(d)];
      }
      try {
        fcl::validate(task);
      } catch (const Error& e) {
        throw Error(file.string() + ": " + e.what());
      }
      corpus.tasks.push_back(std::move(task));
    }
    if (manifest.contains("clusters")) {
      GroundTruth truth;
      truth.clusters = manifest.at("clusters").get<std::vector<int>>();
      if (manifest.contains("weights_file")) {
        const fs::path wfile = base / manifest.at("weights_file").get<std::string>();
        const auto t = corpus.tasks.size();
        const auto rows = read_numeric_csv(wfile, t, nullptr);
        if (static_cast<Eigen::Index>(rows.size()) != d)
          throw Error(wfile.string() + ": expected " + std::to_string(d) + " rows of weights");
        truth.weights.resize(d, static_cast<Eigen::Index>(t));
        for (Eigen::Index i = 0; i < d; ++i)
          for (std::size_t j = 0; j < t; ++j)
            truth.weights(i, static_cast<Eigen::Index>(j)) = rows[static_cast<std::size_t>(i)][j];
      }
      corpus.ground_truth = std::move(truth);
    }
  } catch (const json::exception& e) {
    throw Error(manifest_path.string() + ": malformed manifest: " + e.what());
  }
  validate(corpus);
  return corpus;
}

fs::path write_corpus(const TaskCorpus& corpus, const fs::path& dir) {
  validate(corpus);
  fs::create_directories(dir);
  const Eigen::Index d = corpus.dim();
  json manifest;
  manifest["name"] = corpus.name;
  manifest["problem_kind"] = to_string(corpus.problem_kind);
  manifest["d"] = d;
  manifest["tasks"] = json::array();
  const auto header = task_header(d);
  for (const auto& task : corpus.tasks) {
    const std::string file = "task_" + task.task_id + ".csv";
    manifest["tasks"].push_back({{"id", task.task_id}, {"file", file}});
    std::ofstream out(dir / file, std::ios::binary);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (Eigen::Index s = 0; s < task.samples(); ++s) {
      for (Eigen::Index i = 0; i < d; ++i) {
        write_number(out, task.features(i, s));
        out << ',';
      }
      write_number(out, task.targets[s]);
      out << '\n';
    }
    if (!out) throw Error("failed writing '" + (dir / file).string() + "'");
  }
  if (corpus.ground_truth) {
    manifest["clusters"] = corpus.ground_truth->clusters;
    const Matrix& w = corpus.ground_truth->weights;
    if (w.size() != 0) {
      manifest["weights_file"] = "weights.csv";
      std::ofstream out(dir / "weights.csv", std::ios::binary);
      for (std::size_t t = 0; t < corpus.tasks.size(); ++t) out << (t ? "," : "") << corpus.tasks[t].task_id;
      out << '\n';
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
          if (j) out << ',';
          write_number(out, w(i, j));
        }
        out << '\n';
      }
    }
  }
  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path, std::ios::binary);
  out << manifest.dump(2) << '\n';
  return manifest_path;
}

Split split_corpus(const TaskCorpus& corpus, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train fraction must lie in (0, 1)");
  Split split;
  split.train.name = split.test.name = corpus.name;
  split.train.problem_kind = split.test.problem_kind = corpus.problem_kind;
  split.train.ground_truth = split.test.ground_truth = corpus.ground_truth;
  std::mt19937_64 rng(seed);
  for (const auto& task : corpus.tasks) {
    const Eigen::Index n = task.samples();
    if (n < 2) throw Error("task '" + task.task_id + "' needs at least 2 samples to split");
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    auto n_train = static_cast<Eigen::Index>(std::lround(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<Eigen::Index>(n_train, 1, n - 1);
    auto take = [&](Eigen::Index from, Eigen::Index count) {
      TaskData part;
      part.task_id = task.task_id;
      part.loss_kind = task.loss_kind;
      part.features.resize(task.dim(), count);
      part.targets.resize(count);
      for (Eigen::Index j = 0; j < count; ++j) {
        const Eigen::Index src = perm[static_cast<std::size_t>(from + j)];
        part.features.col(j) = task.features.col(src);
        part.targets[j] = task.targets[src];
      }
      return part;
    };
    split.train.tasks.push_back(take(0, n_train));
    split.test.tasks.push_back(take(n_train, n - n_train));
  }
  return split;
}

double standardize_targets(Split& split) {
  if (split.train.problem_kind != LossKind::squared) throw Error("target standardization needs regression data");
  double sum_sq = 0.0;
  double count = 0.0;
  for (const auto& task : split.train.tasks) {
    sum_sq += task.targets.squaredNorm();
    count += static_cast<double>(task.targets.size());
  }
  const double scale = count > 0.0 ? std::sqrt(sum_sq / count) : 0.0;
  if (!(scale > 0.0)) throw Error("training targets are all zero; cannot standardize");
  for (auto* part : {&split.train, &split.test}) {
    for (auto& task : part->tasks) task.targets /= scale;
    if (part->ground_truth) part->ground_truth->weights /= scale;
  }
  return scale;
}

}  // namespace fcl::datasets
