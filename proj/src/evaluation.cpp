#include "fcl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include <json.hpp>

namespace fcl::evaluation {

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::rmse:
      return "rmse";
    case MetricKind::auc:
      return "auc";
    case MetricKind::accuracy:
      return "accuracy";
  }
  return "unknown";
}

double rmse(const Vector& pred, const Vector& truth) {
  if (pred.size() != truth.size()) throw Error("rmse: length mismatch");
  if (pred.size() == 0) throw Error("rmse: empty input");
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

double auc(const Vector& scores, const Vector& labels) {
  if (scores.size() != labels.size()) throw Error("auc: length mismatch");
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] < scores[static_cast<Eigen::Index>(b)];
  });
  // Midranks handle ties as half-wins.
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n &&
           scores[static_cast<Eigen::Index>(order[j + 1])] == scores[static_cast<Eigen::Index>(order[i])])
      ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double pos = 0.0;
  double neg = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = labels[static_cast<Eigen::Index>(i)];
    if (y == 1.0) {
      pos += 1.0;
      rank_sum += rank[i];
    } else if (y == -1.0) {
      neg += 1.0;
    } else {
      throw Error("auc: labels must be +1/-1");
    }
  }
  if (pos == 0.0 || neg == 0.0) throw Error("auc: needs at least one positive and one negative label");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double accuracy(const Vector& pred_labels, const Vector& truth) {
  if (pred_labels.size() != truth.size()) throw Error("accuracy: length mismatch");
  if (truth.size() == 0) throw Error("accuracy: empty input");
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) hits += pred_labels[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

MetricReport make_report(MetricKind kind, std::map<std::string, double> per_task) {
  MetricReport report;
  report.kind = kind;
  report.per_task = std::move(per_task);
  double total = 0.0;
  for (const auto& [id, v] : report.per_task) total += v;
  report.mean = report.per_task.empty() ? 0.0 : total / static_cast<double>(report.per_task.size());
  return report;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

CorrelationMatrix model_correlation_matrix(const Matrix& weights) {
  const Eigen::Index t = weights.cols();
  if (t < 2) throw Error("correlation matrix needs at least two models");
  CorrelationMatrix out;
  out.values = Matrix::Zero(t, t);
  const Vector norms = weights.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < t; ++i) {
    out.values(i, i) = 1.0;
    if (norms[i] == 0.0) out.zero_norm_column = true;
    for (Eigen::Index j = i + 1; j < t; ++j) {
      double c = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0)
        c = std::min(1.0, std::abs(weights.col(i).dot(weights.col(j))) / (norms[i] * norms[j]));
      out.values(i, j) = out.values(j, i) = c;
    }
  }
  return out;
}

double block_contrast(const Matrix& correlation, const std::vector<int>& clusters) {
  const auto t = static_cast<Eigen::Index>(clusters.size());
  if (correlation.rows() != t || correlation.cols() != t) throw Error("block contrast: size mismatch");
  double within = 0.0, cross = 0.0;
  double n_within = 0.0, n_cross = 0.0;
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      if (i == j) continue;
      if (clusters[static_cast<std::size_t>(i)] == clusters[static_cast<std::size_t>(j)]) {
        within += correlation(i, j);
        n_within += 1.0;
      } else {
        cross += correlation(i, j);
        n_cross += 1.0;
      }
    }
  }
  if (n_within == 0.0 || n_cross == 0.0) throw Error("block contrast needs within- and cross-cluster pairs");
  return within / n_within - cross / n_cross;
}

int Timeline::admitted_count() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.admitted; }));
}

Timeline representative_timeline(const std::vector<lifelong_engine::TaskOutcome>& outcomes) {
  Timeline timeline;
  for (const auto& outcome : outcomes) {
    TimelineRow row;
    row.arrival = outcome.arrival;
    row.task_id = outcome.task_id;
    row.z = outcome.assignment.z;
    Eigen::Index best = 0;
    // Ties resolve to the earliest slot, matching admission's tie rule.
    for (Eigen::Index i = 1; i < row.z.size(); ++i)
      if (row.z[i] > row.z[best]) best = i;
    row.argmax_slot = static_cast<int>(best) + 1;
    row.admitted = outcome.admitted;
    timeline.width = std::max(timeline.width, static_cast<int>(row.z.size()));
    timeline.rows.push_back(std::move(row));
  }
  return timeline;
}

void write_timeline_csv(std::ostream& out, const Timeline& timeline) {
  out << "arrival,task_id";
  for (int s = 1; s <= timeline.width; ++s) out << ",slot_" << s;
  out << ",outlier_slot,argmax,admitted\n";
  out << std::setprecision(10);
  for (const auto& row : timeline.rows) {
    out << row.arrival << ',' << row.task_id;
    for (int s = 0; s < timeline.width; ++s) {
      out << ',';
      if (s < row.z.size())
        out << row.z[s];
      else
        out << "absent";
    }
    out << ',' << row.z.size() << ',' << row.argmax_slot << ',' << (row.admitted ? 1 : 0) << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& labels) {
  out << "task";
  for (const auto& l : labels) out << ',' << l;
  out << '\n' << std::fixed << std::setprecision(6);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << m(i, j);
    out << '\n';
  }
  out << std::defaultfloat;
}

void write_report_csv(std::ostream& out, const std::string& model, const MetricReport& report, bool header) {
  if (header) out << "model,task,metric,value\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& [id, v] : report.per_task) out << model << ',' << id << ',' << to_string(report.kind) << ',' << v << '\n';
  out << std::defaultfloat;
}

void write_report_jsonl(std::ostream& out, const std::string& model, const MetricReport& report) {
  for (const auto& [id, v] : report.per_task) {
    nlohmann::json rec{{"model", model}, {"metric", to_string(report.kind)}, {"task", id}, {"value", v}};
    out << rec.dump() << '\n';
  }
  nlohmann::json summary{{"model", model}, {"metric", to_string(report.kind)}, {"mean", report.mean}};
  if (report.std_over_runs) summary["std"] = *report.std_over_runs;
  out << summary.dump() << '\n';
}

}  // namespace fcl::evaluation
