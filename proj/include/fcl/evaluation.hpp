#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fcl/lifelong_engine.hpp"
#include "fcl/types.hpp"

namespace fcl::evaluation {

enum class MetricKind { rmse, auc, accuracy };
std::string to_string(MetricKind kind);

double rmse(const Vector& pred, const Vector& truth);

/// Mann-Whitney statistic P(score+ > score-) + P(tie)/2 over all
/// positive/negative pairs, computed from midranks.
double auc(const Vector& scores, const Vector& labels);

double accuracy(const Vector& pred_labels, const Vector& truth);

struct MetricReport {
  MetricKind kind = MetricKind::rmse;
  std::map<std::string, double> per_task;
  double mean = 0.0;
  std::optional<double> std_over_runs;
};

MetricReport make_report(MetricKind kind, std::map<std::string, double> per_task);

/// Sample mean and standard deviation (n - 1 denominator; 0 for n < 2).
std::pair<double, double> mean_std(const std::vector<double>& values);

struct CorrelationMatrix {
  Matrix values;
  bool zero_norm_column = false;  // entries touching a zero column are 0
};

/// |cosine similarity| between every pair of columns; unit diagonal.
CorrelationMatrix model_correlation_matrix(const Matrix& weights);

/// Mean within-cluster minus mean cross-cluster off-diagonal entry.
double block_contrast(const Matrix& correlation, const std::vector<int>& clusters);

struct TimelineRow {
  int arrival = 0;
  std::string task_id;
  Vector z;
  int argmax_slot = 0;  // 1-based; z.size() is the outlier slot
  bool admitted = false;
};

struct Timeline {
  std::vector<TimelineRow> rows;
  int width = 0;  // widest assignment vector in the run
  int admitted_count() const;
};

Timeline representative_timeline(const std::vector<lifelong_engine::TaskOutcome>& outcomes);

/// arrival,task_id,slot_1..slot_W,argmax,admitted; cells past a row's own
/// assignment length read "absent".
void write_timeline_csv(std::ostream& out, const Timeline& timeline);
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& labels);

/// model,task,metric,value rows, one per task, preceded by a header when
/// `header` is set.
void write_report_csv(std::ostream& out, const std::string& model, const MetricReport& report, bool header);
/// One JSON object per line: {"model", "metric", "task", "value"} then a
/// {"model", "metric", "mean"} record.
void write_report_jsonl(std::ostream& out, const std::string& model, const MetricReport& report);

}  // namespace fcl::evaluation
