#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "intentbench/metrics.hpp"

namespace intentbench {

/// One evaluated (model, horizon, run) triple. run_id is usually the
/// session id.
struct RunRecord {
  std::string model;
  int horizon_ms = 0;
  std::string run_id;
  MetricSet metrics;
  ConfusionMatrix confusion;
};

struct BenchmarkReport {
  std::vector<RunRecord> runs;

  /// Runs sorted by (model, horizon, run_id); all emitted files use this
  /// order so output never depends on completion order.
  [[nodiscard]] std::vector<RunRecord> sorted() const;
  [[nodiscard]] std::vector<std::string> models() const;
  [[nodiscard]] std::vector<int> horizons(const std::string& model) const;
  /// Aggregate over all runs of one (model, horizon).
  [[nodiscard]] MetricAggregate aggregate(const std::string& model, int horizon_ms) const;
};

/// Long format: model,horizon_ms,run_id,metric,value (four metric rows per run).
std::string metrics_csv(const BenchmarkReport& report);
/// Mean and sample std across runs, labelled as pooled over runs.
std::string metrics_summary_csv(const BenchmarkReport& report);
/// Confusion matrix summed over runs, rows true, columns predicted.
std::string confusion_csv(const ConfusionMatrix& cm);
/// Mean macro-F1 per horizon, one path per model, y axis fixed to [0, 1].
std::string f1_vs_horizon_svg(const BenchmarkReport& report);

/// Writes metrics.csv, metrics_summary.csv, confusion_<model>_<h>.csv and
/// f1_vs_horizon.svg. Throws DataError when the directory is unwritable.
void emit_report(const BenchmarkReport& report, const std::filesystem::path& out_dir);

}  // namespace intentbench
