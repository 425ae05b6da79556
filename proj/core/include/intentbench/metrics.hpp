#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "intentbench/session.hpp"

namespace intentbench {

/// Rows are the true class, columns the predicted class.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  [[nodiscard]] std::uint64_t total() const;
  [[nodiscard]] std::uint64_t row_sum(std::size_t i) const;
  [[nodiscard]] std::uint64_t col_sum(std::size_t j) const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws DataError on a length mismatch.
ConfusionMatrix confusion(std::span<const CommandLabel> truth, std::span<const CommandLabel> pred);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricSet {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  std::array<bool, kNumClasses> present{};  // class occurs in the truth
};

/// Zero denominators give 0; macro values average over classes present in
/// the truth. Throws DataError for an empty matrix.
MetricSet metrics_from_confusion(const ConfusionMatrix& cm);

struct MetricAggregate {
  MetricSet mean;
  MetricSet stddev;  // sample standard deviation, 0 for a single run
  std::size_t n_runs = 0;
};

/// Field-wise mean and sample standard deviation. Throws DataError when empty.
MetricAggregate aggregate_runs(std::span<const MetricSet> runs);

}  // namespace intentbench
