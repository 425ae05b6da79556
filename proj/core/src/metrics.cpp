#include "intentbench/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "intentbench/errors.hpp"

namespace intentbench {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts) {
    for (auto v : row) n += v;
  }
  return n;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t i) const {
  std::uint64_t n = 0;
  for (auto v : counts[i]) n += v;
  return n;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t j) const {
  std::uint64_t n = 0;
  for (const auto& row : counts) n += row[j];
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t j = 0; j < counts[i].size(); ++j) counts[i][j] += other.counts[i][j];
  }
  return *this;
}

ConfusionMatrix confusion(std::span<const CommandLabel> truth, std::span<const CommandLabel> pred) {
  if (truth.size() != pred.size()) {
    throw DataError("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                    std::to_string(pred.size()) + " predictions");
  }
  ConfusionMatrix cm;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    ++cm.counts[static_cast<std::size_t>(label_code(truth[k]))][static_cast<std::size_t>(label_code(pred[k]))];
  }
  return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricSet metrics_from_confusion(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw DataError("metrics: empty confusion matrix");
  MetricSet m;
  std::uint64_t diag = 0;
  int present = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const std::uint64_t tp = cm.counts[i][i];
    diag += tp;
    auto& pc = m.per_class[i];
    pc.precision = ratio(tp, cm.col_sum(i));
    pc.recall = ratio(tp, cm.row_sum(i));
    const double denom = pc.precision + pc.recall;
    pc.f1 = denom > 0.0 ? 2.0 * pc.precision * pc.recall / denom : 0.0;
    m.present[i] = cm.row_sum(i) > 0;
    if (m.present[i]) {
      m.macro_precision += pc.precision;
      m.macro_recall += pc.recall;
      m.macro_f1 += pc.f1;
      ++present;
    }
  }
  m.accuracy = ratio(diag, total);
  m.macro_precision /= present;
  m.macro_recall /= present;
  m.macro_f1 /= present;
  return m;
}

namespace {

template <typename Fn>
void for_each_field(MetricSet& m, Fn&& fn) {
  fn(m.accuracy);
  fn(m.macro_precision);
  fn(m.macro_recall);
  fn(m.macro_f1);
  for (auto& pc : m.per_class) {
    fn(pc.precision);
    fn(pc.recall);
    fn(pc.f1);
  }
}

}  // namespace

MetricAggregate aggregate_runs(std::span<const MetricSet> runs) {
  if (runs.empty()) throw DataError("aggregate_runs: no runs");
  MetricAggregate agg;
  agg.n_runs = runs.size();
  const double n = static_cast<double>(runs.size());

  // columns[f][r]: field f of run r
  std::vector<std::vector<double>> columns;
  for (const auto& run : runs) {
    MetricSet copy = run;
    std::size_t f = 0;
    for_each_field(copy, [&](double& v) {
      if (columns.size() <= f) columns.emplace_back();
      columns[f++].push_back(v);
    });
    for (std::size_t k = 0; k < kNumClasses; ++k) agg.mean.present[k] = agg.mean.present[k] || run.present[k];
  }
  agg.stddev.present = agg.mean.present;

  std::vector<double> means;
  for (const auto& col : columns) {
    double s = 0.0;
    for (double x : col) s += x;
    means.push_back(s / n);
  }
  std::size_t f = 0;
  for_each_field(agg.mean, [&](double& v) { v = means[f++]; });
  f = 0;
  for_each_field(agg.stddev, [&](double& v) {
    double ss = 0.0;
    for (double x : columns[f]) ss += (x - means[f]) * (x - means[f]);
    v = runs.size() < 2 ? 0.0 : std::sqrt(ss / (n - 1.0));
    ++f;
  });
  return agg;
}

}  // namespace intentbench
