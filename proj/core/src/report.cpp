#include "intentbench/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <tuple>

#include "intentbench/errors.hpp"
#include "io_util.hpp"

namespace intentbench {

std::vector<RunRecord> BenchmarkReport::sorted() const {
  std::vector<RunRecord> out = runs;
  std::stable_sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.model, a.horizon_ms, a.run_id) < std::tie(b.model, b.horizon_ms, b.run_id);
  });
  return out;
}

std::vector<std::string> BenchmarkReport::models() const {
  std::set<std::string> names;
  for (const auto& r : runs) names.insert(r.model);
  return {names.begin(), names.end()};
}

std::vector<int> BenchmarkReport::horizons(const std::string& model) const {
  std::set<int> hs;
  for (const auto& r : runs) {
    if (r.model == model) hs.insert(r.horizon_ms);
  }
  return {hs.begin(), hs.end()};
}

MetricAggregate BenchmarkReport::aggregate(const std::string& model, int horizon_ms) const {
  std::vector<MetricSet> sets;
  for (const auto& r : sorted()) {
    if (r.model == model && r.horizon_ms == horizon_ms) sets.push_back(r.metrics);
  }
  return aggregate_runs(sets);
}

namespace {

constexpr std::array<const char*, 4> kMetricNames = {"accuracy", "macro_precision", "macro_recall",
                                                     "macro_f1"};

std::array<double, 4> headline(const MetricSet& m) {
  return {m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1};
}

}  // namespace

std::string metrics_csv(const BenchmarkReport& report) {
  std::string out = "model,horizon_ms,run_id,metric,value\n";
  for (const auto& r : report.sorted()) {
    const auto values = headline(r.metrics);
    for (std::size_t k = 0; k < values.size(); ++k) {
      out += r.model + ',' + std::to_string(r.horizon_ms) + ',' + r.run_id + ',' + kMetricNames[k] + ',';
      detail::append_double(out, values[k]);
      out += '\n';
    }
  }
  return out;
}

std::string metrics_summary_csv(const BenchmarkReport& report) {
  std::string out = "model,horizon_ms,aggregation,n_runs,metric,mean,std\n";
  for (const auto& model : report.models()) {
    for (int h : report.horizons(model)) {
      const MetricAggregate agg = report.aggregate(model, h);
      const auto mean = headline(agg.mean);
      const auto sd = headline(agg.stddev);
      for (std::size_t k = 0; k < mean.size(); ++k) {
        out += model + ',' + std::to_string(h) + ",pooled_runs," + std::to_string(agg.n_runs) + ',' +
               kMetricNames[k] + ',';
        detail::append_double(out, mean[k]);
        out += ',';
        detail::append_double(out, sd[k]);
        out += '\n';
      }
    }
  }
  return out;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "true\\pred";
  for (auto l : kAllLabels) out += ',' + std::string(label_name(l));
  out += '\n';
  for (auto t : kAllLabels) {
    out += label_name(t);
    for (auto p : kAllLabels) {
      out += ',' + std::to_string(cm.counts[static_cast<std::size_t>(label_code(t))]
                                           [static_cast<std::size_t>(label_code(p))]);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string f1_vs_horizon_svg(const BenchmarkReport& report) {
  constexpr double width = 640, height = 420;
  constexpr double left = 70, right = 150, top = 30, bottom = 60;
  constexpr double plot_w = width - left - right, plot_h = height - top - bottom;
  constexpr std::array<const char*, 6> colors = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#9467bd", "#ff7f0e", "#8c564b"};
  int h_min = 0, h_max = 1000;
  for (const auto& r : report.runs) {
    h_min = std::min(h_min, r.horizon_ms);
    h_max = std::max(h_max, r.horizon_ms);
  }
  const auto x_of = [&](double h) { return left + plot_w * (h - h_min) / static_cast<double>(h_max - h_min); };
  const auto y_of = [&](double v) { return top + plot_h * (1.0 - v); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
       "\" viewBox=\"0 0 " + fmt(width) + ' ' + fmt(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) + "\" fill=\"white\"/>\n";
  // axes
  s += "<line class=\"axis\" x1=\"" + fmt(left) + "\" y1=\"" + fmt(y_of(0)) + "\" x2=\"" + fmt(left + plot_w) +
       "\" y2=\"" + fmt(y_of(0)) + "\" stroke=\"black\"/>\n";
  s += "<line class=\"axis\" x1=\"" + fmt(left) + "\" y1=\"" + fmt(y_of(0)) + "\" x2=\"" + fmt(left) + "\" y2=\"" +
       fmt(y_of(1)) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = k / 5.0;
    s += "<line x1=\"" + fmt(left - 5) + "\" y1=\"" + fmt(y_of(v)) + "\" x2=\"" + fmt(left) + "\" y2=\"" +
         fmt(y_of(v)) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(y_of(v) + 4) + "\" text-anchor=\"end\">" + fmt(v) +
         "</text>\n";
  }
  std::set<int> ticks;
  for (const auto& r : report.runs) ticks.insert(r.horizon_ms);
  for (int h : ticks) {
    s += "<line x1=\"" + fmt(x_of(h)) + "\" y1=\"" + fmt(y_of(0)) + "\" x2=\"" + fmt(x_of(h)) + "\" y2=\"" +
         fmt(y_of(0) + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt(x_of(h)) + "\" y=\"" + fmt(y_of(0) + 18) + "\" text-anchor=\"middle\">" +
         std::to_string(h) + "</text>\n";
  }
  s += "<text x=\"" + fmt(left + plot_w / 2) + "\" y=\"" + fmt(height - 15) +
       "\" text-anchor=\"middle\">prediction horizon (ms)</text>\n";
  s += "<text x=\"18\" y=\"" + fmt(top + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       fmt(top + plot_h / 2) + ")\">macro F1 (mean over runs)</text>\n";

  const auto models = report.models();
  for (std::size_t m = 0; m < models.size(); ++m) {
    const char* color = colors[m % colors.size()];
    std::string d;
    for (int h : report.horizons(models[m])) {
      const MetricAggregate agg = report.aggregate(models[m], h);
      const double x = x_of(h);
      d += (d.empty() ? "M" : " L") + fmt(x) + ' ' + fmt(y_of(agg.mean.macro_f1));
      if (agg.n_runs > 1) {
        const double lo = std::max(0.0, agg.mean.macro_f1 - agg.stddev.macro_f1);
        const double hi = std::min(1.0, agg.mean.macro_f1 + agg.stddev.macro_f1);
        s += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y_of(lo)) + "\" x2=\"" + fmt(x) + "\" y2=\"" + fmt(y_of(hi)) +
             "\" stroke=\"" + color + "\" stroke-opacity=\"0.5\"/>\n";
      }
    }
    s += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" data-model=\"" +
         models[m] + "\"/>\n";
    const double ly = top + 20.0 * static_cast<double>(m + 1);
    s += "<text x=\"" + fmt(left + plot_w + 15) + "\" y=\"" + fmt(ly) + "\" fill=\"" + color + "\">" + models[m] +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

void emit_report(const BenchmarkReport& report, const std::filesystem::path& out_dir) {
  if (report.runs.empty()) throw DataError("emit_report: no runs to report");
  detail::write_file_atomic(out_dir / "metrics.csv", metrics_csv(report));
  detail::write_file_atomic(out_dir / "metrics_summary.csv", metrics_summary_csv(report));
  for (const auto& model : report.models()) {
    for (int h : report.horizons(model)) {
      ConfusionMatrix total;
      for (const auto& r : report.runs) {
        if (r.model == model && r.horizon_ms == h) total += r.confusion;
      }
      detail::write_file_atomic(out_dir / ("confusion_" + model + "_" + std::to_string(h) + ".csv"),
                                confusion_csv(total));
    }
  }
  detail::write_file_atomic(out_dir / "f1_vs_horizon.svg", f1_vs_horizon_svg(report));
}

}  // namespace intentbench
