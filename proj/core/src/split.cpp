#include "intentbench/split.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "intentbench/errors.hpp"
#include "intentbench/rng.hpp"

namespace intentbench {

void SplitConfig::validate() const {
  if (n_chunks < 1) throw ConfigError("split.n_chunks must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split.train_fraction must lie in (0, 1)");
  }
  if (!(overlap_fraction > 0.0 && overlap_fraction < 1.0)) {
    throw ConfigError("split.overlap_fraction must lie in (0, 1)");
  }
  if (window_len < 2) throw ConfigError("split.window_len must be >= 2");
  if (gap_break_ns && *gap_break_ns <= 0) throw ConfigError("split.gap_break_ns must be positive");
  if (!(edge_trim_s >= 0.0)) throw ConfigError("split.edge_trim_s must be >= 0");
}

std::size_t SplitConfig::hop() const {
  const auto h = static_cast<std::size_t>(std::floor(window_len * (1.0 - overlap_fraction)));
  return std::max<std::size_t>(1, h);
}

std::string_view partition_name(Partition p) noexcept {
  return p == Partition::Train ? "train" : "test";
}

SplitIndices stratified_temporal_split(std::span<const LabeledSample> samples,
                                       const SplitConfig& cfg) {
  if (samples.empty()) throw DataError("cannot split an empty sample list");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].t <= samples[i - 1].t) throw DataError("samples must be in chronological order");
  }

  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    by_class[static_cast<std::size_t>(label_code(samples[i].label))].push_back(i);
  }

  SplitIndices out;
  for (const auto& members : by_class) {
    const std::size_t n = members.size();
    if (n == 0) continue;
    const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(cfg.n_chunks), n);
    const std::size_t base = n / chunks;
    const std::size_t extra = n % chunks;
    // Each chunk sends its first floor or ceil of fraction * size samples to
    // train, chosen so the running total tracks fraction * (samples so far).
    // A per-chunk floor alone would bias small chunks (4 -> 2 of 4).
    // The epsilon absorbs representation error, e.g. 0.7 * 10.
    const auto quota = [&](std::size_t m) {
      return static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(m) + 1e-9));
    };
    std::size_t offset = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t size = base + (c < extra ? 1 : 0);
      const std::size_t n_train = std::clamp<std::size_t>(quota(offset + size) - quota(offset), 1, size);
      for (std::size_t k = 0; k < size; ++k) {
        (k < n_train ? out.train : out.test).push_back(members[offset + k]);
      }
      offset += size;
    }
  }
  // positions follow time order, so sorting positions sorts by timestamp
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

CommandLabel majority_label(std::span<const CommandLabel> labels) {
  std::array<std::size_t, kNumClasses> hist{};
  for (auto l : labels) ++hist[static_cast<std::size_t>(label_code(l))];
  std::size_t best = 0;
  for (std::size_t k = 1; k < hist.size(); ++k) {
    if (hist[k] > hist[best]) best = k;
  }
  return static_cast<CommandLabel>(best);
}

std::vector<LabeledWindow> extract_windows(const EegRecording& rec,
                                           std::span<const LabeledSample> samples,
                                           std::span<const std::size_t> partition,
                                           const SplitConfig& cfg, Partition which) {
  const auto s_len = static_cast<std::size_t>(cfg.window_len);
  const std::size_t hop = cfg.hop();
  const auto c = static_cast<Eigen::Index>(rec.n_channels());

  // contiguous runs of the partition, cut at large timestamp gaps if asked
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= partition.size(); ++i) {
    const bool cut =
        i == partition.size() ||
        (cfg.gap_break_ns &&
         samples[partition[i]].t.nanos - samples[partition[i - 1]].t.nanos > *cfg.gap_break_ns);
    if (cut) {
      runs.emplace_back(run_start, i);
      run_start = i;
    }
  }

  std::vector<LabeledWindow> out;
  std::vector<CommandLabel> labels(s_len);
  for (const auto& [begin, end] : runs) {
    for (std::size_t start = begin; start + s_len <= end; start += hop) {
      LabeledWindow w;
      w.partition = which;
      w.data.resize(c, static_cast<Eigen::Index>(s_len));
      w.start_t = samples[partition[start]].t;
      for (std::size_t j = 0; j < s_len; ++j) {
        const LabeledSample& ls = samples[partition[start + j]];
        w.data.col(static_cast<Eigen::Index>(j)) = rec.samples.col(static_cast<Eigen::Index>(ls.sample_index));
        labels[j] = ls.label;
        if (!w.source.empty() && w.source.back().second == ls.sample_index) {
          ++w.source.back().second;
        } else {
          w.source.emplace_back(ls.sample_index, ls.sample_index + 1);
        }
      }
      w.label = majority_label(labels);
      out.push_back(std::move(w));
    }
  }
  return out;
}

ClassCounts count_labels(const std::vector<LabeledWindow>& windows) {
  ClassCounts counts{};
  for (const auto& w : windows) ++counts[static_cast<std::size_t>(label_code(w.label))];
  return counts;
}

std::vector<LabeledWindow> oversample_train(const std::vector<LabeledWindow>& train,
                                            std::uint64_t seed) {
  if (train.empty()) throw DataError("cannot oversample an empty training set");
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < train.size(); ++i) {
    members[static_cast<std::size_t>(label_code(train[i].label))].push_back(i);
  }
  std::size_t target = 0;
  for (const auto& m : members) target = std::max(target, m.size());

  std::vector<LabeledWindow> out = train;
  Rng rng(seed);
  for (const auto& m : members) {
    if (m.empty()) continue;
    for (std::size_t k = m.size(); k < target; ++k) {
      const std::size_t src = m[rng.below(m.size())];
      LabeledWindow copy = train[src];
      copy.duplicate_of = src;
      out.push_back(std::move(copy));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LabeledWindow& a, const LabeledWindow& b) { return a.start_t < b.start_t; });
  return out;
}

bool partitions_disjoint(const SplitDataset& ds) {
  std::vector<SampleRange> train_ranges;
  for (const auto& w : ds.train) {
    train_ranges.insert(train_ranges.end(), w.source.begin(), w.source.end());
  }
  std::sort(train_ranges.begin(), train_ranges.end());
  // windows overlap each other; merge into a disjoint union first
  std::vector<SampleRange> merged;
  for (const auto& r : train_ranges) {
    if (!merged.empty() && r.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, r.second);
    } else {
      merged.push_back(r);
    }
  }
  train_ranges = std::move(merged);
  for (const auto& w : ds.test) {
    for (const auto& [b, e] : w.source) {
      // first train range that ends after b
      auto it = std::lower_bound(train_ranges.begin(), train_ranges.end(), b,
                                 [](const SampleRange& r, std::size_t v) { return r.first <= v; });
      if (it != train_ranges.begin() && std::prev(it)->second > b) return false;
      if (it != train_ranges.end() && it->first < e) return false;
    }
  }
  return true;
}

namespace {

EegRecording zscore_with_columns(const EegRecording& rec, std::span<const LabeledSample> samples,
                                 std::span<const std::size_t> positions) {
  EegRecording out = rec;
  const double n = static_cast<double>(positions.size());
  for (Eigen::Index ch = 0; ch < rec.samples.rows(); ++ch) {
    double mean = 0.0;
    for (std::size_t p : positions) mean += rec.samples(ch, static_cast<Eigen::Index>(samples[p].sample_index));
    mean /= n;
    double var = 0.0;
    for (std::size_t p : positions) {
      const double d = rec.samples(ch, static_cast<Eigen::Index>(samples[p].sample_index)) - mean;
      var += d * d;
    }
    var /= n;
    if (!(var > 0.0)) {
      throw DataError("channel " + rec.channels[static_cast<std::size_t>(ch)].name +
                      " is constant over the training samples");
    }
    out.samples.row(ch) = (out.samples.row(ch).array() - mean) / std::sqrt(var);
  }
  return out;
}

}  // namespace

SplitDataset build_split(const EegRecording& rec, std::span<const LabeledSample> labels,
                         const SplitConfig& cfg, const BuildSplitOptions& opts) {
  cfg.validate();
  const std::size_t t = rec.n_samples();
  const auto trim = static_cast<std::size_t>(std::llround(cfg.edge_trim_s * rec.sample_rate_hz));

  std::vector<LabeledSample> kept;
  kept.reserve(labels.size());
  for (const auto& l : labels) {
    if (l.sample_index >= t) throw DataError("label refers to a sample outside the recording");
    if (l.sample_index >= trim && l.sample_index + trim < t) kept.push_back(l);
  }
  if (kept.empty()) throw DataError("no labelled samples remain after edge trimming");

  const SplitIndices idx = stratified_temporal_split(kept, cfg);

  SplitDataset ds;
  for (std::size_t p : idx.train) ++ds.train_sample_counts[static_cast<std::size_t>(label_code(kept[p].label))];
  for (std::size_t p : idx.test) ++ds.test_sample_counts[static_cast<std::size_t>(label_code(kept[p].label))];
  for (auto l : kAllLabels) {
    const auto k = static_cast<std::size_t>(label_code(l));
    if (ds.train_sample_counts[k] + ds.test_sample_counts[k] == 0) ds.absent_classes.push_back(l);
  }

  const EegRecording normalized =
      opts.zscore_with_train_stats ? zscore_with_columns(rec, kept, idx.train) : EegRecording{};
  const EegRecording& source = opts.zscore_with_train_stats ? normalized : rec;

  ds.train = extract_windows(source, kept, idx.train, cfg, Partition::Train);
  ds.test = extract_windows(source, kept, idx.test, cfg, Partition::Test);
  ds.train_counts_before_oversampling = count_labels(ds.train);
  if (cfg.oversample && !ds.train.empty()) ds.train = oversample_train(ds.train, cfg.rng_seed);

  if (!partitions_disjoint(ds)) throw DataError("train and test windows share source samples");
  return ds;
}

WindowTensor to_window_tensor(const std::vector<LabeledWindow>& windows, int delta_ms,
                              Partition which) {
  WindowTensor w;
  w.n_windows = windows.size();
  w.partition = std::string(partition_name(which));
  w.delta_ms = delta_ms;
  if (!windows.empty()) {
    w.n_channels = static_cast<std::size_t>(windows.front().data.rows());
    w.window_len = static_cast<std::size_t>(windows.front().data.cols());
  }
  w.data.reserve(w.n_windows * w.n_channels * w.window_len);
  nlohmann::json starts = nlohmann::json::array();
  nlohmann::json provenance = nlohmann::json::array();
  nlohmann::json duplicates = nlohmann::json::array();
  for (const auto& win : windows) {
    for (Eigen::Index ch = 0; ch < win.data.rows(); ++ch) {
      for (Eigen::Index s = 0; s < win.data.cols(); ++s) w.data.push_back(static_cast<float>(win.data(ch, s)));
    }
    w.labels.push_back(label_code(win.label));
    starts.push_back(win.start_t.nanos);
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& [b, e] : win.source) ranges.push_back({b, e});
    provenance.push_back(std::move(ranges));
    duplicates.push_back(win.duplicate_of ? nlohmann::json(*win.duplicate_of) : nlohmann::json(nullptr));
  }
  w.extra["start_t_ns"] = std::move(starts);
  w.extra["provenance"] = std::move(provenance);
  w.extra["duplicate_of"] = std::move(duplicates);
  return w;
}

}  // namespace intentbench
