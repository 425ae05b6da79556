#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "intentbench/ingestion.hpp"
#include "intentbench/labelling.hpp"
#include "intentbench/session.hpp"

namespace intentbench {

struct SplitConfig {
  int n_chunks = 100;
  double train_fraction = 0.7;
  int window_len = 125;
  double overlap_fraction = 0.5;
  bool oversample = true;
  std::uint64_t rng_seed = 7;
  /// When set, windows never span a timestamp gap larger than this.
  std::optional<std::int64_t> gap_break_ns;
  /// Filter start-up transients: samples this close to either end of the
  /// recording are not windowed.
  double edge_trim_s = 1.0;

  void validate() const;
  [[nodiscard]] std::size_t hop() const;
};

enum class Partition { Train, Test };
std::string_view partition_name(Partition p) noexcept;

using SampleRange = std::pair<std::size_t, std::size_t>;  // [begin, end) recording columns

struct LabeledWindow {
  SampleMatrix data;  // C x S
  CommandLabel label = CommandLabel::Stop;
  Timestamp start_t;
  Partition partition = Partition::Train;
  std::vector<SampleRange> source;  // provenance
  std::optional<std::size_t> duplicate_of;  // set on oversampled copies
};

using ClassCounts = std::array<std::size_t, kNumClasses>;

struct SplitIndices {
  std::vector<std::size_t> train;  // positions into the input sample list
  std::vector<std::size_t> test;
};

/// Per class: chronological chunks (sizes differ by at most one, the first
/// count mod N are larger). Each chunk's first floor(f * n) or ceil(f * n)
/// samples (at least one) go to train, picked so the class total is
/// floor(f * count); the rest go to test. Both outputs re-sorted by time.
/// Throws DataError on empty or unordered input.
SplitIndices stratified_temporal_split(std::span<const LabeledSample> samples,
                                       const SplitConfig& cfg);

/// Majority label of a window; ties go to the lowest class code.
CommandLabel majority_label(std::span<const CommandLabel> labels);

/// Sliding windows over one partition (positions into `samples`, sorted).
/// Returns an empty list when the partition is shorter than a window.
std::vector<LabeledWindow> extract_windows(const EegRecording& rec,
                                           std::span<const LabeledSample> samples,
                                           std::span<const std::size_t> partition,
                                           const SplitConfig& cfg, Partition which);

/// Duplicates randomly chosen windows of each under-represented class until
/// every present class matches the largest one. Originals are kept; copies
/// sit directly after windows with the same start time.
std::vector<LabeledWindow> oversample_train(const std::vector<LabeledWindow>& train,
                                            std::uint64_t seed);

ClassCounts count_labels(const std::vector<LabeledWindow>& windows);

struct SplitDataset {
  std::vector<LabeledWindow> train;
  std::vector<LabeledWindow> test;
  ClassCounts train_counts_before_oversampling{};
  ClassCounts train_sample_counts{};  // per-sample labels assigned to train
  ClassCounts test_sample_counts{};
  std::vector<CommandLabel> absent_classes;
};

struct BuildSplitOptions {
  /// z-score with statistics of the training samples instead of upstream.
  bool zscore_with_train_stats = false;
};

/// Edge trim, stratified split, per-partition windowing and optional
/// training-only oversampling for one session and one horizon. Verifies the
/// no-leakage invariant on provenance and throws DataError if it fails.
SplitDataset build_split(const EegRecording& rec, std::span<const LabeledSample> labels,
                         const SplitConfig& cfg, const BuildSplitOptions& opts = {});

/// True when no recording column feeds both a train and a test window.
bool partitions_disjoint(const SplitDataset& ds);

WindowTensor to_window_tensor(const std::vector<LabeledWindow>& windows, int delta_ms,
                              Partition which);

}  // namespace intentbench
