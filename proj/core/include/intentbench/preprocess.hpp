#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentbench/dsp.hpp"
#include "intentbench/session.hpp"

namespace intentbench {

struct FilterSpec {
  double highpass_hz = 1.0;
  int highpass_order = 4;
  double notch_hz = 50.0;
  double notch_q = 30.0;
  bool zero_phase = true;
  /// Adds a second notch at 2 * notch_hz when that is below Nyquist.
  bool notch_harmonic = false;

  /// Throws ConfigError unless 0 < highpass < notch < fs/2 and the order is
  /// even when zero_phase is set.
  void validate(double fs) const;
};

/// Thresholds for the three bad-channel detectors. Defaults follow the
/// reference PREP pipeline.
struct BadChannelCriteria {
  double deviation_z = 5.0;
  double correlation_min = 0.4;
  double correlation_window_s = 1.0;
  double correlation_bad_fraction = 0.01;
  double ransac_frac = 0.25;
  double ransac_corr_min = 0.75;
  int ransac_samples = 50;
  double ransac_window_s = 5.0;
  double ransac_bad_fraction = 0.4;
  std::uint64_t ransac_seed = 435656;

  void validate() const;
};

enum class BadReason { Deviation, Correlation, Ransac };
std::string_view reason_name(BadReason r) noexcept;

struct BadChannelFinding {
  std::size_t channel = 0;
  std::string name;
  std::vector<BadReason> reasons;
};

struct PreprocessReport {
  std::vector<std::string> stages;
  /// Entry 0 is the detection pass on the unreferenced input; entry k >= 1
  /// lists channels newly flagged in reference iteration k.
  std::vector<std::vector<BadChannelFinding>> bad_channels;
  int reference_iterations = 0;
  std::vector<std::string> interpolated;
  bool zscored = false;

  [[nodiscard]] std::set<std::size_t> final_bad_set() const;
};

nlohmann::json to_json(const PreprocessReport& r);

dsp::Sos design_highpass(const FilterSpec& spec, double fs);
dsp::Sos design_notch(const FilterSpec& spec, double fs);

/// Applies `sos` to every channel, forward-backward when zero_phase is set.
EegRecording apply_filter(const EegRecording& rec, const dsp::Sos& sos, bool zero_phase);

/// Flags channels among those not in `exclude`. Deviation: robust z of the
/// IQR-based amplitude (median/MAD across channels). Correlation: max |r|
/// with any other channel below the threshold in too many windows. RANSAC:
/// correlation with the median inverse-distance prediction from random
/// channel subsets below the threshold in too many windows.
/// Throws DataError with fewer than 4 usable channels.
std::vector<BadChannelFinding> detect_bad_channels(const EegRecording& rec,
                                                   const BadChannelCriteria& criteria,
                                                   const std::set<std::size_t>& exclude);

/// Iterates {mean over good channels, subtract, re-detect} until no new bad
/// channel appears or max_iter is reached. The bad set only grows, so the
/// loop always terminates. Bad channels stay in the matrix (re-referenced)
/// for later interpolation. Throws DataError if every channel is bad.
std::pair<EegRecording, PreprocessReport> robust_average_reference(
    const EegRecording& rec, const BadChannelCriteria& criteria, int max_iter = 4);

struct InterpolationWeights {
  std::vector<std::size_t> sources;
  std::vector<double> weights;  // convex: nonnegative, sum to 1
};

/// Inverse-distance (power 2) weights over the k nearest candidates by
/// great-circle distance. A coincident candidate takes all the weight.
InterpolationWeights idw_weights(const Position3& target, const std::vector<ChannelMeta>& channels,
                                 const std::vector<std::size_t>& candidates, std::size_t k = 3);

/// Spherical-spline (stiffness 4, 7 Legendre terms, regularisation 1e-5)
/// weights predicting `target` from `sources`, as used for RANSAC prediction.
/// Unlike inverse-distance weights these may be negative and extrapolate.
std::vector<double> spherical_spline_weights(const Position3& target,
                                             const std::vector<ChannelMeta>& channels,
                                             const std::vector<std::size_t>& sources);

/// Replaces each bad channel with the IDW combination of its 3 nearest good
/// channels. Throws DataError when |bad| >= C/2 or fewer than 3 are good.
EegRecording interpolate_channels(const EegRecording& rec, const std::set<std::size_t>& bad);

/// Per-channel zero mean, unit population variance. Throws DataError naming
/// the first constant channel.
EegRecording zscore_channels(const EegRecording& rec);

struct PreprocessOptions {
  int max_reference_iterations = 4;
  /// When false the z-score is left to the splitter (train statistics).
  bool zscore_per_session = true;
};

/// high-pass -> notch -> robust reference -> interpolation -> z-score.
std::pair<EegRecording, PreprocessReport> preprocess_session(const EegRecording& rec,
                                                             const FilterSpec& spec,
                                                             const BadChannelCriteria& criteria,
                                                             const PreprocessOptions& opts = {});

}  // namespace intentbench
