#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace intentbench {

/// Integer nanoseconds since epoch. Integer storage keeps alignment and
/// splitting bit-exact.
struct Timestamp {
  std::int64_t nanos = 0;

  friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

/// Exact signed difference b - a in nanoseconds. Throws DataError on overflow.
std::int64_t duration_between(Timestamp a, Timestamp b);

using Position3 = std::array<double, 3>;

struct ChannelMeta {
  std::string name;
  Position3 position{};  // unit vector on an idealized head sphere

  friend bool operator==(const ChannelMeta&, const ChannelMeta&) = default;
};

/// Row-major so that each channel is a contiguous time series.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EegRecording {
  std::vector<ChannelMeta> channels;
  std::vector<Timestamp> timestamps;
  SampleMatrix samples;  // C x T, microvolts
  double sample_rate_hz = 125.0;

  [[nodiscard]] std::size_t n_channels() const { return channels.size(); }
  [[nodiscard]] std::size_t n_samples() const { return timestamps.size(); }
  [[nodiscard]] std::optional<std::size_t> channel_index(std::string_view name) const;
};

struct JoystickSample {
  Timestamp t;
  double v_x = 0.0;      // normalized linear velocity, [-1, 1]
  double omega_z = 0.0;  // normalized angular velocity, [-1, 1]
};

enum class CommandLabel : int { Forward = 0, Reverse = 1, Left = 2, Right = 3, Stop = 4 };

inline constexpr int kNumClasses = 5;
inline constexpr std::array<CommandLabel, kNumClasses> kAllLabels = {
    CommandLabel::Forward, CommandLabel::Reverse, CommandLabel::Left, CommandLabel::Right,
    CommandLabel::Stop};

constexpr int label_code(CommandLabel l) noexcept { return static_cast<int>(l); }
/// Throws DataError for codes outside [0, 5).
CommandLabel label_from_code(int code);
std::string_view label_name(CommandLabel l) noexcept;

inline constexpr std::array<int, 9> kHorizonsMs = {0, 300, 400, 500, 600, 700, 800, 900, 1000};

/// Labelling horizon. Only the nine supported offsets are constructible.
class Horizon {
public:
  /// Throws ConfigError when delta_ms is not one of kHorizonsMs.
  explicit Horizon(int delta_ms);

  [[nodiscard]] int ms() const noexcept { return delta_ms_; }
  [[nodiscard]] std::int64_t nanos() const noexcept {
    return static_cast<std::int64_t>(delta_ms_) * 1'000'000;
  }
  static bool is_valid(int delta_ms) noexcept;

  friend bool operator==(const Horizon&, const Horizon&) = default;

private:
  int delta_ms_;
};

struct SessionManifest {
  std::string subject_id;
  std::string session_id;
  double sample_rate_hz = 125.0;
  std::vector<ChannelMeta> montage;
  std::vector<std::string> reserved_streams;
};

/// The 16 electrodes of the recording cap, in canonical order, with
/// idealized 10-20 coordinates (x right, y nasion, z vertex).
const std::vector<ChannelMeta>& standard_montage();

/// Looks up an idealized position for any electrode in the built-in table.
std::optional<Position3> electrode_position(std::string_view name);

struct ValidationReport {
  std::vector<std::size_t> monotonicity_violations;  // index i where t[i] <= t[i-1]
  struct NonFinite {
    std::size_t channel;
    std::size_t sample;
  };
  std::vector<NonFinite> non_finite;
  std::vector<std::string> structural;  // shape / metadata problems
  std::optional<std::int64_t> median_gap_ns;
  std::int64_t nominal_gap_ns = 0;
  bool rate_drift = false;

  [[nodiscard]] bool empty() const {
    return monotonicity_violations.empty() && non_finite.empty() && structural.empty() &&
           !rate_drift;
  }
};

/// Report-style check; never throws. Drift is flagged when the median
/// inter-sample gap is off the nominal period by more than 1%.
ValidationReport validate_recording(const EegRecording& rec);

/// Great-circle distance (radians) between two unit vectors.
double great_circle(const Position3& a, const Position3& b);

}  // namespace intentbench
