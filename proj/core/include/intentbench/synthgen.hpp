#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "intentbench/ingestion.hpp"
#include "intentbench/session.hpp"

namespace intentbench {

enum class NoiseModel { White, Pink };
std::string_view noise_model_name(NoiseModel m) noexcept;
NoiseModel parse_noise_model(std::string_view name);

enum class CorruptMode { Dead, Noisy };
std::string_view corrupt_mode_name(CorruptMode m) noexcept;
CorruptMode parse_corrupt_mode(std::string_view name);

struct SynthConfig {
  double duration_s = 240.0;
  double sample_rate_hz = 125.0;
  int n_channels = 16;
  /// Signature frequency per class code (forward, reverse, left, right, stop).
  std::array<double, kNumClasses> class_freqs_hz = {30.0, 15.0, 10.0, 20.0, 5.0};
  /// Signal-to-noise ratio at the strongest channel of the active class;
  /// +inf disables all noise.
  double snr_db = 6.0;
  double segment_len_s = 4.0;  // mean dwell per command
  NoiseModel noise_model = NoiseModel::Pink;
  double label_lag_ms = 300.0;
  std::uint64_t rng_seed = 1;

  double signal_amplitude_uv = 20.0;
  /// Fraction of noise power carried by the spatially smooth background
  /// sources; the rest is independent per-sensor noise.
  double background_fraction = 0.95;
  int n_background_sources = 8;
  /// Gaussian spatial widths (radians of great-circle distance) of the class
  /// signature bumps and of the background sources.
  double signal_width_rad = 1.0;
  double background_width_rad = 0.9;

  /// Additive mains interference at this multiple of the signal amplitude.
  std::optional<double> line_noise_factor;
  std::optional<std::string> corrupt_channel;
  CorruptMode corrupt_mode = CorruptMode::Dead;

  /// Holds one command for the whole session instead of the random walk.
  std::optional<CommandLabel> constant_command;

  /// Throws ConfigError. `min_samples_per_class` is the splitter's chunk
  /// count: the expected per-class sample count must reach it.
  void validate(int min_samples_per_class = 100) const;
};

struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;
  CommandLabel command = CommandLabel::Stop;
};

struct SynthSession {
  SessionDir session;
  std::vector<Segment> schedule;
  /// Per EEG sample: the command whose signature drives it, i.e. the command
  /// active at t + label_lag.
  std::vector<CommandLabel> truth;
  /// Per class: channel gain of the class signature (0 outside its subset).
  std::array<std::vector<double>, kNumClasses> class_gains;
};

inline constexpr std::int64_t kSynthEpochNs = 1'700'000'000'000'000'000;
inline constexpr double kJoystickRateHz = 10.0;
inline constexpr double kJoystickMagnitude = 0.8;

/// Seeded schedule: first command uniform, dwell uniform in
/// [0.5, 1.5] x segment_len_s, next command uniform among the other four.
std::vector<Segment> make_schedule(const SynthConfig& cfg, double total_s);

SynthSession generate_session(const SynthConfig& cfg, const std::string& session_id);

/// Session files plus truth_labels.csv (t_ns,label_code).
void write_synth_session(const SynthSession& s, const std::filesystem::path& dir);

}  // namespace intentbench
