#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentbench/session.hpp"

namespace intentbench {

struct SessionDir {
  SessionManifest manifest;
  EegRecording eeg;
  std::vector<JoystickSample> joystick;
};

enum class TieBreak { Earlier };

struct AlignmentConfig {
  double max_gap_ms = 100.0;
  TieBreak tie_break = TieBreak::Earlier;

  /// Throws ConfigError unless max_gap_ms > 0.
  void validate() const;
  [[nodiscard]] std::int64_t max_gap_ns() const;
};

inline constexpr int kManifestFormatVersion = 1;

/// Reads manifest.json, eeg.csv and joystick.jsonl from `dir`.
/// Throws DataError naming the file (and line, for row errors).
SessionDir load_session(const std::filesystem::path& dir);

/// Writes the three session files. Output is byte-deterministic.
void write_session(const SessionDir& session, const std::filesystem::path& dir);

nlohmann::json manifest_to_json(const SessionManifest& m);
SessionManifest manifest_from_json(const nlohmann::json& j);

/// For each EEG timestamp, the index of the nearest joystick sample, or
/// nullopt when the nearest one is further than cfg.max_gap_ms away.
/// Ties resolve to the earlier joystick sample. Both inputs must be strictly
/// increasing; runs in O(T + J).
std::vector<std::optional<std::size_t>> align_nearest(std::span<const Timestamp> eeg_ts,
                                                      std::span<const JoystickSample> joy,
                                                      const AlignmentConfig& cfg);

/// In-memory view of a windows tensor file: row-major float32 [n, C, S]
/// plus its JSON sidecar.
struct WindowTensor {
  std::size_t n_windows = 0;
  std::size_t n_channels = 0;
  std::size_t window_len = 0;
  std::vector<float> data;
  std::vector<int> labels;
  int delta_ms = 0;
  std::string partition;  // "train" | "test"
  nlohmann::json extra = nlohmann::json::object();  // additional sidecar keys
};

/// Writes `<stem>.f32` (little-endian) and `<stem>.json`.
void write_window_tensor(const WindowTensor& w, const std::filesystem::path& stem);
WindowTensor read_window_tensor(const std::filesystem::path& stem);

}  // namespace intentbench
