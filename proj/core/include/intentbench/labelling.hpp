#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "intentbench/ingestion.hpp"
#include "intentbench/session.hpp"

namespace intentbench {

/// Dead-band rule for turning joystick axes into commands.
struct LabelRule {
  double tau = 0.1;

  /// Throws ConfigError unless 0 < tau < 1.
  void validate() const;
};

struct LabeledSample {
  Timestamp t;
  CommandLabel label = CommandLabel::Stop;
  int delta_ms = 0;
  std::size_t sample_index = 0;  // column in the source recording
};

/// Activation needs a strict |axis| > tau; |axis| <= tau is dead-band.
/// Returns nullopt when both axes are active (inconsistent command).
std::optional<CommandLabel> classify_command(double v_x, double omega_z, const LabelRule& rule);

/// Label(t) = Joystick(t + delta): each EEG sample takes the class of the
/// joystick sample nearest to its shifted timestamp. Samples with no
/// joystick sample in tolerance, or whose command is discarded, are omitted.
std::vector<LabeledSample> label_at_horizon(std::span<const Timestamp> eeg_ts,
                                            std::span<const JoystickSample> joy,
                                            const LabelRule& rule, Horizon delta,
                                            const AlignmentConfig& align_cfg);

/// labels.csv: `t_ns,label_code`.
void write_labels_csv(std::span<const LabeledSample> labels, const std::filesystem::path& path);

/// Reads labels.csv and maps every row back onto a recording column by exact
/// timestamp match. Throws DataError for unknown timestamps.
std::vector<LabeledSample> read_labels_csv(const std::filesystem::path& path,
                                           std::span<const Timestamp> eeg_ts, int delta_ms);

}  // namespace intentbench
