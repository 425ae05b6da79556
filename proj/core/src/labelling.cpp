#include "intentbench/labelling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "intentbench/errors.hpp"
#include "io_util.hpp"

namespace intentbench {

void LabelRule::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("labelling.tau must lie in (0, 1)");
}

std::optional<CommandLabel> classify_command(double v_x, double omega_z, const LabelRule& rule) {
  const double tau = rule.tau;
  const bool v_dead = std::abs(v_x) <= tau;
  const bool w_dead = std::abs(omega_z) <= tau;
  if (v_dead && w_dead) return CommandLabel::Stop;
  if (!v_dead && !w_dead) return std::nullopt;
  if (w_dead) return v_x > tau ? CommandLabel::Forward : CommandLabel::Reverse;
  return omega_z > tau ? CommandLabel::Left : CommandLabel::Right;
}

std::vector<LabeledSample> label_at_horizon(std::span<const Timestamp> eeg_ts,
                                            std::span<const JoystickSample> joy,
                                            const LabelRule& rule, Horizon delta,
                                            const AlignmentConfig& align_cfg) {
  std::vector<Timestamp> shifted(eeg_ts.size());
  for (std::size_t i = 0; i < eeg_ts.size(); ++i) {
    std::int64_t t = 0;
    if (__builtin_add_overflow(eeg_ts[i].nanos, delta.nanos(), &t)) {
      throw DataError("timestamp overflow while shifting by the horizon");
    }
    shifted[i].nanos = t;
  }
  const auto match = align_nearest(shifted, joy, align_cfg);

  std::vector<LabeledSample> out;
  out.reserve(eeg_ts.size());
  for (std::size_t i = 0; i < eeg_ts.size(); ++i) {
    if (!match[i]) continue;
    const auto& js = joy[*match[i]];
    const auto label = classify_command(js.v_x, js.omega_z, rule);
    if (!label) continue;
    out.push_back({eeg_ts[i], *label, delta.ms(), i});
  }
  return out;
}

void write_labels_csv(std::span<const LabeledSample> labels, const std::filesystem::path& path) {
  std::string out = "t_ns,label_code\n";
  out.reserve(out.size() + labels.size() * 24);
  for (const auto& l : labels) {
    out += std::to_string(l.t.nanos);
    out += ',';
    out += std::to_string(label_code(l.label));
    out += '\n';
  }
  detail::write_file_atomic(path, out);
}

std::vector<LabeledSample> read_labels_csv(const std::filesystem::path& path,
                                           std::span<const Timestamp> eeg_ts, int delta_ms) {
  const std::string text = detail::read_text_file(path);
  const std::string where = path.filename().string();
  std::vector<LabeledSample> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t cursor = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line = std::string_view(text).substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != "t_ns,label_code") throw DataError(where + ": unexpected header");
      continue;
    }
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    std::int64_t t = 0;
    std::int64_t code = 0;
    if (fields.size() != 2 || !detail::parse_int64(fields[0], t) ||
        !detail::parse_int64(fields[1], code)) {
      throw DataError(where + ":" + std::to_string(line_no) + ": malformed row");
    }
    // rows are chronological, so the lookup cursor only moves forward
    const auto it = std::lower_bound(eeg_ts.begin() + static_cast<std::ptrdiff_t>(cursor),
                                     eeg_ts.end(), Timestamp{t});
    if (it == eeg_ts.end() || it->nanos != t) {
      throw DataError(where + ":" + std::to_string(line_no) + ": timestamp " + std::to_string(t) +
                      " is not in the recording");
    }
    cursor = static_cast<std::size_t>(it - eeg_ts.begin());
    out.push_back({Timestamp{t}, label_from_code(static_cast<int>(code)), delta_ms, cursor});
  }
  return out;
}

}  // namespace intentbench
