#include "intentbench/ingestion.hpp"

#include <cmath>
#include <string>
#include <string_view>

#include "intentbench/errors.hpp"
#include "io_util.hpp"

namespace intentbench {

namespace fs = std::filesystem;
using nlohmann::json;

void AlignmentConfig::validate() const {
  if (!(max_gap_ms > 0.0) || !std::isfinite(max_gap_ms)) {
    throw ConfigError("alignment.max_gap_ms must be > 0");
  }
}

std::int64_t AlignmentConfig::max_gap_ns() const { return std::llround(max_gap_ms * 1e6); }

json manifest_to_json(const SessionManifest& m) {
  json channels = json::array();
  for (const auto& ch : m.montage) {
    channels.push_back({{"name", ch.name}, {"pos", ch.position}});
  }
  return json{{"format_version", kManifestFormatVersion},
              {"subject_id", m.subject_id},
              {"session_id", m.session_id},
              {"sample_rate_hz", m.sample_rate_hz},
              {"channels", channels},
              {"reserved_streams", m.reserved_streams}};
}

SessionManifest manifest_from_json(const json& j) {
  SessionManifest m;
  try {
    if (j.at("format_version").get<int>() != kManifestFormatVersion) {
      throw DataError("manifest.json: unsupported format_version " +
                      j.at("format_version").dump());
    }
    m.subject_id = j.at("subject_id").get<std::string>();
    m.session_id = j.at("session_id").get<std::string>();
    m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    for (const auto& ch : j.at("channels")) {
      ChannelMeta meta;
      meta.name = ch.at("name").get<std::string>();
      const auto pos = ch.at("pos").get<std::vector<double>>();
      if (pos.size() != 3) throw DataError("manifest.json: channel " + meta.name + " pos needs 3 values");
      const double norm = std::sqrt(pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]);
      if (std::abs(norm - 1.0) > 1e-3) {
        throw DataError("manifest.json: channel " + meta.name + " position is not on the unit sphere");
      }
      // exact values survive a write/load round trip; only visibly off-sphere
      // positions are projected back
      const double scale = std::abs(norm - 1.0) > 1e-12 ? 1.0 / norm : 1.0;
      meta.position = {pos[0] * scale, pos[1] * scale, pos[2] * scale};
      m.montage.push_back(std::move(meta));
    }
    if (j.contains("reserved_streams")) {
      m.reserved_streams = j.at("reserved_streams").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest.json: ") + e.what());
  }
  if (m.subject_id.empty() || m.session_id.empty()) {
    throw DataError("manifest.json: subject_id and session_id must be non-empty");
  }
  if (!(m.sample_rate_hz > 0.0)) throw DataError("manifest.json: sample_rate_hz must be > 0");
  if (m.montage.size() < 2) throw DataError("manifest.json: need at least 2 channels");
  for (std::size_t i = 0; i < m.montage.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (m.montage[i].name == m.montage[k].name) {
        throw DataError("manifest.json: duplicate channel " + m.montage[i].name);
      }
    }
  }
  return m;
}

namespace {

EegRecording parse_eeg_csv(const std::string& text, const SessionManifest& manifest,
                           const fs::path& file) {
  const std::string where = file.filename().string();
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    line = std::string_view(text).substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view header;
  if (!next_line(header)) throw DataError(where + ": empty file");
  const auto names = detail::split(header, ',');
  if (names.empty() || names[0] != "timestamp_ns") {
    throw DataError(where + ": header must start with timestamp_ns");
  }
  const std::size_t c = names.size() - 1;
  if (c != manifest.montage.size()) {
    throw DataError(where + ": montage mismatch, header lists " + std::to_string(c) +
                    " channels but manifest lists " + std::to_string(manifest.montage.size()));
  }
  for (std::size_t i = 0; i < c; ++i) {
    if (names[i + 1] != manifest.montage[i].name) {
      throw DataError(where + ": montage mismatch at column " + std::to_string(i + 2) + " (" +
                      std::string(names[i + 1]) + " vs manifest " + manifest.montage[i].name + ")");
    }
  }

  std::vector<Timestamp> ts;
  std::vector<double> values;
  std::string_view line;
  while (next_line(line)) {
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != c + 1) {
      throw DataError(where + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(c + 1) + " fields, got " + std::to_string(fields.size()));
    }
    std::int64_t t = 0;
    if (!detail::parse_int64(fields[0], t) || t < 0) {
      throw DataError(where + ":" + std::to_string(line_no) + ": bad timestamp '" +
                      std::string(fields[0]) + "'");
    }
    if (!ts.empty() && t <= ts.back().nanos) {
      throw DataError(where + ":" + std::to_string(line_no) + ": non-monotone timestamp");
    }
    ts.push_back({t});
    for (std::size_t i = 1; i <= c; ++i) {
      double v = 0.0;
      if (!detail::parse_double(fields[i], v) || !std::isfinite(v)) {
        throw DataError(where + ":" + std::to_string(line_no) + ": bad sample value '" +
                        std::string(fields[i]) + "'");
      }
      values.push_back(v);
    }
  }

  EegRecording rec;
  rec.channels = manifest.montage;
  rec.sample_rate_hz = manifest.sample_rate_hz;
  rec.timestamps = std::move(ts);
  const auto t_count = static_cast<Eigen::Index>(rec.timestamps.size());
  rec.samples.resize(static_cast<Eigen::Index>(c), t_count);
  for (Eigen::Index s = 0; s < t_count; ++s) {
    for (Eigen::Index ch = 0; ch < static_cast<Eigen::Index>(c); ++ch) {
      rec.samples(ch, s) = values[static_cast<std::size_t>(s) * c + static_cast<std::size_t>(ch)];
    }
  }
  return rec;
}

std::vector<JoystickSample> parse_joystick(const std::string& text, const fs::path& file) {
  const std::string where = file.filename().string();
  std::vector<JoystickSample> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line = std::string_view(text).substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string loc = where + ":" + std::to_string(line_no);
    JoystickSample s;
    try {
      const json j = json::parse(line);
      s.t.nanos = j.at("t_ns").get<std::int64_t>();
      s.v_x = j.at("vx").get<double>();
      s.omega_z = j.at("wz").get<double>();
    } catch (const json::exception& e) {
      throw DataError(loc + ": malformed joystick record: " + e.what());
    }
    if (s.t.nanos < 0) throw DataError(loc + ": negative timestamp");
    if (!std::isfinite(s.v_x) || std::abs(s.v_x) > 1.0) {
      throw DataError(loc + ": vx out of range [-1, 1]");
    }
    if (!std::isfinite(s.omega_z) || std::abs(s.omega_z) > 1.0) {
      throw DataError(loc + ": wz out of range [-1, 1]");
    }
    if (!out.empty() && s.t <= out.back().t) throw DataError(loc + ": non-monotone timestamp");
    out.push_back(s);
  }
  return out;
}

}  // namespace

SessionDir load_session(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  const fs::path eeg_path = dir / "eeg.csv";
  const fs::path joy_path = dir / "joystick.jsonl";
  for (const auto& p : {manifest_path, eeg_path, joy_path}) {
    if (!fs::is_regular_file(p)) throw DataError("missing session file " + p.string());
  }

  SessionDir out;
  json mj;
  try {
    mj = json::parse(detail::read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  out.manifest = manifest_from_json(mj);
  out.eeg = parse_eeg_csv(detail::read_text_file(eeg_path), out.manifest, eeg_path);
  out.joystick = parse_joystick(detail::read_text_file(joy_path), joy_path);
  if (out.eeg.n_samples() < 2) throw DataError("eeg.csv: need at least 2 samples");
  return out;
}

void write_session(const SessionDir& session, const fs::path& dir) {
  fs::create_directories(dir);
  detail::write_file_atomic(dir / "manifest.json", manifest_to_json(session.manifest).dump(2) + "\n");

  const auto& rec = session.eeg;
  std::string csv = "timestamp_ns";
  for (const auto& ch : rec.channels) {
    csv += ',';
    csv += ch.name;
  }
  csv += '\n';
  csv.reserve(csv.size() + rec.n_samples() * (20 + rec.n_channels() * 22));
  for (std::size_t s = 0; s < rec.n_samples(); ++s) {
    csv += std::to_string(rec.timestamps[s].nanos);
    for (std::size_t ch = 0; ch < rec.n_channels(); ++ch) {
      csv += ',';
      detail::append_double(csv, rec.samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(s)));
    }
    csv += '\n';
  }
  detail::write_file_atomic(dir / "eeg.csv", csv);

  std::string jl;
  for (const auto& j : session.joystick) {
    jl += "{\"t_ns\":" + std::to_string(j.t.nanos) + ",\"vx\":";
    detail::append_double(jl, j.v_x);
    jl += ",\"wz\":";
    detail::append_double(jl, j.omega_z);
    jl += "}\n";
  }
  detail::write_file_atomic(dir / "joystick.jsonl", jl);
}

std::vector<std::optional<std::size_t>> align_nearest(std::span<const Timestamp> eeg_ts,
                                                      std::span<const JoystickSample> joy,
                                                      const AlignmentConfig& cfg) {
  std::vector<std::optional<std::size_t>> out(eeg_ts.size());
  if (joy.empty()) return out;
  const std::int64_t max_gap = cfg.max_gap_ns();
  // |a - b| without signed overflow for any pair of non-pathological stamps
  auto dist = [](std::int64_t a, std::int64_t b) -> std::uint64_t {
    return a > b ? static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b)
                 : static_cast<std::uint64_t>(b) - static_cast<std::uint64_t>(a);
  };
  std::size_t j = 0;
  for (std::size_t i = 0; i < eeg_ts.size(); ++i) {
    const std::int64_t t = eeg_ts[i].nanos;
    // strict improvement only, so an exact tie keeps the earlier sample
    while (j + 1 < joy.size() && dist(joy[j + 1].t.nanos, t) < dist(joy[j].t.nanos, t)) ++j;
    if (dist(joy[j].t.nanos, t) <= static_cast<std::uint64_t>(max_gap)) out[i] = j;
  }
  return out;
}

void write_window_tensor(const WindowTensor& w, const fs::path& stem) {
  if (w.data.size() != w.n_windows * w.n_channels * w.window_len) {
    throw DataError("window tensor data size does not match its shape");
  }
  if (w.labels.size() != w.n_windows) throw DataError("window tensor needs one label per window");
  std::string blob;
  detail::append_f32le(blob, w.data);
  detail::write_file_atomic(fs::path(stem.string() + ".f32"), blob);

  json side = w.extra;
  side["shape"] = {w.n_windows, w.n_channels, w.window_len};
  side["dtype"] = "f32le";
  side["labels"] = w.labels;
  side["delta_ms"] = w.delta_ms;
  side["partition"] = w.partition;
  detail::write_file_atomic(fs::path(stem.string() + ".json"), side.dump() + "\n");
}

WindowTensor read_window_tensor(const fs::path& stem) {
  const fs::path side_path(stem.string() + ".json");
  const fs::path blob_path(stem.string() + ".f32");
  if (!fs::is_regular_file(side_path)) throw DataError("missing window sidecar " + side_path.string());
  if (!fs::is_regular_file(blob_path)) throw DataError("missing window tensor " + blob_path.string());
  WindowTensor w;
  try {
    json side = json::parse(detail::read_text_file(side_path));
    if (side.at("dtype").get<std::string>() != "f32le") {
      throw DataError(side_path.string() + ": unsupported dtype");
    }
    const auto shape = side.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw DataError(side_path.string() + ": shape must have 3 entries");
    w.n_windows = shape[0];
    w.n_channels = shape[1];
    w.window_len = shape[2];
    w.labels = side.at("labels").get<std::vector<int>>();
    w.delta_ms = side.at("delta_ms").get<int>();
    w.partition = side.at("partition").get<std::string>();
    for (const char* key : {"shape", "dtype", "labels", "delta_ms", "partition"}) side.erase(key);
    w.extra = std::move(side);
  } catch (const json::exception& e) {
    throw DataError(side_path.string() + ": " + e.what());
  }
  if (w.partition != "train" && w.partition != "test") {
    throw DataError(side_path.string() + ": partition must be train or test");
  }
  const auto bytes = detail::read_binary_file(blob_path);
  w.data = detail::decode_f32le(bytes);
  if (w.data.size() != w.n_windows * w.n_channels * w.window_len) {
    throw DataError(blob_path.string() + ": size does not match sidecar shape");
  }
  if (w.labels.size() != w.n_windows) throw DataError(side_path.string() + ": label count mismatch");
  for (int l : w.labels) label_from_code(l);
  return w;
}

}  // namespace intentbench
