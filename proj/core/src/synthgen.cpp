#include "intentbench/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "intentbench/errors.hpp"
#include "intentbench/rng.hpp"
#include "io_util.hpp"

namespace intentbench {

std::string_view noise_model_name(NoiseModel m) noexcept { return m == NoiseModel::White ? "white" : "pink"; }

NoiseModel parse_noise_model(std::string_view name) {
  if (name == "white") return NoiseModel::White;
  if (name == "pink") return NoiseModel::Pink;
  throw ConfigError("unknown noise model '" + std::string(name) + "' (expected white or pink)");
}

std::string_view corrupt_mode_name(CorruptMode m) noexcept { return m == CorruptMode::Dead ? "dead" : "noisy"; }

CorruptMode parse_corrupt_mode(std::string_view name) {
  if (name == "dead") return CorruptMode::Dead;
  if (name == "noisy") return CorruptMode::Noisy;
  throw ConfigError("unknown corrupt mode '" + std::string(name) + "' (expected dead or noisy)");
}

void SynthConfig::validate(int min_samples_per_class) const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) throw ConfigError("synth.sample_rate_hz must be > 0");
  if (n_channels < 1 || static_cast<std::size_t>(n_channels) > standard_montage().size()) {
    throw ConfigError("synth.n_channels must lie in [1, " + std::to_string(standard_montage().size()) + "]");
  }
  for (double f : class_freqs_hz) {
    if (!(f > 0.0 && f < sample_rate_hz / 2.0)) throw ConfigError("synth.class_freqs_hz must lie in (0, fs/2)");
  }
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw ConfigError("synth.snr_db must be a number or +inf");
  }
  if (!(segment_len_s > 0.0)) throw ConfigError("synth.segment_len_s must be > 0");
  if (!(label_lag_ms >= 0.0)) throw ConfigError("synth.label_lag_ms must be >= 0");
  if (!(signal_amplitude_uv > 0.0)) throw ConfigError("synth.signal_amplitude_uv must be > 0");
  if (!(background_fraction >= 0.0 && background_fraction <= 1.0)) {
    throw ConfigError("synth.background_fraction must lie in [0, 1]");
  }
  if (n_background_sources < 1) throw ConfigError("synth.n_background_sources must be >= 1");
  if (!(signal_width_rad > 0.0) || !(background_width_rad > 0.0)) {
    throw ConfigError("synth.signal_width_rad and background_width_rad must be > 0");
  }
  if (line_noise_factor && !(*line_noise_factor >= 0.0)) throw ConfigError("synth.line_noise_factor must be >= 0");
  if (50.0 >= sample_rate_hz / 2.0 && line_noise_factor) {
    throw ConfigError("synth: 50 Hz interference needs a sample rate above 100 Hz");
  }
  if (corrupt_channel) {
    const auto& m = standard_montage();
    const bool known = std::any_of(m.begin(), m.begin() + n_channels,
                                   [&](const ChannelMeta& c) { return c.name == *corrupt_channel; });
    if (!known) throw ConfigError("synth.corrupt_channel '" + *corrupt_channel + "' is not in the montage");
  }
  const double per_class = duration_s * sample_rate_hz / kNumClasses;
  if (!(duration_s > 0.0) || (!constant_command && per_class < min_samples_per_class)) {
    throw ConfigError("synth.duration_s too short: expected " + std::to_string(per_class) +
                      " samples per class, need >= " + std::to_string(min_samples_per_class));
  }
}

namespace {

// independent sub-streams of one session seed
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag) { return splitmix64(seed ^ splitmix64(tag)); }

enum : std::uint64_t { kScheduleStream = 1, kLayoutStream, kNoiseStream, kPhaseStream, kCorruptStream };

CommandLabel command_at(const std::vector<Segment>& schedule, double t) {
  auto it = std::upper_bound(schedule.begin(), schedule.end(), t,
                             [](double v, const Segment& s) { return v < s.start_s; });
  if (it == schedule.begin()) return schedule.front().command;
  return std::prev(it)->command;
}

/// Paul Kellet's economy pink filter: three first-order low-passes fed by
/// the same white input, summed with a direct term.
class PinkFilter {
public:
  double operator()(double white) {
    b0_ = 0.99765 * b0_ + white * 0.0990460;
    b1_ = 0.96300 * b1_ + white * 0.2965164;
    b2_ = 0.57000 * b2_ + white * 1.0526913;
    return b0_ + b1_ + b2_ + white * 0.1848;
  }

private:
  double b0_ = 0.0, b1_ = 0.0, b2_ = 0.0;
};

/// Unit-RMS noise series.
std::vector<double> noise_series(std::size_t n, NoiseModel model, Rng& rng) {
  std::vector<double> out(n);
  PinkFilter pink;
  // settle the slow pink pole before recording
  if (model == NoiseModel::Pink) {
    for (int k = 0; k < 2000; ++k) pink(rng.normal());
  }
  double ss = 0.0;
  for (auto& v : out) {
    const double w = rng.normal();
    v = model == NoiseModel::Pink ? pink(w) : w;
  }
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(n);
  for (auto& v : out) {
    v -= mean;
    ss += v * v;
  }
  const double rms = std::sqrt(ss / static_cast<double>(n));
  if (rms > 0.0) {
    for (auto& v : out) v /= rms;
  }
  return out;
}

double gaussian_falloff(double dist, double width) { return std::exp(-0.5 * (dist / width) * (dist / width)); }

// channels below this fraction of the peak gain are outside a class subset
constexpr double kSignalSubsetFloor = 0.1;

}  // namespace

std::vector<Segment> make_schedule(const SynthConfig& cfg, double total_s) {
  std::vector<Segment> out;
  if (cfg.constant_command) {
    out.push_back({0.0, total_s, *cfg.constant_command});
    return out;
  }
  Rng rng(stream_seed(cfg.rng_seed, kScheduleStream));
  auto current = static_cast<CommandLabel>(rng.below(kNumClasses));
  double t = 0.0;
  while (t < total_s) {
    const double dwell = cfg.segment_len_s * rng.uniform(0.5, 1.5);
    out.push_back({t, std::min(total_s, t + dwell), current});
    t += dwell;
    const auto step = static_cast<int>(rng.below(kNumClasses - 1)) + 1;
    current = static_cast<CommandLabel>((label_code(current) + step) % kNumClasses);
  }
  return out;
}

SynthSession generate_session(const SynthConfig& cfg, const std::string& session_id) {
  cfg.validate();
  const double fs = cfg.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
  const auto c_n = static_cast<std::size_t>(cfg.n_channels);
  const double lag_s = cfg.label_lag_ms / 1000.0;
  // the joystick must outlast the largest labelling horizon
  const double joy_end_s = cfg.duration_s + 1.5;
  const double schedule_end_s = std::max(joy_end_s, cfg.duration_s + lag_s) + 1.0;

  SynthSession out;
  out.schedule = make_schedule(cfg, schedule_end_s);

  const std::vector<ChannelMeta> montage(standard_montage().begin(),
                                         standard_montage().begin() + static_cast<std::ptrdiff_t>(c_n));
  SessionManifest& man = out.session.manifest;
  man.subject_id = "synthetic";
  man.session_id = session_id;
  man.sample_rate_hz = fs;
  man.montage = montage;

  EegRecording& rec = out.session.eeg;
  rec.channels = montage;
  rec.sample_rate_hz = fs;
  rec.timestamps.resize(n);
  const double period_ns = 1e9 / fs;
  for (std::size_t i = 0; i < n; ++i) {
    rec.timestamps[i].nanos = kSynthEpochNs + static_cast<std::int64_t>(std::llround(static_cast<double>(i) * period_ns));
  }
  rec.samples = SampleMatrix::Zero(static_cast<Eigen::Index>(c_n), static_cast<Eigen::Index>(n));

  // class signature layouts: a smooth bump around a random electrode
  Rng layout(stream_seed(cfg.rng_seed, kLayoutStream));
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto& centre = montage[layout.below(c_n)].position;
    auto& gains = out.class_gains[k];
    gains.resize(c_n);
    for (std::size_t ch = 0; ch < c_n; ++ch) {
      const double g = gaussian_falloff(great_circle(centre, montage[ch].position), cfg.signal_width_rad);
      gains[ch] = g >= kSignalSubsetFloor ? g : 0.0;
    }
  }

  Rng phase_rng(stream_seed(cfg.rng_seed, kPhaseStream));
  std::array<double, kNumClasses> phase{};
  for (auto& p : phase) p = phase_rng.uniform(0.0, 2.0 * std::numbers::pi);

  out.truth.resize(n);
  const double amp = cfg.signal_amplitude_uv;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const CommandLabel cmd = command_at(out.schedule, t + lag_s);
    out.truth[i] = cmd;
    const auto k = static_cast<std::size_t>(label_code(cmd));
    const double s = amp * std::sin(2.0 * std::numbers::pi * cfg.class_freqs_hz[k] * t + phase[k]);
    for (std::size_t ch = 0; ch < c_n; ++ch) {
      rec.samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(i)) = out.class_gains[k][ch] * s;
    }
  }

  if (std::isfinite(cfg.snr_db)) {
    // noise power relative to the sinusoid power amp^2 / 2 at gain 1
    const double noise_rms = std::sqrt(amp * amp / 2.0 / std::pow(10.0, cfg.snr_db / 10.0));
    Rng noise_rng(stream_seed(cfg.rng_seed, kNoiseStream));
    std::vector<Position3> centres;
    std::vector<std::vector<double>> sources;
    for (int s = 0; s < cfg.n_background_sources; ++s) {
      // random direction on the upper half of the head sphere
      Position3 p{noise_rng.normal(), noise_rng.normal(), std::abs(noise_rng.normal())};
      const double norm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
      for (auto& v : p) v /= norm;
      centres.push_back(p);
      sources.push_back(noise_series(n, cfg.noise_model, noise_rng));
    }
    const double bg_scale = std::sqrt(cfg.background_fraction);
    const double sensor_scale = std::sqrt(1.0 - cfg.background_fraction);
    for (std::size_t ch = 0; ch < c_n; ++ch) {
      std::vector<double> bg(n, 0.0);
      for (std::size_t s = 0; s < sources.size(); ++s) {
        const double w = gaussian_falloff(great_circle(centres[s], montage[ch].position), cfg.background_width_rad);
        for (std::size_t i = 0; i < n; ++i) bg[i] += w * sources[s][i];
      }
      double ss = 0.0;
      for (double v : bg) ss += v * v;
      const double bg_rms = std::sqrt(ss / static_cast<double>(n));
      const std::vector<double> sensor = noise_series(n, cfg.noise_model, noise_rng);
      auto row = rec.samples.row(static_cast<Eigen::Index>(ch));
      for (std::size_t i = 0; i < n; ++i) {
        const double b = bg_rms > 0.0 ? bg[i] / bg_rms : 0.0;
        row(static_cast<Eigen::Index>(i)) += noise_rms * (bg_scale * b + sensor_scale * sensor[i]);
      }
    }
  }

  Rng corrupt_rng(stream_seed(cfg.rng_seed, kCorruptStream));
  if (cfg.line_noise_factor) {
    const double line_amp = *cfg.line_noise_factor * amp;
    const double line_phase = corrupt_rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t ch = 0; ch < c_n; ++ch) {
      const double gain = corrupt_rng.uniform(0.5, 1.5);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        rec.samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(i)) +=
            gain * line_amp * std::sin(2.0 * std::numbers::pi * 50.0 * t + line_phase);
      }
    }
  }
  if (cfg.corrupt_channel) {
    const auto ch = static_cast<Eigen::Index>(*rec.channel_index(*cfg.corrupt_channel));
    if (cfg.corrupt_mode == CorruptMode::Dead) {
      rec.samples.row(ch).setZero();
    } else {
      const double rms = std::sqrt(rec.samples.row(ch).squaredNorm() / static_cast<double>(n));
      const double scale = 10.0 * std::max(rms, amp);
      for (Eigen::Index i = 0; i < rec.samples.cols(); ++i) rec.samples(ch, i) += scale * corrupt_rng.normal();
    }
  }

  // joystick at 10 Hz reporting the command active at its own timestamp
  const auto n_joy = static_cast<std::size_t>(std::floor(joy_end_s * kJoystickRateHz)) + 1;
  out.session.joystick.reserve(n_joy);
  for (std::size_t j = 0; j < n_joy; ++j) {
    const double t = static_cast<double>(j) / kJoystickRateHz;
    JoystickSample js;
    js.t.nanos = kSynthEpochNs + static_cast<std::int64_t>(j) * static_cast<std::int64_t>(1e9 / kJoystickRateHz);
    switch (command_at(out.schedule, t)) {
      case CommandLabel::Forward: js.v_x = kJoystickMagnitude; break;
      case CommandLabel::Reverse: js.v_x = -kJoystickMagnitude; break;
      case CommandLabel::Left: js.omega_z = kJoystickMagnitude; break;
      case CommandLabel::Right: js.omega_z = -kJoystickMagnitude; break;
      case CommandLabel::Stop: break;
    }
    out.session.joystick.push_back(js);
  }
  return out;
}

void write_synth_session(const SynthSession& s, const std::filesystem::path& dir) {
  write_session(s.session, dir);
  std::string text = "t_ns,label_code\n";
  const auto& ts = s.session.eeg.timestamps;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    text += std::to_string(ts[i].nanos) + ',' + std::to_string(label_code(s.truth[i])) + '\n';
  }
  detail::write_file_atomic(dir / "truth_labels.csv", text);
}

}  // namespace intentbench
