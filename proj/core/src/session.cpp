#include "intentbench/session.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "intentbench/errors.hpp"

namespace intentbench {

std::int64_t duration_between(Timestamp a, Timestamp b) {
  std::int64_t out = 0;
  if (__builtin_sub_overflow(b.nanos, a.nanos, &out)) {
    throw DataError("timestamp difference overflows 64-bit nanoseconds: " +
                    std::to_string(b.nanos) + " - " + std::to_string(a.nanos));
  }
  return out;
}

std::optional<std::size_t> EegRecording::channel_index(std::string_view name) const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i].name == name) return i;
  }
  return std::nullopt;
}

CommandLabel label_from_code(int code) {
  if (code < 0 || code >= kNumClasses) {
    throw DataError("invalid command label code " + std::to_string(code));
  }
  return static_cast<CommandLabel>(code);
}

std::string_view label_name(CommandLabel l) noexcept {
  switch (l) {
    case CommandLabel::Forward: return "forward";
    case CommandLabel::Reverse: return "reverse";
    case CommandLabel::Left: return "left";
    case CommandLabel::Right: return "right";
    case CommandLabel::Stop: return "stop";
  }
  return "?";
}

bool Horizon::is_valid(int delta_ms) noexcept {
  return std::find(kHorizonsMs.begin(), kHorizonsMs.end(), delta_ms) != kHorizonsMs.end();
}

Horizon::Horizon(int delta_ms) : delta_ms_(delta_ms) {
  if (!is_valid(delta_ms)) {
    throw ConfigError("horizon " + std::to_string(delta_ms) +
                      " ms is not one of {0, 300, 400, ..., 1000}");
  }
}

namespace {

// inclination from the vertex, azimuth from the right ear towards the nose
Position3 spherical(double inclination_deg, double azimuth_deg) {
  const double i = inclination_deg * std::numbers::pi / 180.0;
  const double a = azimuth_deg * std::numbers::pi / 180.0;
  return {std::sin(i) * std::cos(a), std::sin(i) * std::sin(a), std::cos(i)};
}

Position3 midpoint(const Position3& p, const Position3& q) {
  Position3 m{p[0] + q[0], p[1] + q[1], p[2] + q[2]};
  const double n = std::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
  return {m[0] / n, m[1] / n, m[2] / n};
}

// Idealized 10-20 construction: the Fpz-T3-Oz-T4 ring sits 10% (18 deg)
// above the nasion-inion equator, the midline and coronal electrodes are
// spaced in 20% (36 deg) steps, and F3/F4/P3/P4 are great-circle midpoints.
const std::vector<std::pair<std::string, Position3>>& electrode_table() {
  static const std::vector<std::pair<std::string, Position3>> table = [] {
    const double ring = 72.0;
    const Position3 fz = spherical(36.0, 90.0);
    const Position3 pz = spherical(36.0, 270.0);
    const Position3 f7 = spherical(ring, 144.0);
    const Position3 f8 = spherical(ring, 36.0);
    const Position3 t5 = spherical(ring, 216.0);
    const Position3 t6 = spherical(ring, 324.0);
    return std::vector<std::pair<std::string, Position3>>{
        {"Fp1", spherical(ring, 108.0)},
        {"Fp2", spherical(ring, 72.0)},
        {"F3", midpoint(fz, f7)},
        {"F4", midpoint(fz, f8)},
        {"F7", f7},
        {"F8", f8},
        {"C3", spherical(36.0, 180.0)},
        {"C4", spherical(36.0, 0.0)},
        {"T3", spherical(ring, 180.0)},
        {"T4", spherical(ring, 0.0)},
        {"T5", t5},
        {"T6", t6},
        {"P3", midpoint(pz, t5)},
        {"P4", midpoint(pz, t6)},
        {"O1", spherical(ring, 252.0)},
        {"O2", spherical(ring, 288.0)},
        {"Fpz", spherical(ring, 90.0)},
        {"Fz", fz},
        {"Cz", Position3{0.0, 0.0, 1.0}},
        {"Pz", pz},
        {"Oz", spherical(ring, 270.0)},
    };
  }();
  return table;
}

}  // namespace

const std::vector<ChannelMeta>& standard_montage() {
  static const std::vector<ChannelMeta> montage = [] {
    std::vector<ChannelMeta> m;
    const auto& table = electrode_table();
    for (std::size_t i = 0; i < 16; ++i) m.push_back({table[i].first, table[i].second});
    return m;
  }();
  return montage;
}

std::optional<Position3> electrode_position(std::string_view name) {
  for (const auto& [n, p] : electrode_table()) {
    if (n == name) return p;
  }
  return std::nullopt;
}

double great_circle(const Position3& a, const Position3& b) {
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::acos(std::clamp(dot, -1.0, 1.0));
}

ValidationReport validate_recording(const EegRecording& rec) {
  ValidationReport report;
  const std::size_t c = rec.channels.size();
  const std::size_t t = rec.timestamps.size();

  if (!(rec.sample_rate_hz > 0.0) || !std::isfinite(rec.sample_rate_hz)) {
    report.structural.push_back("sample_rate_hz must be positive and finite");
  }
  if (static_cast<std::size_t>(rec.samples.rows()) != c ||
      static_cast<std::size_t>(rec.samples.cols()) != t) {
    report.structural.push_back("sample matrix is " + std::to_string(rec.samples.rows()) + "x" +
                                std::to_string(rec.samples.cols()) + ", expected " +
                                std::to_string(c) + "x" + std::to_string(t));
  }
  for (std::size_t i = 0; i < c; ++i) {
    const auto& p = rec.channels[i].position;
    const double norm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    if (std::abs(norm - 1.0) > 1e-9) {
      report.structural.push_back("channel " + rec.channels[i].name + " position is not unit");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (rec.channels[i].name == rec.channels[j].name) {
        report.structural.push_back("duplicate channel name " + rec.channels[i].name);
      }
    }
  }

  for (std::size_t i = 1; i < t; ++i) {
    if (rec.timestamps[i] <= rec.timestamps[i - 1]) report.monotonicity_violations.push_back(i);
  }

  if (report.structural.empty() || static_cast<std::size_t>(rec.samples.rows()) == c) {
    for (Eigen::Index ch = 0; ch < rec.samples.rows(); ++ch) {
      for (Eigen::Index s = 0; s < rec.samples.cols(); ++s) {
        if (!std::isfinite(rec.samples(ch, s))) {
          report.non_finite.push_back({static_cast<std::size_t>(ch), static_cast<std::size_t>(s)});
        }
      }
    }
  }

  if (t >= 2 && rec.sample_rate_hz > 0.0) {
    std::vector<std::int64_t> gaps;
    gaps.reserve(t - 1);
    for (std::size_t i = 1; i < t; ++i) {
      gaps.push_back(rec.timestamps[i].nanos - rec.timestamps[i - 1].nanos);
    }
    const auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    std::int64_t median = *mid;
    if (gaps.size() % 2 == 0) {
      const std::int64_t lower = *std::max_element(gaps.begin(), mid);
      median = lower + (median - lower) / 2;
    }
    report.median_gap_ns = median;
    report.nominal_gap_ns = std::llround(1e9 / rec.sample_rate_hz);
    const double rel = std::abs(static_cast<double>(median - report.nominal_gap_ns)) /
                       static_cast<double>(report.nominal_gap_ns);
    report.rate_drift = rel > 0.01;
  }
  return report;
}

}  // namespace intentbench
