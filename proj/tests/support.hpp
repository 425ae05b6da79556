#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include "intentbench/session.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("intentbench_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::vector<double> sinusoid(double f_hz, double fs, std::size_t n, double amp = 1.0,
                                    double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * f_hz * static_cast<double>(i) / fs + phase);
  }
  return x;
}

inline double rms(const std::vector<double>& x, std::size_t skip = 0) {
  double s = 0.0;
  for (std::size_t i = skip; i + skip < x.size(); ++i) s += x[i] * x[i];
  return std::sqrt(s / static_cast<double>(x.size() - 2 * skip));
}

/// Uniformly spaced timestamps starting at t0.
inline std::vector<intentbench::Timestamp> timestamps(std::size_t n, std::int64_t period_ns,
                                                      std::int64_t t0 = 0) {
  std::vector<intentbench::Timestamp> ts(n);
  for (std::size_t i = 0; i < n; ++i) ts[i].nanos = t0 + static_cast<std::int64_t>(i) * period_ns;
  return ts;
}

/// Recording on the standard 16-channel montage (or its first `c` channels).
inline intentbench::EegRecording recording(std::size_t c, std::size_t t, double fs = 125.0) {
  intentbench::EegRecording rec;
  const auto& montage = intentbench::standard_montage();
  rec.channels.assign(montage.begin(), montage.begin() + static_cast<std::ptrdiff_t>(c));
  rec.timestamps = timestamps(t, static_cast<std::int64_t>(std::llround(1e9 / fs)));
  rec.samples = intentbench::SampleMatrix::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t));
  rec.sample_rate_hz = fs;
  return rec;
}

}  // namespace testsupport
