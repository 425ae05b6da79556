#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <string>

#include "intentbench/errors.hpp"
#include "intentbench/ingestion.hpp"
#include "intentbench/rng.hpp"
#include "support.hpp"

using namespace intentbench;
using testsupport::TempDir;

namespace {

SessionDir small_session(std::size_t c = 16, std::size_t t = 300) {
  SessionDir s;
  s.eeg = testsupport::recording(c, t);
  for (Eigen::Index i = 0; i < s.eeg.samples.rows(); ++i) {
    for (Eigen::Index k = 0; k < s.eeg.samples.cols(); ++k) {
      s.eeg.samples(i, k) = 0.25 * static_cast<double>(i) - 0.125 * static_cast<double>(k % 17);
    }
  }
  s.manifest.subject_id = "sub01";
  s.manifest.session_id = "ses01";
  s.manifest.sample_rate_hz = 125.0;
  s.manifest.montage = s.eeg.channels;
  s.manifest.reserved_streams = {"gnss", "imu"};
  for (int k = 0; k < 25; ++k) {
    s.joystick.push_back({Timestamp{k * 100'000'000LL}, k % 2 ? 0.8 : 0.0, 0.0});
  }
  return s;
}

std::optional<std::size_t> brute_nearest(Timestamp t, std::span<const JoystickSample> joy,
                                         std::int64_t max_gap_ns) {
  std::optional<std::size_t> best;
  std::int64_t best_d = 0;
  for (std::size_t j = 0; j < joy.size(); ++j) {
    const std::int64_t d = std::llabs(joy[j].t.nanos - t.nanos);
    if (!best || d < best_d) {  // strict: the earlier index wins ties
      best = j;
      best_d = d;
    }
  }
  if (best && best_d > max_gap_ns) return std::nullopt;
  return best;
}

}  // namespace

TEST(Session, WriteLoadRoundTrip) {
  TempDir dir("ingest");
  const auto s = small_session();
  write_session(s, dir.path());
  const auto back = load_session(dir.path());
  EXPECT_EQ(back.eeg.n_channels(), 16u);
  EXPECT_EQ(back.eeg.n_samples(), 300u);
  EXPECT_EQ(back.manifest.session_id, "ses01");
  EXPECT_EQ(back.manifest.reserved_streams, s.manifest.reserved_streams);
  EXPECT_EQ(back.eeg.channels, s.eeg.channels);
  EXPECT_EQ(back.eeg.timestamps, s.eeg.timestamps);
  EXPECT_TRUE(back.eeg.samples.isApprox(s.eeg.samples, 1e-12));
  ASSERT_EQ(back.joystick.size(), s.joystick.size());
  EXPECT_EQ(back.joystick[3].v_x, 0.8);

  // byte-deterministic writer
  TempDir again("ingest");
  write_session(back, again.path());
  for (const char* f : {"manifest.json", "eeg.csv", "joystick.jsonl"}) {
    EXPECT_EQ(testsupport::read_file(dir / f), testsupport::read_file(again / f)) << f;
  }
}

TEST(Session, HeaderWithFifteenChannelsIsMontageMismatch) {
  TempDir dir("ingest");
  auto s = small_session();
  write_session(s, dir.path());
  auto shorter = small_session(15);
  TempDir other("ingest");
  write_session(shorter, other.path());
  std::filesystem::copy_file(other / "eeg.csv", dir / "eeg.csv",
                             std::filesystem::copy_options::overwrite_existing);
  try {
    load_session(dir.path());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("montage mismatch"), std::string::npos) << e.what();
  }
}

TEST(Session, OutOfRangeJoystickNamesLine) {
  TempDir dir("ingest");
  write_session(small_session(), dir.path());
  testsupport::write_file(dir / "joystick.jsonl",
                          "{\"t_ns\":0,\"vx\":0.0,\"wz\":0.0}\n"
                          "{\"t_ns\":100000000,\"vx\":0.5,\"wz\":0.0}\n"
                          "{\"t_ns\":200000000,\"vx\":1.7,\"wz\":0.0}\n");
  try {
    load_session(dir.path());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("joystick.jsonl:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("out of range"), std::string::npos) << msg;
  }
}

TEST(Session, MissingFileAndBadRows) {
  TempDir dir("ingest");
  EXPECT_THROW(load_session(dir.path()), DataError);
  write_session(small_session(2, 10), dir.path());
  auto text = testsupport::read_file(dir / "eeg.csv");
  const auto third_line = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
  text.insert(third_line, ",oops");
  testsupport::write_file(dir / "eeg.csv", text);
  try {
    load_session(dir.path());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("eeg.csv:3"), std::string::npos) << e.what();
  }
}

TEST(Align, TieGoesToEarlier) {
  const std::vector<Timestamp> eeg{{1'000'000'000}};
  const std::vector<JoystickSample> joy{{{950'000'000}, 0, 0}, {{1'050'000'000}, 0, 0}};
  const auto m = align_nearest(eeg, joy, {});
  ASSERT_TRUE(m[0].has_value());
  EXPECT_EQ(*m[0], 0u);
}

TEST(Align, BeyondGapIsAbsent) {
  const std::vector<Timestamp> eeg{{0}};
  const std::vector<JoystickSample> joy{{{250'000'000}, 0, 0}};
  EXPECT_FALSE(align_nearest(eeg, joy, {})[0].has_value());
}

TEST(Align, UniformGridsMatchBruteForce) {
  const auto eeg = testsupport::timestamps(1000, 8'000'000);
  std::vector<JoystickSample> joy;
  for (int k = 0; k < 100; ++k) joy.push_back({Timestamp{k * 100'000'000LL}, 0, 0});
  const AlignmentConfig cfg;
  const auto m = align_nearest(eeg, joy, cfg);
  for (std::size_t i = 0; i < eeg.size(); ++i) {
    EXPECT_EQ(m[i], brute_nearest(eeg[i], joy, cfg.max_gap_ns())) << i;
  }
}

TEST(Align, RandomInstancesMatchBruteForceAndAreMonotone) {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t t = 1 + rng.below(400), j = 1 + rng.below(80);
    std::vector<Timestamp> eeg(t);
    std::vector<JoystickSample> joy(j);
    std::int64_t acc = static_cast<std::int64_t>(rng.below(50'000'000));
    for (auto& x : eeg) x.nanos = acc += 1 + static_cast<std::int64_t>(rng.below(20'000'000));
    acc = static_cast<std::int64_t>(rng.below(50'000'000));
    // even spacing steps so exact ties with EEG midpoints occur
    for (auto& x : joy) x.t.nanos = acc += 2 * (1 + static_cast<std::int64_t>(rng.below(60'000'000)));
    AlignmentConfig cfg;
    cfg.max_gap_ms = 1.0 + static_cast<double>(rng.below(200));
    const auto m = align_nearest(eeg, joy, cfg);
    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < t; ++i) {
      ASSERT_EQ(m[i], brute_nearest(eeg[i], joy, cfg.max_gap_ns())) << "trial " << trial << " i " << i;
      if (m[i]) {
        if (prev) EXPECT_GE(*m[i], *prev);
        prev = m[i];
      }
    }
  }
}

TEST(AlignmentConfig, Validate) {
  AlignmentConfig c;
  c.max_gap_ms = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.max_gap_ms = 100.0;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.max_gap_ns(), 100'000'000);
}

TEST(WindowTensor, RoundTripLittleEndianWithSidecar) {
  TempDir dir("tensor");
  WindowTensor w;
  w.n_windows = 2;
  w.n_channels = 3;
  w.window_len = 4;
  for (int i = 0; i < 24; ++i) w.data.push_back(0.5f * static_cast<float>(i) - 3.0f);
  w.labels = {4, 1};
  w.delta_ms = 300;
  w.partition = "test";
  w.extra["session_id"] = "s000";
  write_window_tensor(w, dir / "d300_test");

  const auto blob = testsupport::read_file(dir / "d300_test.f32");
  ASSERT_EQ(blob.size(), 24u * 4u);
  // element 1 is -2.5f = 0xC0200000, stored least significant byte first
  const unsigned char expect[4] = {0x00, 0x00, 0x20, 0xC0};
  EXPECT_EQ(std::memcmp(blob.data() + 4, expect, 4), 0);

  const auto side = nlohmann::json::parse(testsupport::read_file(dir / "d300_test.json"));
  EXPECT_EQ(side.at("dtype"), "f32le");
  EXPECT_EQ(side.at("shape"), nlohmann::json({2, 3, 4}));
  EXPECT_EQ(side.at("labels"), nlohmann::json({4, 1}));
  EXPECT_EQ(side.at("partition"), "test");
  EXPECT_EQ(side.at("delta_ms"), 300);

  const auto back = read_window_tensor(dir / "d300_test");
  EXPECT_EQ(back.data, w.data);
  EXPECT_EQ(back.labels, w.labels);
  EXPECT_EQ(back.extra.at("session_id"), "s000");

  testsupport::write_file(dir / "d300_test.f32", blob.substr(0, 40));
  EXPECT_THROW(read_window_tensor(dir / "d300_test"), DataError);
}
