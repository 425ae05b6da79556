#include <gtest/gtest.h>

#include <cmath>

#include "intentbench/errors.hpp"
#include "intentbench/labelling.hpp"
#include "intentbench/rng.hpp"
#include "support.hpp"

using namespace intentbench;
using testsupport::TempDir;

namespace {

// The five activation predicates and the discard predicate, written out
// literally from the rule table.
std::optional<CommandLabel> oracle(double v, double w, double tau) {
  int hits = 0;
  std::optional<CommandLabel> out;
  auto take = [&](bool cond, std::optional<CommandLabel> l) {
    if (cond) {
      ++hits;
      out = l;
    }
  };
  take(v > tau && std::abs(w) <= tau, CommandLabel::Forward);
  take(v < -tau && std::abs(w) <= tau, CommandLabel::Reverse);
  take(w > tau && std::abs(v) <= tau, CommandLabel::Left);
  take(w < -tau && std::abs(v) <= tau, CommandLabel::Right);
  take(std::abs(v) <= tau && std::abs(w) <= tau, CommandLabel::Stop);
  take(std::abs(v) > tau && std::abs(w) > tau, std::nullopt);
  EXPECT_EQ(hits, 1) << v << "," << w;
  return out;
}

}  // namespace

TEST(ClassifyCommand, Examples) {
  const LabelRule r;
  EXPECT_EQ(classify_command(0.5, 0.0, r), CommandLabel::Forward);
  EXPECT_EQ(classify_command(0.0, 0.0, r), CommandLabel::Stop);
  EXPECT_EQ(classify_command(0.5, -0.5, r), std::nullopt);
  EXPECT_EQ(classify_command(0.1, 0.1, r), CommandLabel::Stop);
  EXPECT_EQ(classify_command(-0.3, 0.05, r), CommandLabel::Reverse);
  EXPECT_EQ(classify_command(0.0, 0.7, r), CommandLabel::Left);
  EXPECT_EQ(classify_command(0.0, -0.7, r), CommandLabel::Right);
}

TEST(ClassifyCommand, RandomGridExhaustive) {
  Rng rng(5);
  const LabelRule r;
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform(-1, 1), w = rng.uniform(-1, 1);
    EXPECT_EQ(classify_command(v, w, r), oracle(v, w, r.tau));
  }
}

TEST(LabelRule, Validate) {
  for (double t : {0.0, -0.1, 1.0, 1.5}) EXPECT_THROW((LabelRule{t}.validate()), ConfigError);
  EXPECT_NO_THROW(LabelRule{0.1}.validate());
}

TEST(LabelAtHorizon, ConstantForwardAtZero) {
  const auto eeg = testsupport::timestamps(500, 8'000'000);
  std::vector<JoystickSample> joy;
  for (int k = 0; k <= 40; ++k) joy.push_back({Timestamp{k * 100'000'000LL}, 0.8, 0.0});
  const auto labels = label_at_horizon(eeg, joy, {}, Horizon(0), {});
  EXPECT_EQ(labels.size(), 500u);
  for (const auto& l : labels) EXPECT_EQ(l.label, CommandLabel::Forward);
}

TEST(LabelAtHorizon, OneSecondAheadSeesTheSwitch) {
  // Stop until 10.0 s, Left from 10.0 s on; EEG sample at 9.5 s
  std::vector<JoystickSample> joy;
  for (int k = 0; k <= 150; ++k) joy.push_back({Timestamp{k * 100'000'000LL}, 0.0, k >= 100 ? 0.8 : 0.0});
  const std::vector<Timestamp> eeg{{9'500'000'000}};
  const auto labels = label_at_horizon(eeg, joy, {}, Horizon(1000), {});
  ASSERT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels[0].label, CommandLabel::Left);
  EXPECT_EQ(labels[0].delta_ms, 1000);
  EXPECT_EQ(labels[0].sample_index, 0u);
  EXPECT_EQ(labels[0].t.nanos, 9'500'000'000);
}

TEST(LabelAtHorizon, NearEndIsOmitted) {
  std::vector<JoystickSample> joy;
  for (int k = 0; k <= 100; ++k) joy.push_back({Timestamp{k * 100'000'000LL}, 0.8, 0.0});
  // session ends at 10.0 s; sample 50 ms before the end targets 10.25 s
  const std::vector<Timestamp> eeg{{5'000'000'000}, {9'950'000'000}};
  const auto labels = label_at_horizon(eeg, joy, {}, Horizon(300), {});
  ASSERT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels[0].sample_index, 0u);
}

TEST(LabelAtHorizon, DiscardedSamplesAreDropped) {
  std::vector<JoystickSample> joy;
  for (int k = 0; k <= 20; ++k) joy.push_back({Timestamp{k * 100'000'000LL}, 0.5, k < 10 ? 0.0 : 0.5});
  const auto eeg = testsupport::timestamps(250, 8'000'000);
  for (const auto& l : label_at_horizon(eeg, joy, {}, Horizon(0), {})) {
    EXPECT_LT(l.t.nanos, 1'050'000'000);
    EXPECT_EQ(l.label, CommandLabel::Forward);
  }
}

TEST(LabelAtHorizon, ZeroHorizonEqualsAlignThenClassify) {
  Rng rng(8);
  std::vector<JoystickSample> joy;
  std::int64_t t = 0;
  for (int k = 0; k < 300; ++k) {
    joy.push_back({Timestamp{t}, rng.uniform(-1, 1), rng.uniform(-1, 1)});
    t += 60'000'000 + static_cast<std::int64_t>(rng.below(80'000'000));
  }
  const auto eeg = testsupport::timestamps(3000, 8'000'000, 3'000'000);
  const auto labels = label_at_horizon(eeg, joy, {}, Horizon(0), {});
  const auto m = align_nearest(eeg, joy, {});
  std::size_t li = 0;
  for (std::size_t i = 0; i < eeg.size(); ++i) {
    if (!m[i]) continue;
    const auto c = classify_command(joy[*m[i]].v_x, joy[*m[i]].omega_z, {});
    if (!c) continue;
    ASSERT_LT(li, labels.size());
    EXPECT_EQ(labels[li].sample_index, i);
    EXPECT_EQ(labels[li].label, *c);
    ++li;
  }
  EXPECT_EQ(li, labels.size());
}

TEST(LabelAtHorizon, ShiftIdentityOnConstantStretch) {
  // Right over [2 s, 8 s]; every EEG sample whose target lands well inside gets Right
  std::vector<JoystickSample> joy;
  for (int k = 0; k <= 100; ++k) {
    const bool in = k >= 20 && k <= 80;
    joy.push_back({Timestamp{k * 100'000'000LL}, 0.0, in ? -0.9 : 0.0});
  }
  const auto eeg = testsupport::timestamps(1250, 8'000'000);
  for (int ms : kHorizonsMs) {
    for (const auto& l : label_at_horizon(eeg, joy, {}, Horizon(ms), {})) {
      const std::int64_t target = l.t.nanos + static_cast<std::int64_t>(ms) * 1'000'000;
      if (target >= 2'100'000'000 && target <= 7'900'000'000) EXPECT_EQ(l.label, CommandLabel::Right);
    }
  }
}

TEST(LabelsCsv, RoundTripAndUnknownTimestamp) {
  TempDir dir("labels");
  const auto eeg = testsupport::timestamps(50, 8'000'000);
  std::vector<LabeledSample> ls;
  for (std::size_t i = 0; i < 50; i += 3) ls.push_back({eeg[i], label_from_code(static_cast<int>(i % 5)), 500, i});
  write_labels_csv(ls, dir / "labels_500.csv");
  EXPECT_EQ(testsupport::read_file(dir / "labels_500.csv").substr(0, 13), "t_ns,label_co");
  const auto back = read_labels_csv(dir / "labels_500.csv", eeg, 500);
  ASSERT_EQ(back.size(), ls.size());
  for (std::size_t k = 0; k < ls.size(); ++k) {
    EXPECT_EQ(back[k].sample_index, ls[k].sample_index);
    EXPECT_EQ(back[k].label, ls[k].label);
  }
  const auto shifted = testsupport::timestamps(50, 8'000'000, 1);
  EXPECT_THROW(read_labels_csv(dir / "labels_500.csv", shifted, 500), DataError);
}
