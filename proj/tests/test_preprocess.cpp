#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "intentbench/dsp.hpp"
#include "intentbench/errors.hpp"
#include "intentbench/preprocess.hpp"
#include "intentbench/rng.hpp"
#include "intentbench/synthgen.hpp"
#include "support.hpp"

using namespace intentbench;
using std::numbers::pi;

namespace {

// Shared 10 Hz + 23 Hz mixture on every channel with per-channel gains and
// small independent noise.
// Two oscillations whose amplitudes vary smoothly over the scalp, so the
// spatial pattern survives re-referencing, plus independent sensor noise.
EegRecording common_signal_recording(std::size_t c, std::size_t t, std::uint64_t seed,
                                     double noise = 0.05) {
  auto rec = testsupport::recording(c, t);
  Rng rng(seed);
  std::vector<double> s1(t), s2(t);
  for (std::size_t i = 0; i < t; ++i) {
    const double tt = static_cast<double>(i) / 125.0;
    s1[i] = std::sin(2 * pi * 10 * tt) + 0.3 * rng.normal();
    s2[i] = 0.6 * std::sin(2 * pi * 23 * tt + 1.0) + 0.3 * rng.normal();
  }
  for (std::size_t ch = 0; ch < c; ++ch) {
    const auto& p = rec.channels[ch].position;
    const double a = 1.0 + 0.8 * p[0];
    const double b = 1.0 + 0.8 * p[1];
    for (std::size_t i = 0; i < t; ++i) {
      rec.samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(i)) =
          a * s1[i] + b * s2[i] + noise * rng.normal();
    }
  }
  return rec;
}

std::vector<std::size_t> flagged(const std::vector<BadChannelFinding>& f) {
  std::vector<std::size_t> out;
  for (const auto& x : f) out.push_back(x.channel);
  return out;
}

bool has_reason(const BadChannelFinding& f, BadReason r) {
  return std::find(f.reasons.begin(), f.reasons.end(), r) != f.reasons.end();
}

double linear_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  return lo + 1 < v.size() ? v[lo] + frac * (v[lo + 1] - v[lo]) : v[lo];
}

ChannelMeta at(const std::string& name, double colat, double az) {
  return {name, {std::sin(colat) * std::cos(az), std::sin(colat) * std::sin(az), std::cos(colat)}};
}

}  // namespace

TEST(DetectBadChannels, HomogeneousInputIsClean) {
  const auto rec = common_signal_recording(16, 125 * 30, 1);
  EXPECT_TRUE(detect_bad_channels(rec, {}, {}).empty());
}

TEST(DetectBadChannels, LoudChannelFlaggedByDeviation) {
  auto rec = common_signal_recording(16, 125 * 30, 2);
  Rng rng(20);
  for (Eigen::Index i = 0; i < rec.samples.cols(); ++i) rec.samples(5, i) = 100.0 * rng.normal();

  // robust z computed directly from the definition
  std::vector<double> amp;
  for (Eigen::Index c = 0; c < 16; ++c) {
    std::vector<double> v(rec.samples.row(c).data(), rec.samples.row(c).data() + rec.samples.cols());
    amp.push_back(0.7413 * (linear_quantile(v, 0.75) - linear_quantile(v, 0.25)));
  }
  const double med = linear_quantile(amp, 0.5);
  std::vector<double> dev;
  for (double a : amp) dev.push_back(std::abs(a - med));
  const double z5 = (amp[5] - med) / (1.4826 * linear_quantile(dev, 0.5));
  ASSERT_GT(z5, 5.0);

  const auto found = detect_bad_channels(rec, {}, {});
  ASSERT_EQ(flagged(found), std::vector<std::size_t>{5});
  EXPECT_TRUE(has_reason(found[0], BadReason::Deviation));
}

TEST(DetectBadChannels, IndependentChannelFlaggedByCorrelation) {
  auto rec = common_signal_recording(16, 125 * 30, 3);
  Rng rng(21);
  const double scale = std::sqrt(rec.samples.row(0).squaredNorm() / static_cast<double>(rec.samples.cols()));
  for (Eigen::Index i = 0; i < rec.samples.cols(); ++i) rec.samples(9, i) = scale * rng.normal();

  // windowed max |r| is near 0 in every 1 s window
  const auto found = detect_bad_channels(rec, {}, {});
  ASSERT_EQ(flagged(found), std::vector<std::size_t>{9});
  EXPECT_TRUE(has_reason(found[0], BadReason::Correlation));
  EXPECT_FALSE(has_reason(found[0], BadReason::Deviation));
}

TEST(DetectBadChannels, ExcludedChannelsAreSkipped) {
  auto rec = common_signal_recording(16, 125 * 20, 4);
  rec.samples.row(3).setZero();
  EXPECT_EQ(flagged(detect_bad_channels(rec, {}, {})), std::vector<std::size_t>{3});
  EXPECT_TRUE(detect_bad_channels(rec, {}, {3}).empty());
  EXPECT_THROW(detect_bad_channels(rec, {}, {0, 1, 2, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}), DataError);
}

TEST(SphericalSpline, ReproducesConstantsAndWeightsSumToOne) {
  const auto& m = standard_montage();
  const std::vector<std::size_t> src{0, 3, 6, 9, 12};
  const auto w = spherical_spline_weights(m[7].position, m, src);
  ASSERT_EQ(w.size(), src.size());
  double sum = 0.0;
  for (double x : w) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-6);
  // a source position predicts itself up to the smoothing of the diagonal term
  const auto self = spherical_spline_weights(m[3].position, m, src);
  EXPECT_NEAR(self[1], 1.0, 0.02);
}

TEST(RobustReference, CleanInputIsMeanSubtractedInOneIteration) {
  const auto rec = common_signal_recording(16, 125 * 20, 5);
  const auto [out, report] = robust_average_reference(rec, {}, 4);
  EXPECT_EQ(report.reference_iterations, 1);
  EXPECT_TRUE(report.final_bad_set().empty());
  const Eigen::RowVectorXd mean = rec.samples.colwise().mean();
  for (Eigen::Index c = 0; c < 16; ++c) {
    EXPECT_LE((out.samples.row(c) - (rec.samples.row(c) - mean)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RobustReference, SaturatedChannelExcludedFromMean) {
  auto rec = common_signal_recording(16, 125 * 20, 6);
  rec.samples.row(11).setConstant(500.0);
  for (Eigen::Index i = 0; i < rec.samples.cols(); i += 2) rec.samples(11, i) = -500.0;
  const auto [out, report] = robust_average_reference(rec, {}, 4);
  ASSERT_EQ(report.final_bad_set(), std::set<std::size_t>{11});
  std::size_t mentions = 0;
  for (const auto& pass : report.bad_channels) {
    for (const auto& f : pass) mentions += f.channel == 11;
  }
  EXPECT_EQ(mentions, 1u);

  Eigen::RowVectorXd ref = Eigen::RowVectorXd::Zero(rec.samples.cols());
  for (Eigen::Index c = 0; c < 16; ++c) {
    if (c != 11) ref += rec.samples.row(c);
  }
  ref /= 15.0;
  for (Eigen::Index c = 0; c < 16; ++c) {
    EXPECT_LE((out.samples.row(c) - (rec.samples.row(c) - ref)).cwiseAbs().maxCoeff(), 1e-9) << c;
  }
}

TEST(RobustReference, Idempotent) {
  auto rec = common_signal_recording(16, 125 * 20, 7);
  rec.samples.row(2) *= 80.0;
  const auto once = robust_average_reference(rec, {}, 4).first;
  const auto twice = robust_average_reference(once, {}, 4).first;
  const double rms = std::sqrt((twice.samples - once.samples).squaredNorm() /
                               static_cast<double>(once.samples.size()));
  EXPECT_LE(rms, 1e-9);
}

TEST(RobustReference, TerminatesAndBadSetOnlyGrows) {
  Rng rng(70);
  for (int trial = 0; trial < 6; ++trial) {
    auto rec = common_signal_recording(16, 125 * 12, 100 + trial, 0.3);
    for (int k = 0; k < 3; ++k) {
      const auto ch = static_cast<Eigen::Index>(rng.below(16));
      for (Eigen::Index i = 0; i < rec.samples.cols(); ++i) rec.samples(ch, i) = 20.0 * rng.normal();
    }
    for (int max_iter : {1, 2, 4}) {
      try {
        const auto [out, report] = robust_average_reference(rec, {}, max_iter);
        EXPECT_LE(report.reference_iterations, max_iter);
        EXPECT_EQ(report.bad_channels.size(), static_cast<std::size_t>(report.reference_iterations) + 1);
        std::set<std::size_t> seen;
        for (const auto& pass : report.bad_channels) {
          for (const auto& f : pass) EXPECT_TRUE(seen.insert(f.channel).second);
        }
      } catch (const DataError&) {
        // too few usable channels is an allowed outcome, not a hang
      }
    }
  }
}

TEST(IdwWeights, ConvexAndMatchHandFormula) {
  const auto& m = standard_montage();
  for (std::size_t target = 0; target < m.size(); ++target) {
    std::vector<std::size_t> good;
    for (std::size_t c = 0; c < m.size(); ++c) {
      if (c != target) good.push_back(c);
    }
    const auto w = idw_weights(m[target].position, m, good);
    ASSERT_EQ(w.sources.size(), 3u);

    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t c : good) {
      const auto& a = m[target].position;
      const auto& b = m[c].position;
      d.emplace_back(std::acos(std::clamp(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], -1.0, 1.0)), c);
    }
    std::sort(d.begin(), d.end());
    double total = 0.0;
    for (int k = 0; k < 3; ++k) total += 1.0 / (d[k].first * d[k].first);
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(w.sources[k], d[k].second);
      EXPECT_NEAR(w.weights[k], 1.0 / (d[k].first * d[k].first) / total, 1e-12);
      EXPECT_GE(w.weights[k], 0.0);
      sum += w.weights[k];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Interpolate, IdenticalNeighboursReproduceSignal) {
  auto rec = testsupport::recording(16, 100);
  const auto s = testsupport::sinusoid(7.0, 125.0, 100);
  const std::size_t bad = 6;  // C3
  std::vector<std::size_t> good;
  for (std::size_t c = 0; c < 16; ++c) {
    if (c != bad) good.push_back(c);
  }
  for (std::size_t src : idw_weights(rec.channels[bad].position, rec.channels, good).sources) {
    for (Eigen::Index i = 0; i < 100; ++i) rec.samples(static_cast<Eigen::Index>(src), i) = s[static_cast<std::size_t>(i)];
  }
  rec.samples.row(static_cast<Eigen::Index>(bad)).setConstant(1e6);
  const auto out = interpolate_channels(rec, {bad});
  for (Eigen::Index i = 0; i < 100; ++i) EXPECT_NEAR(out.samples(6, i), s[static_cast<std::size_t>(i)], 1e-12);
  for (Eigen::Index c = 0; c < 16; ++c) {
    if (c != 6) EXPECT_EQ(out.samples.row(c), rec.samples.row(c));
  }
}

TEST(Interpolate, EquidistantNeighboursAverage) {
  EegRecording rec = testsupport::recording(7, 20);
  rec.channels = {at("T", 0.0, 0.0),        at("A", 0.5, 0.0),       at("B", 0.5, 2 * pi / 3),
                  at("C", 0.5, 4 * pi / 3), at("F1", 2.5, 0.0),      at("F2", 2.5, 2.0),
                  at("F3", 2.5, 4.0)};
  Rng rng(4);
  for (Eigen::Index c = 0; c < 7; ++c) {
    for (Eigen::Index i = 0; i < 20; ++i) rec.samples(c, i) = rng.normal();
  }
  const auto out = interpolate_channels(rec, {0});
  for (Eigen::Index i = 0; i < 20; ++i) {
    EXPECT_NEAR(out.samples(0, i), (rec.samples(1, i) + rec.samples(2, i) + rec.samples(3, i)) / 3.0, 1e-12);
  }
}

TEST(Interpolate, Preconditions) {
  const auto rec = testsupport::recording(6, 20);
  EXPECT_THROW(interpolate_channels(rec, {0, 1, 2}), DataError);
  EXPECT_NO_THROW(interpolate_channels(rec, {0, 1}));
  EXPECT_EQ(interpolate_channels(rec, {}).samples, rec.samples);
}

TEST(Zscore, ThreePointExampleAndIdempotence) {
  auto rec = testsupport::recording(2, 3);
  rec.samples << 1, 2, 3, 10, 20, 60;
  const auto z = zscore_channels(rec);
  EXPECT_NEAR(z.samples(0, 0), -std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(z.samples(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(z.samples(0, 2), std::sqrt(1.5), 1e-12);
  for (Eigen::Index c = 0; c < 2; ++c) {
    EXPECT_NEAR(z.samples.row(c).mean(), 0.0, 1e-9);
    EXPECT_NEAR(z.samples.row(c).squaredNorm() / 3.0, 1.0, 1e-9);
  }
  EXPECT_LE((zscore_channels(z).samples - z.samples).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Zscore, ConstantChannelNamed) {
  auto rec = testsupport::recording(3, 10);
  rec.samples.setRandom();
  rec.samples.row(1).setConstant(4.0);
  try {
    zscore_channels(rec);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(rec.channels[1].name), std::string::npos) << e.what();
  }
}

TEST(PreprocessSession, CleanSyntheticSession) {
  SynthConfig cfg;
  cfg.duration_s = 60.0;
  cfg.rng_seed = 3;
  cfg.validate(10);
  const auto s = generate_session(cfg, "clean");
  const auto [out, report] = preprocess_session(s.session.eeg, {}, {});
  EXPECT_TRUE(report.final_bad_set().empty());
  EXPECT_TRUE(report.interpolated.empty());
  EXPECT_EQ(report.stages, (std::vector<std::string>{"highpass", "notch", "robust_average_reference",
                                                     "interpolate", "zscore"}));
  for (Eigen::Index c = 0; c < out.samples.rows(); ++c) {
    EXPECT_NEAR(out.samples.row(c).mean(), 0.0, 1e-9);
    EXPECT_NEAR(out.samples.row(c).squaredNorm() / static_cast<double>(out.samples.cols()), 1.0, 1e-9);
  }
}

TEST(PreprocessSession, NotchRemovesInjectedMains) {
  SynthConfig cfg;
  cfg.duration_s = 60.0;
  cfg.rng_seed = 4;
  cfg.line_noise_factor = 10.0;
  const auto s = generate_session(cfg, "mains");
  const auto& rec = s.session.eeg;
  const auto sos = design_notch(FilterSpec{}, rec.sample_rate_hz);
  const auto hp = apply_filter(rec, design_highpass(FilterSpec{}, rec.sample_rate_hz), true);
  const auto notched = apply_filter(hp, sos, true);
  for (Eigen::Index c = 0; c < rec.samples.rows(); ++c) {
    const auto pre = std::span<const double>(hp.samples.row(c).data(), static_cast<std::size_t>(hp.samples.cols()));
    const auto post = std::span<const double>(notched.samples.row(c).data(), pre.size());
    EXPECT_LE(dsp::goertzel_power(post, 50.0, 125.0), 1e-3 * dsp::goertzel_power(pre, 50.0, 125.0)) << c;
  }
}

TEST(PreprocessSession, DeadChannelInterpolatedThenZscored) {
  // eight-channel toy: detection still has more than four usable channels
  // once the dead one is excluded
  auto rec = common_signal_recording(8, 125 * 20, 9);
  rec.samples.row(2).setConstant(12.0);  // constant, so zero after the high-pass
  const auto [out, report] = preprocess_session(rec, {}, {});
  EXPECT_EQ(report.final_bad_set(), std::set<std::size_t>{2});
  EXPECT_EQ(report.interpolated, std::vector<std::string>{rec.channels[2].name});
  EXPECT_NEAR(out.samples.row(2).mean(), 0.0, 1e-9);
  EXPECT_NEAR(out.samples.row(2).squaredNorm() / static_cast<double>(out.samples.cols()), 1.0, 1e-9);
}

TEST(PreprocessReport, Json) {
  PreprocessReport r;
  r.stages = {"highpass"};
  r.bad_channels = {{{3, "F4", {BadReason::Deviation, BadReason::Ransac}}}, {}};
  r.reference_iterations = 1;
  r.interpolated = {"F4"};
  const auto j = to_json(r);
  EXPECT_EQ(j.at("bad_channels")[0].at("bad")[0].at("channel"), "F4");
  EXPECT_EQ(j.at("bad_channels")[0].at("bad")[0].at("criteria"), nlohmann::json({"deviation", "ransac"}));
  EXPECT_EQ(r.final_bad_set(), std::set<std::size_t>{3});
}
