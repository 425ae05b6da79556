#include "intentbench/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/QR>

#include "intentbench/errors.hpp"
#include "intentbench/rng.hpp"

namespace intentbench {

void FilterSpec::validate(double fs) const {
  if (!(fs > 0.0)) throw ConfigError("sample rate must be positive");
  if (!(highpass_hz > 0.0 && highpass_hz < notch_hz && notch_hz < fs / 2.0)) {
    throw ConfigError("filter spec needs 0 < highpass_hz < notch_hz < fs/2 (fs = " +
                      std::to_string(fs) + ")");
  }
  if (highpass_order < 1) throw ConfigError("highpass_order must be >= 1");
  if (zero_phase && highpass_order % 2 != 0) {
    throw ConfigError("highpass_order must be even for zero-phase filtering");
  }
  if (!(notch_q > 0.0)) throw ConfigError("notch_q must be positive");
}

void BadChannelCriteria::validate() const {
  auto unit_open = [](double v) { return v > 0.0 && v < 1.0; };
  if (!(deviation_z > 0.0)) throw ConfigError("deviation_z must be > 0");
  if (!unit_open(correlation_min)) throw ConfigError("correlation_min must lie in (0, 1)");
  if (!unit_open(ransac_corr_min)) throw ConfigError("ransac_corr_min must lie in (0, 1)");
  if (!unit_open(ransac_frac)) throw ConfigError("ransac_frac must lie in (0, 1)");
  if (!unit_open(correlation_bad_fraction) || !unit_open(ransac_bad_fraction)) {
    throw ConfigError("bad-window fractions must lie in (0, 1)");
  }
  if (!(correlation_window_s > 0.0) || !(ransac_window_s > 0.0)) {
    throw ConfigError("detector windows must be positive");
  }
  if (ransac_samples < 1) throw ConfigError("ransac_samples must be >= 1");
}

std::string_view reason_name(BadReason r) noexcept {
  switch (r) {
    case BadReason::Deviation: return "deviation";
    case BadReason::Correlation: return "correlation";
    case BadReason::Ransac: return "ransac";
  }
  return "?";
}

std::set<std::size_t> PreprocessReport::final_bad_set() const {
  std::set<std::size_t> out;
  for (const auto& iter : bad_channels) {
    for (const auto& f : iter) out.insert(f.channel);
  }
  return out;
}

nlohmann::json to_json(const PreprocessReport& r) {
  nlohmann::json iters = nlohmann::json::array();
  for (std::size_t i = 0; i < r.bad_channels.size(); ++i) {
    nlohmann::json found = nlohmann::json::array();
    for (const auto& f : r.bad_channels[i]) {
      nlohmann::json reasons = nlohmann::json::array();
      for (auto reason : f.reasons) reasons.push_back(reason_name(reason));
      found.push_back({{"channel", f.name}, {"criteria", reasons}});
    }
    iters.push_back({{"iteration", i}, {"pass", i == 0 ? "initial" : "referenced"}, {"bad", found}});
  }
  return {{"stages", r.stages},
          {"bad_channels", iters},
          {"reference_iterations", r.reference_iterations},
          {"interpolated", r.interpolated},
          {"zscored", r.zscored}};
}

dsp::Sos design_highpass(const FilterSpec& spec, double fs) {
  return dsp::butterworth_highpass(spec.highpass_hz, spec.highpass_order, fs);
}

dsp::Sos design_notch(const FilterSpec& spec, double fs) {
  dsp::Sos sos{dsp::iir_notch(spec.notch_hz, spec.notch_q, fs)};
  if (spec.notch_harmonic && 2.0 * spec.notch_hz < fs / 2.0) {
    sos.push_back(dsp::iir_notch(2.0 * spec.notch_hz, spec.notch_q, fs));
  }
  return sos;
}

EegRecording apply_filter(const EegRecording& rec, const dsp::Sos& sos, bool zero_phase) {
  EegRecording out = rec;
  const auto t = static_cast<std::size_t>(rec.samples.cols());
  for (Eigen::Index ch = 0; ch < rec.samples.rows(); ++ch) {
    std::span<const double> x(rec.samples.row(ch).data(), t);
    if (zero_phase) {
      const auto y = dsp::filter_zero_phase(x, sos);
      std::copy(y.begin(), y.end(), out.samples.row(ch).data());
    } else {
      std::span<double> y(out.samples.row(ch).data(), t);
      auto state = dsp::sos_step_state(sos);
      for (double& s : state) s *= x.front();
      dsp::sos_filter_inplace(sos, y, state);
    }
  }
  return out;
}

namespace {

// linear-interpolated quantile (the common "type 7" definition)
double quantile(std::vector<double> v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (frac == 0.0 || lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + frac * (b - a);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double pearson(const double* x, const double* y, std::size_t n) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

struct WindowPlan {
  std::size_t len = 0;
  std::size_t count = 0;
};

WindowPlan plan_windows(std::size_t t, double window_s, double fs) {
  WindowPlan p;
  p.len = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(window_s * fs)));
  if (p.len > t) p.len = t;
  p.count = t / p.len;
  return p;
}

std::vector<double> robust_z_of_amplitude(const EegRecording& rec,
                                          const std::vector<std::size_t>& good) {
  const auto t = static_cast<std::size_t>(rec.samples.cols());
  std::vector<double> amp;
  amp.reserve(good.size());
  for (std::size_t ch : good) {
    const double* row = rec.samples.row(static_cast<Eigen::Index>(ch)).data();
    std::vector<double> v(row, row + t);
    const double q75 = quantile(v, 0.75);
    const double q25 = quantile(std::move(v), 0.25);
    amp.push_back(0.7413 * (q75 - q25));
  }
  const double med = median(amp);
  std::vector<double> dev(amp.size());
  for (std::size_t i = 0; i < amp.size(); ++i) dev[i] = std::abs(amp[i] - med);
  const double scale = 1.4826 * median(dev);
  std::vector<double> z(amp.size());
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const double d = amp[i] - med;
    if (scale > 0.0) {
      z[i] = d / scale;
    } else {
      z[i] = d == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), d);
    }
  }
  return z;
}

// fraction of windows in which each good channel's max |r| with any other
// good channel falls below the threshold
std::vector<double> low_correlation_fraction(const EegRecording& rec,
                                             const std::vector<std::size_t>& good,
                                             const BadChannelCriteria& criteria) {
  const auto t = static_cast<std::size_t>(rec.samples.cols());
  const auto plan = plan_windows(t, criteria.correlation_window_s, rec.sample_rate_hz);
  const std::size_t g = good.size();
  std::vector<double> bad_count(g, 0.0);
  Eigen::MatrixXd block(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(plan.len));
  for (std::size_t w = 0; w < plan.count; ++w) {
    const auto start = static_cast<Eigen::Index>(w * plan.len);
    for (std::size_t i = 0; i < g; ++i) {
      block.row(static_cast<Eigen::Index>(i)) =
          rec.samples.row(static_cast<Eigen::Index>(good[i])).segment(start, static_cast<Eigen::Index>(plan.len));
    }
    Eigen::VectorXd norms(static_cast<Eigen::Index>(g));
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      block.row(i).array() -= block.row(i).mean();
      norms(i) = block.row(i).norm();
    }
    const Eigen::MatrixXd cov = block * block.transpose();
    for (std::size_t i = 0; i < g; ++i) {
      double best = 0.0;
      for (std::size_t k = 0; k < g; ++k) {
        if (k == i) continue;
        const double denom = norms(static_cast<Eigen::Index>(i)) * norms(static_cast<Eigen::Index>(k));
        const double r = denom > 0.0 ? cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) / denom : 0.0;
        best = std::max(best, std::abs(r));
      }
      if (best < criteria.correlation_min) bad_count[i] += 1.0;
    }
  }
  for (double& b : bad_count) b = plan.count > 0 ? b / static_cast<double>(plan.count) : 0.0;
  return bad_count;
}

std::vector<double> ransac_failure_fraction(const EegRecording& rec,
                                            const std::vector<std::size_t>& good,
                                            const BadChannelCriteria& criteria) {
  const auto t = static_cast<std::size_t>(rec.samples.cols());
  const std::size_t g = good.size();
  const std::size_t n_pred = std::min(
      g, std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(criteria.ransac_frac * static_cast<double>(g)))));
  const auto n_sets = static_cast<std::size_t>(criteria.ransac_samples);

  Rng rng(criteria.ransac_seed);
  std::vector<std::vector<std::size_t>> subsets(n_sets);
  std::vector<std::size_t> pool(good);
  for (auto& subset : subsets) {
    for (std::size_t i = 0; i < n_pred; ++i) {
      const std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    subset.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_pred));
  }

  const auto plan = plan_windows(t, criteria.ransac_window_s, rec.sample_rate_hz);
  std::vector<double> fail(g, 0.0);
  std::vector<double> preds(n_sets * t);
  std::vector<double> prediction(t);
  std::vector<double> column(n_sets);
  for (std::size_t gi = 0; gi < g; ++gi) {
    const std::size_t ch = good[gi];
    for (std::size_t s = 0; s < n_sets; ++s) {
      std::vector<std::size_t> cand;
      for (std::size_t c : subsets[s]) {
        if (c != ch) cand.push_back(c);
      }
      const auto w = spherical_spline_weights(rec.channels[ch].position, rec.channels, cand);
      double* out = preds.data() + s * t;
      std::fill(out, out + t, 0.0);
      for (std::size_t k = 0; k < cand.size(); ++k) {
        const double* src = rec.samples.row(static_cast<Eigen::Index>(cand[k])).data();
        for (std::size_t i = 0; i < t; ++i) out[i] += w[k] * src[i];
      }
    }
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t s = 0; s < n_sets; ++s) column[s] = preds[s * t + i];
      prediction[i] = median(column);
    }
    const double* actual = rec.samples.row(static_cast<Eigen::Index>(ch)).data();
    for (std::size_t w = 0; w < plan.count; ++w) {
      const std::size_t off = w * plan.len;
      if (pearson(actual + off, prediction.data() + off, plan.len) < criteria.ransac_corr_min) {
        fail[gi] += 1.0;
      }
    }
    fail[gi] = plan.count > 0 ? fail[gi] / static_cast<double>(plan.count) : 0.0;
  }
  return fail;
}

double cos_angle(const Position3& a, const Position3& b) { return std::cos(great_circle(a, b)); }

// Spline kernel g(x) = 1/(4 pi) sum_n (2n+1) / (n(n+1))^4 P_n(x), 7 terms.
double spline_kernel(double x) {
  constexpr int kTerms = 7;
  constexpr double kStiffness = 4.0;
  double p_prev = 1.0, p = x, sum = 0.0;
  for (int n = 1; n <= kTerms; ++n) {
    if (n > 1) {
      const double next = ((2.0 * n - 1.0) * x * p - (n - 1.0) * p_prev) / n;
      p_prev = p;
      p = next;
    }
    const double nn = static_cast<double>(n) * (n + 1.0);
    sum += (2.0 * n + 1.0) / std::pow(nn, kStiffness) * p;
  }
  return sum / (4.0 * M_PI);
}

}  // namespace

std::vector<double> spherical_spline_weights(const Position3& target,
                                             const std::vector<ChannelMeta>& channels,
                                             const std::vector<std::size_t>& sources) {
  constexpr double kAlpha = 1e-5;
  const auto n = static_cast<Eigen::Index>(sources.size());
  if (n == 0) throw DataError("spherical spline needs at least one source channel");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::RowVectorXd g_to(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pi = channels[sources[static_cast<std::size_t>(i)]].position;
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = spline_kernel(cos_angle(pi, channels[sources[static_cast<std::size_t>(j)]].position));
    }
    a(i, i) += kAlpha;
    a(i, n) = 1.0;
    a(n, i) = 1.0;
    g_to(i) = spline_kernel(cos_angle(target, pi));
  }
  g_to(n) = 1.0;
  const Eigen::MatrixXd inv = a.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::RowVectorXd w = g_to * inv.leftCols(n);
  return {w.data(), w.data() + n};
}

InterpolationWeights idw_weights(const Position3& target, const std::vector<ChannelMeta>& channels,
                                 const std::vector<std::size_t>& candidates, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(candidates.size());
  for (std::size_t c : candidates) dist.emplace_back(great_circle(target, channels[c].position), c);
  std::sort(dist.begin(), dist.end());
  dist.resize(std::min(k, dist.size()));

  InterpolationWeights w;
  for (const auto& [d, c] : dist) {
    if (d == 0.0) {
      w.sources = {c};
      w.weights = {1.0};
      return w;
    }
  }
  double total = 0.0;
  for (const auto& [d, c] : dist) {
    w.sources.push_back(c);
    w.weights.push_back(1.0 / (d * d));
    total += 1.0 / (d * d);
  }
  for (double& x : w.weights) x /= total;
  return w;
}

std::vector<BadChannelFinding> detect_bad_channels(const EegRecording& rec,
                                                   const BadChannelCriteria& criteria,
                                                   const std::set<std::size_t>& exclude) {
  std::vector<std::size_t> good;
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    if (!exclude.contains(c)) good.push_back(c);
  }
  if (good.size() < 4) {
    throw DataError("bad-channel detection needs at least 4 usable channels, have " +
                    std::to_string(good.size()));
  }
  if (rec.samples.cols() < 2) throw DataError("bad-channel detection needs at least 2 samples");

  const auto z = robust_z_of_amplitude(rec, good);
  const auto corr_frac = low_correlation_fraction(rec, good, criteria);
  const auto ransac_frac = ransac_failure_fraction(rec, good, criteria);

  std::vector<BadChannelFinding> out;
  for (std::size_t i = 0; i < good.size(); ++i) {
    BadChannelFinding f;
    f.channel = good[i];
    f.name = rec.channels[good[i]].name;
    if (std::abs(z[i]) > criteria.deviation_z) f.reasons.push_back(BadReason::Deviation);
    if (corr_frac[i] > criteria.correlation_bad_fraction) f.reasons.push_back(BadReason::Correlation);
    if (ransac_frac[i] > criteria.ransac_bad_fraction) f.reasons.push_back(BadReason::Ransac);
    if (!f.reasons.empty()) out.push_back(std::move(f));
  }
  return out;
}

namespace {

EegRecording subtract_mean_of(const EegRecording& rec, const std::set<std::size_t>& bad) {
  Eigen::RowVectorXd ref = Eigen::RowVectorXd::Zero(rec.samples.cols());
  std::size_t n = 0;
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    if (bad.contains(c)) continue;
    ref += rec.samples.row(static_cast<Eigen::Index>(c));
    ++n;
  }
  ref /= static_cast<double>(n);
  EegRecording out = rec;
  out.samples.rowwise() -= ref;
  return out;
}

}  // namespace

std::pair<EegRecording, PreprocessReport> robust_average_reference(
    const EegRecording& rec, const BadChannelCriteria& criteria, int max_iter) {
  if (max_iter < 1) throw ConfigError("max reference iterations must be >= 1");
  PreprocessReport report;
  std::set<std::size_t> bad;

  report.bad_channels.push_back(detect_bad_channels(rec, criteria, bad));
  for (const auto& f : report.bad_channels.back()) bad.insert(f.channel);
  if (bad.size() >= rec.n_channels()) throw DataError("every channel was flagged bad");

  EegRecording referenced = subtract_mean_of(rec, bad);
  for (int it = 1; it <= max_iter; ++it) {
    report.reference_iterations = it;
    auto found = detect_bad_channels(referenced, criteria, bad);
    const bool stable = found.empty();
    for (const auto& f : found) bad.insert(f.channel);
    report.bad_channels.push_back(std::move(found));
    if (bad.size() >= rec.n_channels()) throw DataError("every channel was flagged bad");
    if (stable) break;
    referenced = subtract_mean_of(rec, bad);
  }
  report.stages.push_back("robust_average_reference");
  return {std::move(referenced), std::move(report)};
}

EegRecording interpolate_channels(const EegRecording& rec, const std::set<std::size_t>& bad) {
  const std::size_t c = rec.n_channels();
  if (bad.empty()) return rec;
  if (2 * bad.size() >= c) {
    throw DataError("cannot interpolate " + std::to_string(bad.size()) + " of " +
                    std::to_string(c) + " channels (need fewer than half bad)");
  }
  std::vector<std::size_t> good;
  for (std::size_t i = 0; i < c; ++i) {
    if (!bad.contains(i)) good.push_back(i);
  }
  if (good.size() < 3) throw DataError("interpolation needs at least 3 good channels");

  EegRecording out = rec;
  for (std::size_t b : bad) {
    const auto w = idw_weights(rec.channels[b].position, rec.channels, good);
    auto row = out.samples.row(static_cast<Eigen::Index>(b));
    row.setZero();
    for (std::size_t k = 0; k < w.sources.size(); ++k) {
      row += w.weights[k] * rec.samples.row(static_cast<Eigen::Index>(w.sources[k]));
    }
  }
  return out;
}

EegRecording zscore_channels(const EegRecording& rec) {
  EegRecording out = rec;
  const double n = static_cast<double>(rec.samples.cols());
  for (Eigen::Index ch = 0; ch < rec.samples.rows(); ++ch) {
    auto row = out.samples.row(ch);
    const double mean = row.sum() / n;
    row.array() -= mean;
    const double var = row.squaredNorm() / n;
    if (!(var > 1e-24 * (1.0 + mean * mean))) {
      throw DataError("channel " + rec.channels[static_cast<std::size_t>(ch)].name +
                      " is constant; cannot z-score");
    }
    row /= std::sqrt(var);
  }
  return out;
}

std::pair<EegRecording, PreprocessReport> preprocess_session(const EegRecording& rec,
                                                             const FilterSpec& spec,
                                                             const BadChannelCriteria& criteria,
                                                             const PreprocessOptions& opts) {
  spec.validate(rec.sample_rate_hz);
  criteria.validate();

  EegRecording x = apply_filter(rec, design_highpass(spec, rec.sample_rate_hz), spec.zero_phase);
  x = apply_filter(x, design_notch(spec, rec.sample_rate_hz), spec.zero_phase);

  auto [referenced, report] = robust_average_reference(x, criteria, opts.max_reference_iterations);
  report.stages.insert(report.stages.begin(), {"highpass", "notch"});

  const auto bad = report.final_bad_set();
  x = interpolate_channels(referenced, bad);
  for (std::size_t b : bad) report.interpolated.push_back(rec.channels[b].name);
  report.stages.push_back("interpolate");

  if (opts.zscore_per_session) {
    x = zscore_channels(x);
    report.zscored = true;
    report.stages.push_back("zscore");
  }
  return {std::move(x), std::move(report)};
}

}  // namespace intentbench
