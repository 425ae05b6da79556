#include "intentbench/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "intentbench/errors.hpp"

namespace intentbench::dsp {

using cplx = std::complex<double>;

Sos butterworth_highpass(double cutoff_hz, int order, double fs) {
  if (!(fs > 0.0)) throw ConfigError("sample rate must be positive");
  if (!(cutoff_hz > 0.0) || cutoff_hz >= fs / 2.0) {
    throw ConfigError("high-pass cutoff " + std::to_string(cutoff_hz) +
                      " Hz must lie inside (0, Nyquist)");
  }
  if (order < 1) throw ConfigError("high-pass order must be >= 1");

  const double k = 2.0 * fs;
  const double wc = k * std::tan(std::numbers::pi * cutoff_hz / fs);
  auto to_z = [k](cplx s) { return (k + s) / (k - s); };

  Sos sos;
  for (int i = 0; i < order / 2; ++i) {
    const cplx p_lp = std::polar(1.0, std::numbers::pi * (2.0 * i + order + 1) / (2.0 * order));
    const cplx zp = to_z(wc / p_lp);
    Biquad bq;
    bq.a1 = -2.0 * zp.real();
    bq.a2 = std::norm(zp);
    const double g = (1.0 - bq.a1 + bq.a2) / 4.0;  // unit gain at z = -1
    bq.b0 = g;
    bq.b1 = -2.0 * g;
    bq.b2 = g;
    sos.push_back(bq);
  }
  if (order % 2 == 1) {
    const double zp = to_z(cplx(-wc, 0.0)).real();
    Biquad bq;
    bq.a1 = -zp;
    const double g = (1.0 + zp) / 2.0;
    bq.b0 = g;
    bq.b1 = -g;
    sos.push_back(bq);
  }
  return sos;
}

Biquad iir_notch(double f0_hz, double q, double fs) {
  if (!(fs > 0.0)) throw ConfigError("sample rate must be positive");
  if (!(f0_hz > 0.0) || f0_hz >= fs / 2.0) {
    throw ConfigError("notch centre " + std::to_string(f0_hz) + " Hz must lie inside (0, Nyquist)");
  }
  if (!(q > 0.0)) throw ConfigError("notch quality factor must be positive");
  const double w0 = 2.0 * std::numbers::pi * f0_hz / fs;
  const double bw = w0 / q;
  const double gain = 1.0 / (1.0 + std::tan(bw / 2.0));
  Biquad bq;
  bq.b0 = gain;
  bq.b1 = -2.0 * std::cos(w0) * gain;
  bq.b2 = gain;
  bq.a1 = -2.0 * gain * std::cos(w0);
  bq.a2 = 2.0 * gain - 1.0;
  return bq;
}

cplx frequency_response(const Sos& sos, double f_hz, double fs) {
  const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs);
  const cplx zinv2 = zinv * zinv;
  cplx h(1.0, 0.0);
  for (const auto& s : sos) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv2) / (1.0 + s.a1 * zinv + s.a2 * zinv2);
  }
  return h;
}

double magnitude(const Sos& sos, double f_hz, double fs) {
  return std::abs(frequency_response(sos, f_hz, fs));
}

int sos_order(const Sos& sos) {
  int order = 0;
  for (const auto& s : sos) order += (s.a2 != 0.0 || s.b2 != 0.0) ? 2 : 1;
  return order;
}

void sos_filter_inplace(const Sos& sos, std::span<double> x, std::span<double> state) {
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const Biquad& s = sos[k];
    double z1 = state[2 * k];
    double z2 = state[2 * k + 1];
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
    state[2 * k] = z1;
    state[2 * k + 1] = z2;
  }
}

std::vector<double> sos_step_state(const Sos& sos) {
  std::vector<double> zi(2 * sos.size());
  double scale = 1.0;
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const Biquad& s = sos[k];
    const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = s.b2 - s.a2 * g;
    const double z1 = s.b1 - s.a1 * g + z2;
    zi[2 * k] = scale * z1;
    zi[2 * k + 1] = scale * z2;
    scale *= g;
  }
  return zi;
}

std::size_t zero_phase_padlen(const Sos& sos, std::size_t n) {
  // long enough for the slowest pole to decay by 1e-4, never shorter than
  // the conventional 3 * (taps) and never longer than the signal allows
  double r_max = 0.0;
  for (const auto& s : sos) {
    const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    r_max = std::max({r_max, std::abs((-s.a1 + disc) / 2.0), std::abs((-s.a1 - disc) / 2.0)});
  }
  std::size_t decay = 0;
  if (r_max > 0.0 && r_max < 1.0) {
    decay = static_cast<std::size_t>(std::ceil(std::log(1e-4) / std::log(r_max)));
  }
  const std::size_t classic = 3 * (2 * sos.size() + 1);
  return std::min(n - 1, std::max(classic, decay));
}

std::vector<double> filter_zero_phase(std::span<const double> x, const Sos& sos) {
  const std::size_t n = x.size();
  const auto order = static_cast<std::size_t>(sos_order(sos));
  if (n <= 3 * order) {
    throw DataError("signal of " + std::to_string(n) + " samples is too short for zero-phase filtering (need > " +
                    std::to_string(3 * order) + ")");
  }
  const std::size_t pad = zero_phase_padlen(sos, n);

  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * x[0] - x[pad - i];
    ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  const std::vector<double> zi = sos_step_state(sos);
  std::vector<double> state(zi.size());

  for (std::size_t i = 0; i < zi.size(); ++i) state[i] = zi[i] * ext.front();
  sos_filter_inplace(sos, ext, state);

  std::reverse(ext.begin(), ext.end());
  for (std::size_t i = 0; i < zi.size(); ++i) state[i] = zi[i] * ext.front();
  sos_filter_inplace(sos, ext, state);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

double goertzel_power(std::span<const double> x, double f_hz, double fs) {
  if (x.empty()) return 0.0;
  const double w = 2.0 * std::numbers::pi * f_hz / fs;
  const double coeff = 2.0 * std::cos(w);
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : x) {
    const double s0 = v + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  const double re = s1 - s2 * std::cos(w);
  const double im = s2 * std::sin(w);
  const double n = static_cast<double>(x.size());
  return 2.0 * (re * re + im * im) / (n * n);
}

}  // namespace intentbench::dsp
