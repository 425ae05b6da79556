#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace intentbench::dsp {

/// One second-order section, a0 normalized to 1:
/// H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

using Sos = std::vector<Biquad>;

/// Butterworth high-pass via bilinear transform with prewarping. Each section
/// is normalized to unit gain at Nyquist. Throws ConfigError when the cutoff
/// is not inside (0, fs/2) or order < 1.
Sos butterworth_highpass(double cutoff_hz, int order, double fs);

/// Second-order IIR notch with zeros on the unit circle at f0 and -3 dB
/// bandwidth f0/q. Throws ConfigError when f0 is not inside (0, fs/2).
Biquad iir_notch(double f0_hz, double q, double fs);

std::complex<double> frequency_response(const Sos& sos, double f_hz, double fs);
double magnitude(const Sos& sos, double f_hz, double fs);

/// Filter order of the cascade (2 per section, 1 for first-order sections).
int sos_order(const Sos& sos);

/// Causal direct-form-II-transposed cascade. `state` holds 2 values per
/// section and is updated in place.
void sos_filter_inplace(const Sos& sos, std::span<double> x, std::span<double> state);

/// Steady-state section states for a unit step input (scaled per section by
/// the DC gain of the sections before it).
std::vector<double> sos_step_state(const Sos& sos);

/// Forward-backward application with odd-reflection padding and step
/// steady-state initial conditions. Output has the input's length and zero
/// net phase. Throws DataError when x.size() <= 3 * order.
std::vector<double> filter_zero_phase(std::span<const double> x, const Sos& sos);

/// Padding used by filter_zero_phase for a signal of length n.
std::size_t zero_phase_padlen(const Sos& sos, std::size_t n);

/// Goertzel estimate of the mean power of the component at f_hz: a sinusoid
/// of amplitude A with an integer number of cycles in x returns A^2 / 2.
double goertzel_power(std::span<const double> x, double f_hz, double fs);

}  // namespace intentbench::dsp
