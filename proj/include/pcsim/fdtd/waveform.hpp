#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pcsim/core/units.hpp"

namespace pcsim::fdtd {

/// Source time dependence. Pulses are Gaussian-enveloped sines, odd about
/// their center, so the injected current carries no DC component and leaves
/// no static charge behind.
struct Waveform {
  enum class Kind { GaussianPulse, ContinuousWave };

  Kind kind = Kind::GaussianPulse;
  double frequency = 0.27;  // normalized, c/a
  double fwidth = 0.1;      // pulse bandwidth (1/width); unused for CW
  double cutoff = 6.0;      // pulse truncated at +-cutoff widths
  double start = 0.0;
  double turn_on = 20.0;    // CW smooth ramp duration

  static Waveform gaussian(double f0, double df, double start = 0.0) {
    Waveform w;
    w.kind = Kind::GaussianPulse;
    w.frequency = f0;
    w.fwidth = df;
    w.start = start;
    return w;
  }

  static Waveform continuous(double f0, double turn_on = 20.0) {
    Waveform w;
    w.kind = Kind::ContinuousWave;
    w.frequency = f0;
    w.turn_on = turn_on;
    return w;
  }

  double width() const { return 1.0 / (2.0 * kPi * fwidth); }
  double center() const { return start + cutoff * width(); }

  double end_time() const {
    if (kind == Kind::ContinuousWave) return std::numeric_limits<double>::infinity();
    return start + 2.0 * cutoff * width();
  }

  double operator()(double t) const {
    if (kind == Kind::GaussianPulse) {
      const double w = width();
      const double tau = t - center();
      if (std::abs(tau) > cutoff * w) return 0.0;
      return std::exp(-0.5 * tau * tau / (w * w)) * std::sin(2.0 * kPi * frequency * tau);
    }
    const double tau = t - start;
    if (tau <= 0.0) return 0.0;
    const double ramp = tau >= turn_on ? 1.0 : 0.5 * (1.0 - std::cos(kPi * tau / turn_on));
    return ramp * std::sin(2.0 * kPi * frequency * tau);
  }

  void validate() const {
    if (!(frequency > 0.0) || !std::isfinite(frequency))
      throw std::invalid_argument("Waveform: frequency must be positive");
    if (kind == Kind::GaussianPulse && !(fwidth > 0.0))
      throw std::invalid_argument("Waveform: Gaussian bandwidth must be positive");
    if (kind == Kind::ContinuousWave && !(turn_on > 0.0))
      throw std::invalid_argument("Waveform: CW turn-on must be positive");
  }
};

}  // namespace pcsim::fdtd
