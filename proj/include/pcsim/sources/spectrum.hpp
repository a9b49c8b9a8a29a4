#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcsim/core/fft.hpp"
#include "pcsim/core/units.hpp"

namespace pcsim::sources {

enum class WindowKind { Hann, Rectangular };

struct Spectrum {
  std::vector<double> frequency;      // normalized c/a
  std::vector<double> wavelength_nm;  // via the unit anchor; inf at f = 0
  std::vector<double> amplitude;      // sinusoid of amplitude A peaks at ~A
  std::vector<double> power;          // amplitude^2

  std::size_t peak_bin(double fmin, double fmax) const {
    std::size_t best = 0;
    double v = -1.0;
    for (std::size_t k = 0; k < frequency.size(); ++k)
      if (frequency[k] >= fmin && frequency[k] <= fmax && power[k] > v) {
        v = power[k];
        best = k;
      }
    return best;
  }
};

struct SpectrumOptions {
  WindowKind window = WindowKind::Hann;
  int pad_factor = 4;
  UnitSystem units{};
};

/// Averaged periodogram over half-overlapping segments of `window` samples.
/// The series must hold at least two windows.
inline Spectrum emission_spectrum(const std::vector<double>& series, double dt, std::size_t window,
                                  const SpectrumOptions& opt = {}) {
  if (series.empty()) throw std::invalid_argument("emission_spectrum: empty series");
  if (!(dt > 0.0)) throw std::invalid_argument("emission_spectrum: time step must be positive");
  if (window < 4) throw std::invalid_argument("emission_spectrum: window must hold at least 4 samples");
  if (series.size() < 2 * window) throw std::invalid_argument("emission_spectrum: series shorter than two windows");
  if (opt.pad_factor < 1) throw std::invalid_argument("emission_spectrum: pad factor must be >= 1");

  std::vector<double> w(window, 1.0);
  if (opt.window == WindowKind::Hann)
    for (std::size_t i = 0; i < window; ++i)
      w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(window)));
  double wsum = 0.0;
  for (double v : w) wsum += v;

  const std::size_t nfft = next_pow2(window * static_cast<std::size_t>(opt.pad_factor));
  const std::size_t hop = window / 2;
  const std::size_t nseg = (series.size() - window) / hop + 1;
  std::vector<double> acc(nfft / 2 + 1, 0.0);
  std::vector<double> seg(window);
  for (std::size_t s = 0; s < nseg; ++s) {
    for (std::size_t i = 0; i < window; ++i) seg[i] = series[s * hop + i] * w[i];
    const auto X = rfft(seg, nfft);
    for (std::size_t k = 0; k < X.size(); ++k) acc[k] += std::norm(X[k]);
  }

  Spectrum out;
  const double scale = 2.0 / wsum;
  const double df = 1.0 / (static_cast<double>(nfft) * dt);
  for (std::size_t k = 0; k < acc.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    const double p = acc[k] / static_cast<double>(nseg) * scale * scale;
    out.frequency.push_back(f);
    out.wavelength_nm.push_back(f > 0.0 ? opt.units.frequency_to_nm(f) : INFINITY);
    out.power.push_back(p);
    out.amplitude.push_back(std::sqrt(p));
  }
  return out;
}

}  // namespace pcsim::sources
