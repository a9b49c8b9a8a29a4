#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "pcsim/core/fft.hpp"
#include "pcsim/core/units.hpp"
#include "pcsim/fit/least_squares.hpp"

namespace pcsim::modal {

/// One damped sinusoid A exp(-t/tau) cos(2 pi f t + phi), t measured from the
/// first sample of the analysed series.
struct Resonance {
  double frequency = 0.0;   // normalized c/a
  double Q = 0.0;
  double amplitude = 0.0;
  double decay_time = 0.0;  // amplitude decay time tau
  double phase = 0.0;
  double frequency_error = 0.0;
  double Q_error = 0.0;
  std::string label;

  double wavelength() const { return 1.0 / frequency; }
};

struct ResonanceOptions {
  int max_modes = 4;
  double peak_threshold = 1e-3;   // relative to the strongest in-band peak power
  double max_residual = 0.5;      // rejected above this fraction of signal energy
  std::size_t max_fit_samples = 200000;
};

struct ResonanceSearch {
  std::vector<Resonance> modes;   // sorted by amplitude, largest first
  double residual = 1.0;          // fraction of signal energy left unexplained
  std::string diagnostic;
};

namespace detail {

struct Peak {
  double f;
  double power;
};

/// Local maxima of the Hann-windowed, zero-padded power spectrum in band.
inline std::vector<Peak> spectral_peaks(const std::vector<double>& y, double dt, double fmin, double fmax,
                                        const ResonanceOptions& opt) {
  const std::size_t n = y.size();
  const std::size_t nfft = next_pow2(8 * n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = y[i] * 0.5 * (1.0 - std::cos(2.0 * kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(n)));
  const auto X = rfft(w, nfft);
  const double df = 1.0 / (static_cast<double>(nfft) * dt);
  std::vector<double> p(X.size());
  for (std::size_t k = 0; k < X.size(); ++k) p[k] = std::norm(X[k]);
  std::vector<Peak> peaks;
  double pmax = 0.0;
  for (std::size_t k = 1; k + 1 < p.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    if (f < fmin || f > fmax) continue;
    if (p[k] > p[k - 1] && p[k] >= p[k + 1]) {
      // Parabolic interpolation on log power.
      const double a = std::log(p[k - 1] + 1e-300), b = std::log(p[k] + 1e-300), c = std::log(p[k + 1] + 1e-300);
      const double den = a - 2.0 * b + c;
      const double d = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
      peaks.push_back({(static_cast<double>(k) + std::clamp(d, -0.5, 0.5)) * df, p[k]});
      pmax = std::max(pmax, p[k]);
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.power > b.power; });
  std::vector<Peak> out;
  // Peaks closer than the window mainlobe are sidelobe or leakage artifacts.
  const double min_sep = 2.0 / (static_cast<double>(n) * dt);
  for (const auto& pk : peaks) {
    if (pk.power < opt.peak_threshold * pmax) break;
    bool clash = false;
    for (const auto& o : out) clash = clash || std::abs(o.f - pk.f) < min_sep;
    if (!clash) out.push_back(pk);
    if (static_cast<int>(out.size()) >= opt.max_modes) break;
  }
  return out;
}

/// Initial (amplitude, decay rate, omega, phase) for the peak at f from a
/// Gaussian bandpass of the analytic signal.
inline std::array<double, 4> bandpass_guess(const std::vector<double>& y, double dt, double f, double sigma_f) {
  const std::size_t n = y.size();
  const std::size_t nfft = next_pow2(2 * n);
  std::vector<std::complex<double>> z(nfft, 0.0);
  for (std::size_t i = 0; i < n; ++i) z[i] = y[i];
  cfft(z, -1);
  const double df = 1.0 / (static_cast<double>(nfft) * dt);
  for (std::size_t k = 0; k < nfft; ++k) {
    const double fk = k <= nfft / 2 ? static_cast<double>(k) * df : 0.0;  // negative half dropped
    const double g = k <= nfft / 2 ? 2.0 * std::exp(-0.5 * std::pow((fk - f) / sigma_f, 2)) : 0.0;
    z[k] *= g / static_cast<double>(nfft);
  }
  cfft(z, +1);
  // Skip the filter transient at both ends and the noise floor.
  const auto skip = static_cast<std::size_t>(std::ceil(1.5 / (2.0 * kPi * sigma_f * dt)));
  std::size_t lo = std::min(skip, n / 4), hi = n > skip ? n - std::min(skip, n / 4) : n;
  double amax = 0.0;
  for (std::size_t i = lo; i < hi; ++i) amax = std::max(amax, std::abs(z[i]));
  std::vector<double> t, la, ph;
  double unwrap = 0.0, prev = 0.0;
  bool first = true;
  for (std::size_t i = lo; i < hi; ++i) {
    const double a = std::abs(z[i]);
    const double ang = std::arg(z[i]);
    if (!first) {
      double d = ang - prev;
      d -= 2.0 * kPi * std::round(d / (2.0 * kPi));
      unwrap += d;
    } else {
      unwrap = ang;
    }
    prev = ang;
    first = false;
    if (a < 1e-3 * amax) continue;
    t.push_back(static_cast<double>(i) * dt);
    la.push_back(std::log(a));
    ph.push_back(unwrap);
  }
  if (t.size() < 8) return {0.0, 0.0, 2.0 * kPi * f, 0.0};
  const std::size_t m = t.size();
  fit::Mat X(static_cast<Eigen::Index>(m), 2);
  fit::Vec va(static_cast<Eigen::Index>(m)), vp(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X(static_cast<Eigen::Index>(i), 1) = t[i];
    va[static_cast<Eigen::Index>(i)] = la[i];
    vp[static_cast<Eigen::Index>(i)] = ph[i];
  }
  const fit::Vec ba = fit::linear_fit(X, va);
  const fit::Vec bp = fit::linear_fit(X, vp);
  return {std::exp(ba[0]), std::max(-ba[1], 0.0), bp[1], bp[0]};
}

}  // namespace detail

/// Damped-sinusoid extraction from a ringdown series sampled every dt. The
/// series should start after the excitation has ended. Candidate peaks in
/// [fmin, fmax] seed a joint least-squares fit of all modes to the raw data.
inline ResonanceSearch find_resonances(const std::vector<double>& y, double dt, double fmin, double fmax,
                                       const ResonanceOptions& opt = {}) {
  ResonanceSearch out;
  if (y.size() < 32) {
    out.diagnostic = "series too short";
    return out;
  }
  if (!(fmin > 0.0 && fmax > fmin && fmax < 0.5 / dt)) {
    out.diagnostic = "band outside the resolvable range";
    return out;
  }
  double energy = 0.0;
  for (double v : y) energy += v * v;
  if (energy == 0.0) {
    out.diagnostic = "zero signal";
    return out;
  }

  const auto peaks = detail::spectral_peaks(y, dt, fmin, fmax, opt);
  if (peaks.empty()) {
    out.diagnostic = "no spectral peak in band";
    return out;
  }
  const double T = static_cast<double>(y.size()) * dt;
  std::vector<double> p0;
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    double sep = fmax - fmin;
    for (std::size_t o = 0; o < peaks.size(); ++o)
      if (o != k) sep = std::min(sep, std::abs(peaks[o].f - peaks[k].f));
    const double sigma = std::max(sep / 4.0, 4.0 / T);
    const auto g = detail::bandpass_guess(y, dt, peaks[k].f, sigma);
    // Reparametrize as cosine and sine amplitudes so the phase is linear.
    p0.insert(p0.end(), {g[0] * std::cos(g[3]), -g[0] * std::sin(g[3]), g[1], g[2]});
  }

  std::size_t stride = std::max<std::size_t>(1, y.size() / opt.max_fit_samples);
  stride = std::min(stride, std::max<std::size_t>(1, static_cast<std::size_t>(0.25 / (fmax * dt))));
  const auto m = static_cast<int>((y.size() + stride - 1) / stride);
  const std::size_t nm = peaks.size();
  auto model = [&](const fit::Vec& p, std::size_t i, std::size_t mode) {
    const double t = static_cast<double>(i) * dt;
    const double* q = p.data() + 4 * mode;
    const double e = std::exp(-q[2] * t);
    return e * (q[0] * std::cos(q[3] * t) + q[1] * std::sin(q[3] * t));
  };
  auto res = [&](const fit::Vec& p, fit::Vec& r) {
    for (int s = 0; s < m; ++s) {
      const std::size_t i = static_cast<std::size_t>(s) * stride;
      double v = 0.0;
      for (std::size_t k = 0; k < nm; ++k) v += model(p, i, k);
      r[s] = v - y[i];
    }
  };
  auto jac = [&](const fit::Vec& p, fit::Mat& J) {
    for (int s = 0; s < m; ++s) {
      const std::size_t i = static_cast<std::size_t>(s) * stride;
      const double t = static_cast<double>(i) * dt;
      for (std::size_t k = 0; k < nm; ++k) {
        const double* q = p.data() + 4 * k;
        const double e = std::exp(-q[2] * t), c = std::cos(q[3] * t), sn = std::sin(q[3] * t);
        const double val = e * (q[0] * c + q[1] * sn);
        const auto col = static_cast<Eigen::Index>(4 * k);
        J(s, col) = e * c;
        J(s, col + 1) = e * sn;
        J(s, col + 2) = -t * val;
        J(s, col + 3) = e * t * (-q[0] * sn + q[1] * c);
      }
    }
  };
  fit::Vec x0 = Eigen::Map<fit::Vec>(p0.data(), static_cast<Eigen::Index>(p0.size()));
  const auto fitres = fit::least_squares(res, x0, m, jac);

  double sampled_energy = 0.0;
  for (int s = 0; s < m; ++s) sampled_energy += y[static_cast<std::size_t>(s) * stride] * y[static_cast<std::size_t>(s) * stride];
  out.residual = fitres.chi2 / sampled_energy;
  if (out.residual > opt.max_residual) {
    out.diagnostic = "no decaying component: fit leaves " + std::to_string(100.0 * out.residual) + "% of signal energy";
    return out;
  }
  for (std::size_t k = 0; k < nm; ++k) {
    const double* q = fitres.params.data() + 4 * k;
    const double gamma = q[2], omega = std::abs(q[3]);
    if (!(gamma > 0.0) || omega <= 0.0) continue;
    Resonance r;
    r.frequency = omega / (2.0 * kPi);
    if (r.frequency < fmin || r.frequency > fmax) continue;
    r.amplitude = std::hypot(q[0], q[1]);
    r.phase = std::atan2(-q[1], q[0]);
    r.decay_time = 1.0 / gamma;
    r.Q = omega / (2.0 * gamma);
    const auto ig = static_cast<Eigen::Index>(4 * k + 2), iw = static_cast<Eigen::Index>(4 * k + 3);
    r.frequency_error = fitres.errors[iw] / (2.0 * kPi);
    r.Q_error = r.Q * std::hypot(fitres.errors[iw] / omega, fitres.errors[ig] / gamma);
    out.modes.push_back(r);
  }
  std::sort(out.modes.begin(), out.modes.end(),
            [](const Resonance& a, const Resonance& b) { return a.amplitude > b.amplitude; });
  if (out.modes.empty()) out.diagnostic = "fit produced no decaying in-band mode";
  return out;
}

/// Sum of the fitted damped cosines at time t (t = 0 is the first fitted sample).
inline double ringdown_model(const std::vector<Resonance>& modes, double t) {
  double y = 0.0;
  for (const auto& m : modes) y += m.amplitude * std::exp(-t / m.decay_time) * std::cos(2.0 * kPi * m.frequency * t + m.phase);
  return y;
}

}  // namespace pcsim::modal
