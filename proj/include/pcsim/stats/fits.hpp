#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pcsim/core/random.hpp"
#include "pcsim/core/units.hpp"
#include "pcsim/fit/least_squares.hpp"

namespace pcsim::stats {

/// Histogram of photon arrival times after the excitation pulse.
struct DecayTrace {
  std::vector<double> t_ps;    // bin centres
  std::vector<double> counts;
  double bin_ps = 50.0;
};

struct SyntheticDecay {
  double tau_ps = 650.0;
  std::int64_t photons = 10000;
  double bin_ps = 50.0;
  double irf_fwhm_ps = 50.0;
  double t0_ps = 500.0;
  double window_ps = 13000.0;  // trace length
  double period_ps = 0.0;      // > 0 folds late photons into the next period
  double background_per_bin = 0.0;
};

inline double fwhm_to_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

inline DecayTrace synthetic_decay(const SyntheticDecay& s, std::uint64_t seed) {
  if (!(s.tau_ps > 0.0) || !(s.bin_ps > 0.0) || !(s.window_ps > s.bin_ps))
    throw std::invalid_argument("synthetic_decay: invalid parameters");
  Rng rng(seed);
  const auto nb = static_cast<std::size_t>(std::floor(s.window_ps / s.bin_ps));
  DecayTrace d;
  d.bin_ps = s.bin_ps;
  d.counts.assign(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) d.t_ps.push_back((static_cast<double>(b) + 0.5) * s.bin_ps);
  const double sigma = fwhm_to_sigma(s.irf_fwhm_ps);
  for (std::int64_t n = 0; n < s.photons; ++n) {
    double t = s.t0_ps + sigma * rng.normal() + rng.exponential(s.tau_ps);
    if (s.period_ps > 0.0) t = std::fmod(t, s.period_ps);
    if (t < 0.0 || t >= static_cast<double>(nb) * s.bin_ps) continue;
    d.counts[static_cast<std::size_t>(t / s.bin_ps)] += 1.0;
  }
  if (s.background_per_bin > 0.0)
    for (auto& c : d.counts) c += static_cast<double>(rng.poisson(s.background_per_bin));
  return d;
}

/// Arrival-time histogram from absolute timestamps and the pulse period.
/// Pulses sit at `offset_ps` in the folded trace so the rising edge is not
/// split across the wrap.
inline DecayTrace decay_from_timestamps(const std::vector<std::int64_t>& t_ps, double period_ps, double bin_ps,
                                        double offset_ps = 0.0) {
  if (!(period_ps > 0.0) || !(bin_ps > 0.0)) throw std::invalid_argument("decay_from_timestamps: invalid binning");
  const auto nb = static_cast<std::size_t>(std::floor(period_ps / bin_ps));
  DecayTrace d;
  d.bin_ps = bin_ps;
  d.counts.assign(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) d.t_ps.push_back((static_cast<double>(b) + 0.5) * bin_ps);
  for (auto t : t_ps) {
    const double f = std::fmod(static_cast<double>(t) + offset_ps, period_ps);
    const auto b = static_cast<std::size_t>((f < 0.0 ? f + period_ps : f) / bin_ps);
    if (b < nb) d.counts[b] += 1.0;
  }
  return d;
}

struct LifetimeOptions {
  double irf_fwhm_ps = 50.0;
  double period_ps = 0.0;  // > 0 adds the tails of earlier pulses
};

struct LifetimeFit {
  bool ok = false;
  double tau_ps = 0.0, tau_error = 0.0;
  double t0_ps = 0.0, amplitude = 0.0, background = 0.0;
  double residual_norm = 0.0;  // Poisson deviance
  std::string diagnostic;
};

/// Exponential decay convolved with a unit-area Gaussian; integrates to tau.
inline double exp_gauss(double x, double tau, double sigma) {
  const double z = (sigma / tau - x / sigma) / std::sqrt(2.0);
  if (z > 25.0) {
    // erfc underflows; use its leading asymptote.
    return 0.5 * std::exp(-x * x / (2.0 * sigma * sigma)) / (z * std::sqrt(kPi));
  }
  return 0.5 * std::exp(sigma * sigma / (2.0 * tau * tau) - x / tau) * std::erfc(z);
}

namespace detail {

inline double poisson_deviance_residual(double y, double f) {
  f = std::max(f, 1e-12);
  const double d = y > 0.0 ? 2.0 * (f - y + y * std::log(y / f)) : 2.0 * f;
  const double r = std::sqrt(std::max(d, 0.0));
  return y >= f ? r : -r;
}

}  // namespace detail

inline double lifetime_model(double t, double A, double tau, double t0, double bg, double sigma, double period) {
  double f = exp_gauss(t - t0, tau, sigma);
  if (period > 0.0) {
    const int M = static_cast<int>(std::ceil(40.0 * tau / period)) + 1;
    for (int m = 1; m <= M; ++m) f += exp_gauss(t - t0 + m * period, tau, sigma);
  }
  return A * f + bg;
}

/// Mean of lifetime_model over the bin [a, b]. Exact, so a response much
/// narrower than a bin still gives a smooth dependence on t0.
inline double lifetime_bin_mean(double a, double b, double A, double tau, double t0, double bg, double sigma,
                                double period) {
  // Antiderivative of exp_gauss: tau (Phi(x / sigma) - exp_gauss(x)).
  auto H = [&](double x) { return tau * (0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))) - exp_gauss(x, tau, sigma)); };
  double f = H(b - t0) - H(a - t0);
  if (period > 0.0) {
    const int M = static_cast<int>(std::ceil(40.0 * tau / period)) + 1;
    for (int m = 1; m <= M; ++m) f += H(b - t0 + m * period) - H(a - t0 + m * period);
  }
  return A * f / (b - a) + bg;
}

/// Maximum-likelihood fit of a single exponential convolved with a Gaussian
/// response and a free background floor.
inline LifetimeFit fit_lifetime(const DecayTrace& d, const LifetimeOptions& opt = {}) {
  LifetimeFit out;
  const std::size_t n = d.counts.size();
  if (n < 10 || d.t_ps.size() != n) throw std::invalid_argument("fit_lifetime: need at least 10 bins");
  const double sigma = fwhm_to_sigma(opt.irf_fwhm_ps);
  const double span = d.t_ps.back() - d.t_ps.front() + d.bin_ps;

  // Peak of a box-smoothed trace; single bins are too noisy for long lifetimes.
  const std::size_t hw = std::max<std::size_t>(1, n / 100);
  std::vector<double> smooth(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= hw ? i - hw : 0, b = std::min(n - 1, i + hw);
    for (std::size_t k = a; k <= b; ++k) smooth[i] += d.counts[k];
    smooth[i] /= static_cast<double>(b - a + 1);
  }
  std::size_t ip = static_cast<std::size_t>(std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
  const std::size_t centre = ip;
  ip = centre >= hw ? centre - hw : 0;
  for (std::size_t k = ip; k < std::min(n, centre + hw + 1); ++k)
    if (d.counts[k] > d.counts[ip]) ip = k;
  const double tp = d.t_ps[ip];
  std::vector<double> early;
  for (std::size_t i = 0; i < n; ++i)
    if (d.t_ps[i] < tp - 5.0 * sigma - d.bin_ps) early.push_back(d.counts[i]);
  double bg0 = 0.0;
  if (!early.empty()) {
    std::nth_element(early.begin(), early.begin() + static_cast<long>(early.size() / 2), early.end());
    bg0 = early[early.size() / 2];
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = ip; i < n; ++i) {
    const double w = std::max(d.counts[i] - bg0, 0.0);
    num += w * (d.t_ps[i] - tp);
    den += w;
  }
  if (!(den > 0.0) || !(d.counts[ip] > bg0)) {
    out.diagnostic = "fit failure: trace has no decaying signal";
    return out;
  }
  const double tau_m = std::max(num / den, d.bin_ps);
  const int m = static_cast<int>(n);
  auto residuals = [&](const fit::Vec& p, fit::Vec& r) {
    const double tau = std::max(p[1], 1e-6);
    for (int i = 0; i < m; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const double f = lifetime_bin_mean(d.t_ps[u] - 0.5 * d.bin_ps, d.t_ps[u] + 0.5 * d.bin_ps, p[0], tau, p[2],
                                         p[3] * p[3], sigma, opt.period_ps);
      r[i] = detail::poisson_deviance_residual(d.counts[u], f);
    }
  };
  // A few lifetime seeds; the moment estimate is biased by truncation and
  // periodic tails. The background floor enters as a square to stay >= 0.
  fit::LsqResult res;
  bool have = false;
  for (double scale : {1.0, 0.3, 3.0}) {
    const double tau0 = tau_m * scale;
    fit::Vec p0(4);
    p0 << (d.counts[ip] - bg0) / std::max(exp_gauss(0.0, tau0, sigma), 1e-3), tau0, tp - 0.5 * d.bin_ps,
        std::sqrt(std::max(bg0, 1e-4));
    auto r = fit::least_squares(residuals, p0, m, {}, true);
    const bool good = r.converged && r.params[1] > 0.0;
    const bool best_good = have && res.converged && res.params[1] > 0.0;
    if (!have || (good && (!best_good || r.chi2 < res.chi2))) {
      res = std::move(r);
      have = true;
    }
  }
  out.amplitude = res.params[0];
  out.tau_ps = res.params[1];
  out.t0_ps = res.params[2];
  out.background = res.params[3] * res.params[3];
  out.tau_error = res.errors[1];
  out.residual_norm = std::sqrt(res.chi2);
  std::string why;
  if (!res.converged) why = "did not converge";
  else if (!(out.tau_ps > 0.0) || !std::isfinite(out.tau_ps)) why = "nonpositive lifetime";
  else if (!(out.amplitude > 0.0)) why = "no decaying component";
  else if (opt.period_ps <= 0.0 && span < 2.0 * out.tau_ps) why = "trace shorter than two lifetimes";
  else if (out.tau_ps > 100.0 * span) why = "trace does not decay";
  else if (out.amplitude * out.tau_ps / d.bin_ps < 3.0 * std::sqrt(std::max(out.background, 1.0) * static_cast<double>(n)))
    why = "decay not significant above background";
  out.ok = why.empty();
  out.diagnostic = out.ok ? "ok" : "fit failure: " + why;
  return out;
}

struct RateRatio {
  double F = 0.0, error = 0.0;
};

/// Gamma/Gamma0 = tau0 / tau with independent errors.
inline RateRatio rate_ratio(double tau_ref, double tau, double tau_ref_err = 0.0, double tau_err = 0.0) {
  if (!(tau_ref > 0.0) || !(tau > 0.0)) throw std::invalid_argument("rate_ratio: lifetimes must be positive");
  RateRatio r;
  r.F = tau_ref / tau;
  r.error = r.F * std::hypot(tau_ref_err / tau_ref, tau_err / tau);
  return r;
}

struct LorentzianFit {
  bool ok = false;
  double lambda_c = 0.0, Q = 0.0, amplitude = 0.0, baseline = 0.0;
  double lambda_c_error = 0.0, Q_error = 0.0, amplitude_error = 0.0, baseline_error = 0.0;
  double residual_norm = 0.0;  // RMS residual
  std::string diagnostic;
};

inline double lorentzian(double lambda, double A, double lambda_c, double Q, double B) {
  const double x = lambda / lambda_c - 1.0;
  return A / (1.0 + 4.0 * Q * Q * x * x) + B;
}

/// Least-squares fit of an intensity Lorentzian plus baseline, optionally
/// restricted to a wavelength window.
inline LorentzianFit fit_lorentzian(const std::vector<double>& lambda, const std::vector<double>& intensity,
                                    std::optional<std::pair<double, double>> window = std::nullopt) {
  if (lambda.size() != intensity.size()) throw std::invalid_argument("fit_lorentzian: size mismatch");
  if (!std::is_sorted(lambda.begin(), lambda.end())) throw std::invalid_argument("fit_lorentzian: wavelengths must ascend");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < lambda.size(); ++i)
    if (!window || (lambda[i] >= window->first && lambda[i] <= window->second)) {
      x.push_back(lambda[i]);
      y.push_back(intensity[i]);
    }
  LorentzianFit out;
  if (x.size() < 5) {
    out.diagnostic = "fit failure: fewer than 5 samples";
    return out;
  }
  const auto ip = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end());
  const double base0 = sorted[sorted.size() / 10];
  const double peak = y[ip] - base0;
  // Spread of the lower half as a noise scale.
  double noise = 0.0;
  for (std::size_t i = 0; i < sorted.size() / 2; ++i) noise += (sorted[i] - base0) * (sorted[i] - base0);
  noise = std::sqrt(noise / std::max<std::size_t>(sorted.size() / 2, 1));
  if (!(peak > 0.0) || peak < 5.0 * noise || ip == 0 || ip + 1 == x.size()) {
    out.diagnostic = "fit failure: data are not peaked";
    return out;
  }
  std::size_t lo = ip, hi = ip;
  while (lo > 0 && y[lo] - base0 > 0.5 * peak) --lo;
  while (hi + 1 < x.size() && y[hi] - base0 > 0.5 * peak) ++hi;
  const double fwhm0 = std::max(std::abs(x[hi] - x[lo]), std::abs(x[1] - x[0]));
  fit::Vec p0(4);
  p0 << peak, x[ip], x[ip] / fwhm0, base0;
  const int m = static_cast<int>(x.size());
  auto res = fit::least_squares(
      [&](const fit::Vec& p, fit::Vec& r) {
        for (int i = 0; i < m; ++i) {
          const auto u = static_cast<std::size_t>(i);
          r[i] = lorentzian(x[u], p[0], p[1], p[2], p[3]) - y[u];
        }
      },
      p0, m,
      [&](const fit::Vec& p, fit::Mat& J) {
        for (int i = 0; i < m; ++i) {
          const double xi = x[static_cast<std::size_t>(i)];
          const double u = xi / p[1] - 1.0, D = 1.0 + 4.0 * p[2] * p[2] * u * u;
          const double g = -p[0] / (D * D);
          J(i, 0) = 1.0 / D;
          J(i, 1) = g * 8.0 * p[2] * p[2] * u * (-xi / (p[1] * p[1]));
          J(i, 2) = g * 8.0 * p[2] * u * u;
          J(i, 3) = 1.0;
        }
      });
  out.amplitude = res.params[0];
  out.lambda_c = res.params[1];
  out.Q = std::abs(res.params[2]);
  out.baseline = res.params[3];
  out.amplitude_error = res.errors[0];
  out.lambda_c_error = res.errors[1];
  out.Q_error = res.errors[2];
  out.baseline_error = res.errors[3];
  out.residual_norm = std::sqrt(res.chi2 / m);
  const double width = out.lambda_c / out.Q;
  std::string why;
  if (!res.converged) why = "did not converge";
  else if (!(out.amplitude > 0.0)) why = "no peak";
  else if (x.back() - x.front() < 3.0 * width) why = "spectrum spans fewer than 3 linewidths";
  else if (out.lambda_c < x.front() || out.lambda_c > x.back()) why = "centre outside the data";
  out.ok = why.empty();
  out.diagnostic = out.ok ? "ok" : "fit failure: " + why;
  return out;
}

}  // namespace pcsim::stats
