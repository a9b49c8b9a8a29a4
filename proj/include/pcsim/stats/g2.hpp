#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcsim/fit/least_squares.hpp"
#include "pcsim/stats/photon.hpp"

namespace pcsim::stats {

struct G2Options {
  double lifetime_guess_ps = 0.0;  // 0 estimates the peak width from the side peaks
  int max_side_peaks = 5;          // per side
  double window_decays = 3.0;      // peak areas over +-window_decays * tau
  double overlap_fraction = 1.0 / 3.0;  // tau above this fraction of the period means overlapping peaks
};

struct G2Estimate {
  double g2 = 0.0;            // fitted central area / mean fitted side area, background kept
  double error = 0.0;         // Poisson counting error
  double g2_counts = 0.0;     // same ratio from raw counts in the windows
  double g2_corrected = 0.0;  // flat coincidence floor removed
  double tau_ps = 0.0;        // fitted peak decay constant
  double floor = 0.0;         // fitted counts per bin between peaks
  double central_area = 0.0;
  double side_mean = 0.0;
  std::vector<double> side_areas;
  int side_peaks = 0;         // per side
  std::string mode = "fit";   // fit or area
  std::string warning;
};

/// 1 - rho^2 for a single emitter mixed with uncorrelated light.
inline double g2_for_signal_fraction(double rho) { return 1.0 - rho * rho; }

/// Inverts the mixture relation for a known signal fraction.
inline double background_corrected_g2(double g2, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("signal fraction must lie in (0, 1]");
  return (g2 - (1.0 - rho * rho)) / (rho * rho);
}

namespace detail {

/// Mean |t - kT| over the side peaks within half a period.
inline double moment_width(const CoincidenceHistogram& h, int K) {
  double num = 0.0, den = 0.0;
  const double T = h.period_ps;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double t = h.delay(b);
    const double k = std::round(t / T);
    if (k == 0.0 || std::abs(k) > K) continue;
    num += static_cast<double>(h.counts[b]) * std::abs(t - k * T);
    den += static_cast<double>(h.counts[b]);
  }
  return den > 0.0 ? num / den : 0.0;
}

/// Poisson deviance residual, so least squares gives the Poisson likelihood fit.
inline double deviance_residual(double y, double f) {
  f = std::max(f, 1e-12);
  const double d = y > 0.0 ? 2.0 * (f - y + y * std::log(y / f)) : 2.0 * f;
  const double r = std::sqrt(std::max(d, 0.0));
  return y >= f ? r : -r;
}

}  // namespace detail

inline G2Estimate g2_zero(const CoincidenceHistogram& h, const G2Options& opt = {}) {
  const double T = h.period_ps;
  if (!(T > 0.0)) throw std::invalid_argument("g2_zero: histogram has no repetition period");
  const double W = static_cast<double>(h.window_ps);
  int K = std::min(opt.max_side_peaks, static_cast<int>(std::floor((W - 0.5 * T) / T)));
  if (K < 3) throw std::invalid_argument("g2_zero: need at least 3 side peaks on each side of zero delay");
  if (h.total() == 0) throw std::invalid_argument("g2_zero: empty histogram");

  G2Estimate out;
  out.side_peaks = K;
  double tau = opt.lifetime_guess_ps > 0.0 ? opt.lifetime_guess_ps : detail::moment_width(h, K);
  if (!(tau > 0.0)) tau = 0.05 * T;

  // Joint fit of all peaks with a shared decay constant and a flat floor.
  std::vector<double> t, y;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double d = h.delay(b);
    if (std::abs(d) > (K + 0.5) * T) continue;
    t.push_back(d);
    y.push_back(static_cast<double>(h.counts[b]));
  }
  const int np = 2 * K + 3;  // tau, floor, A_-K..A_K
  // Floor and amplitudes enter as squares so they stay non-negative.
  auto model = [&](const fit::Vec& p, double x) {
    double f = p[1] * p[1];
    for (int k = -K; k <= K; ++k) {
      const double a = p[2 + k + K];
      f += a * a * std::exp(-std::abs(x - k * T) / p[0]);
    }
    return f;
  };
  bool fitted = false;
  fit::LsqResult fr;
  if (tau < opt.overlap_fraction * T) {
    fit::Vec p0(np);
    p0[0] = tau;
    p0[1] = 1e-2;
    const double bw = static_cast<double>(h.bin_ps);
    for (int k = -K; k <= K; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(t[i] - k * T) <= 3.0 * tau) s += y[i];
      p0[2 + k + K] = std::sqrt(std::max(s * bw / (2.0 * tau), 1e-2));
    }
    const int m = static_cast<int>(t.size());
    fr = fit::least_squares(
        [&](const fit::Vec& p, fit::Vec& r) {
          for (int i = 0; i < m; ++i) r[i] = detail::deviance_residual(y[static_cast<std::size_t>(i)], model(p, t[static_cast<std::size_t>(i)]));
        },
        p0, m, {}, true);
    fitted = fr.converged && fr.params[0] > 0.0 && std::isfinite(fr.params[0]);
    if (fitted) tau = fr.params[0];
    else out.warning = "peak fit failed; ";
  }
  if (!(tau < opt.overlap_fraction * T)) {
    out.warning += "peaks overlap (tau >= " + std::to_string(opt.overlap_fraction) + " T_rep); area integration over full periods";
    fitted = false;
  } else if (!fitted && out.warning.empty()) {
    out.warning = "area integration";
  }
  out.tau_ps = fitted ? tau : detail::moment_width(h, K);
  const double half = fitted ? std::min(opt.window_decays * tau, 0.5 * T) : 0.5 * T;
  out.mode = fitted ? "fit" : "area";
  if (fitted) out.floor = fr.params[1] * fr.params[1];

  std::vector<double> area_fit(static_cast<std::size_t>(2 * K + 1), 0.0), area_raw(area_fit), area_corr(area_fit);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double k = std::round(t[i] / T);
    if (std::abs(k) > K) continue;
    const double off = t[i] - k * T;
    // Half-open at +half keeps adjacent full-period windows disjoint; the
    // symmetric test keeps fit-mode windows mirror-symmetric.
    const bool inside = fitted ? std::abs(off) <= half : (off >= -half && off < half);
    if (!inside) continue;
    const auto idx = static_cast<std::size_t>(k + K);
    area_raw[idx] += y[i];
    if (fitted) {
      const double f = model(fr.params, t[i]);
      area_fit[idx] += f;
      area_corr[idx] += f - out.floor;
    }
  }
  if (!fitted) area_fit = area_corr = area_raw;

  auto side_mean = [&](const std::vector<double>& a) {
    double s = 0.0;
    for (int k = 1; k <= K; ++k) s += a[static_cast<std::size_t>(K + k)] + a[static_cast<std::size_t>(K - k)];
    return s / (2.0 * K);
  };
  const auto c = static_cast<std::size_t>(K);
  const double sm_fit = side_mean(area_fit), sm_raw = side_mean(area_raw), sm_corr = side_mean(area_corr);
  if (!(sm_raw > 0.0)) throw std::invalid_argument("g2_zero: side peaks are empty");
  out.central_area = area_fit[c];
  out.side_mean = sm_fit;
  for (int k = 1; k <= K; ++k) {
    out.side_areas.push_back(area_fit[static_cast<std::size_t>(K - k)]);
    out.side_areas.push_back(area_fit[static_cast<std::size_t>(K + k)]);
  }
  out.g2 = area_fit[c] / sm_fit;
  out.g2_counts = area_raw[c] / sm_raw;
  out.g2_corrected = sm_corr > 0.0 ? area_corr[c] / sm_corr : out.g2;
  const double c0 = area_raw[c], ns = 2.0 * K * sm_raw;
  out.error = c0 > 0.0 ? out.g2_counts * std::sqrt(1.0 / c0 + 1.0 / ns) : 1.0 / sm_raw;
  return out;
}

}  // namespace pcsim::stats
