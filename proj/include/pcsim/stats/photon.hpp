#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcsim/core/random.hpp"

namespace pcsim::stats {

using Timestamp = std::int64_t;  // picoseconds

enum class EmitterKind { TwoLevel, Poissonian };

/// Pulse-synchronous background photons share the emitter's delay profile
/// (uncorrelated light from the same excitation pulse); continuous ones are
/// uniform in time.
enum class BackgroundKind { PulseSynchronous, Continuous };

struct EmitterModel {
  double tau_ps = 650.0;
  double p_exc = 1.0;              // excitation probability (two-level) or mean photons per pulse (Poissonian)
  double eta_det = 0.05;           // collection and detection efficiency
  double background_rate = 0.0;    // counts/s on each channel
  EmitterKind kind = EmitterKind::TwoLevel;
  BackgroundKind background = BackgroundKind::PulseSynchronous;

  void validate() const {
    if (!(tau_ps > 0.0)) throw std::invalid_argument("EmitterModel: tau must be positive");
    if (!(p_exc >= 0.0) || (kind == EmitterKind::TwoLevel && p_exc > 1.0))
      throw std::invalid_argument("EmitterModel: excitation probability must lie in [0, 1]");
    if (!(eta_det >= 0.0 && eta_det <= 1.0)) throw std::invalid_argument("EmitterModel: detection efficiency must lie in [0, 1]");
    if (!(background_rate >= 0.0)) throw std::invalid_argument("EmitterModel: background rate must be >= 0");
  }
};

struct PulseTrain {
  double period_ps = 13000.0;
  std::int64_t pulses = 100000;
  double jitter_ps = 0.0;

  void validate() const {
    if (!(period_ps > 0.0)) throw std::invalid_argument("PulseTrain: period must be positive");
    if (pulses < 0) throw std::invalid_argument("PulseTrain: pulse count must be >= 0");
    if (!(jitter_ps >= 0.0)) throw std::invalid_argument("PulseTrain: jitter must be >= 0");
  }
  double duration_ps() const { return period_ps * static_cast<double>(pulses); }
};

struct PhotonStreams {
  std::vector<Timestamp> channel[2];
  std::int64_t pulses = 0;
  double period_ps = 0.0;

  std::size_t total() const { return channel[0].size() + channel[1].size(); }
};

/// Background rate per channel that makes the signal a fraction rho of all
/// detected counts.
inline double background_for_signal_fraction(const EmitterModel& m, const PulseTrain& t, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("signal fraction must lie in (0, 1]");
  const double signal_per_channel = 0.5 * m.p_exc * m.eta_det;
  return signal_per_channel * (1.0 - rho) / rho / (t.period_ps * 1e-12);
}

/// Seeded photon streams for a 50/50 HBT setup.
inline PhotonStreams simulate_photon_stream(const EmitterModel& m, const PulseTrain& t, std::uint64_t seed) {
  m.validate();
  t.validate();
  Rng rng(seed);
  PhotonStreams s;
  s.pulses = t.pulses;
  s.period_ps = t.period_ps;
  const double bg_per_pulse = m.background_rate * t.period_ps * 1e-12;
  auto emit = [&](double t0, int forced_channel) {
    const double when = t0 + rng.exponential(m.tau_ps);
    const int ch = forced_channel >= 0 ? forced_channel : (rng.bernoulli(0.5) ? 1 : 0);
    s.channel[ch].push_back(std::llround(when));
  };
  for (std::int64_t k = 0; k < t.pulses; ++k) {
    double t0 = static_cast<double>(k) * t.period_ps;
    if (t.jitter_ps > 0.0) t0 += t.jitter_ps * rng.normal();
    std::uint64_t photons = 0;
    if (m.kind == EmitterKind::TwoLevel)
      photons = rng.bernoulli(m.p_exc) ? 1 : 0;
    else
      photons = rng.poisson(m.p_exc);
    for (std::uint64_t p = 0; p < photons; ++p)
      if (rng.bernoulli(m.eta_det)) emit(t0, -1);
    if (m.background == BackgroundKind::PulseSynchronous && bg_per_pulse > 0.0)
      for (int ch = 0; ch < 2; ++ch) {
        const auto nb = rng.poisson(bg_per_pulse);
        for (std::uint64_t b = 0; b < nb; ++b) emit(t0, ch);
      }
  }
  if (m.background == BackgroundKind::Continuous && bg_per_pulse > 0.0)
    for (int ch = 0; ch < 2; ++ch) {
      const auto nb = rng.poisson(bg_per_pulse * static_cast<double>(t.pulses));
      for (std::uint64_t b = 0; b < nb; ++b) s.channel[ch].push_back(std::llround(rng.uniform() * t.duration_ps()));
    }
  for (auto& c : s.channel) std::sort(c.begin(), c.end());
  return s;
}

enum class Pairing { StartStop, FullCorrelation };

/// Coincidence counts in bins centred on k * bin_ps, |k| <= window/bin.
/// Delay is t(channel 2) - t(channel 1).
struct CoincidenceHistogram {
  Timestamp bin_ps = 100;
  Timestamp window_ps = 52000;
  std::vector<std::uint64_t> counts;
  std::uint64_t starts = 0, stops = 0;
  std::uint64_t pairs = 0;
  Pairing pairing = Pairing::StartStop;
  std::string normalization = "side-peak mean";
  double period_ps = 13000.0;

  std::int64_t half_bins() const { return window_ps / bin_ps; }
  double delay(std::size_t b) const { return static_cast<double>(static_cast<std::int64_t>(b) - half_bins()) * static_cast<double>(bin_ps); }
  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

/// Bin of a delay with ties going to the bin nearer zero, so that the binning
/// is exactly mirror-symmetric.
inline std::int64_t delay_bin(Timestamp d, Timestamp bin) {
  const Timestamp a = d < 0 ? -d : d;
  const Timestamp q = a / bin, r = a % bin;
  const Timestamp k = 2 * r > bin ? q + 1 : q;
  return d < 0 ? -k : k;
}

inline CoincidenceHistogram hbt_histogram(const PhotonStreams& s, Timestamp bin_ps, Timestamp window_ps,
                                          Pairing pairing = Pairing::StartStop) {
  if (bin_ps <= 0 || window_ps <= 0) throw std::invalid_argument("hbt_histogram: bin and window must be positive");
  if (window_ps % bin_ps != 0) throw std::invalid_argument("hbt_histogram: window must be a multiple of the bin width");
  if (s.channel[0].empty() || s.channel[1].empty()) throw std::invalid_argument("hbt_histogram: empty detector channel");
  CoincidenceHistogram h;
  h.bin_ps = bin_ps;
  h.window_ps = window_ps;
  h.pairing = pairing;
  h.period_ps = s.period_ps;
  h.starts = s.channel[0].size();
  h.stops = s.channel[1].size();
  const std::int64_t K = h.half_bins();
  h.counts.assign(static_cast<std::size_t>(2 * K + 1), 0);
  const auto& a = s.channel[0];
  const auto& b = s.channel[1];
  auto add = [&](Timestamp d) {
    const auto k = delay_bin(d, bin_ps);
    if (k < -K || k > K) return false;
    ++h.counts[static_cast<std::size_t>(k + K)];
    ++h.pairs;
    return true;
  };
  std::size_t j = 0;
  for (Timestamp t1 : a) {
    // Stop channel behind a delay line of one window, so negative delays show.
    while (j < b.size() && b[j] < t1 - window_ps) ++j;
    if (pairing == Pairing::StartStop) {
      if (j < b.size()) add(b[j] - t1);
    } else {
      for (std::size_t m = j; m < b.size() && b[m] - t1 <= window_ps; ++m) add(b[m] - t1);
    }
  }
  return h;
}

}  // namespace pcsim::stats
