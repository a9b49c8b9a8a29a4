#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcsim/core/random.hpp"
#include "pcsim/core/units.hpp"
#include "pcsim/geometry/rasterize.hpp"
#include "pcsim/modal/cavity.hpp"
#include "pcsim/sources/dipole.hpp"

namespace pcsim::ensemble {

using fdtd::Component;

struct EmitterSpec {
  std::array<double, 3> position{};
  std::array<double, 3> orientation{1.0, 0.0, 0.0};
  double frequency = 0.27;          // a / lambda
  std::optional<double> detuning;   // (lambda - lambda_cav) / (lambda_cav / Q)

  double wavelength() const { return 1.0 / frequency; }

  /// Sets the wavelength from a detuning in cavity linewidths.
  static double frequency_for_detuning(double detuning, double lambda_cav, double Q) {
    return 1.0 / (lambda_cav * (1.0 + detuning / Q));
  }
  static double detuning_of(double frequency, double lambda_cav, double Q) {
    return (1.0 / frequency - lambda_cav) / (lambda_cav / Q);
  }
};

struct Provenance {
  double resolution = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string bulk_reference;  // e.g. "homogeneous eps=7.0225, same grid/PML/dipole"
};

struct RateResult {
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double P_pc = 0.0;
  double P_bulk = 0.0;
  EmitterSpec emitter;
  Provenance provenance;
  bool valid = true;
  std::string flag = "ok";
};

struct RateOptions {
  double pulse_width = 0.05;      // bandwidth around the emitter frequencies
  double decay_threshold = 1e-5;
  double max_time = 8000.0;
  double flux_half_width = 0.5;
};

/// Whether every E sample the dipole drives sits in dielectric (eps > 1).
inline bool in_dielectric(const geometry::MaterialMap& m, const EmitterSpec& e) {
  sources::DipoleSource d;
  d.position = e.position;
  const auto& g = m.grid;
  const int ncomp = g.dim == fdtd::Dimensionality::TE2D ? 2 : 3;
  for (int c = 0; c < ncomp; ++c) {
    if (std::abs(e.orientation[static_cast<std::size_t>(c)]) < 1e-12) continue;
    const auto idx = d.snapped_index(g, static_cast<Component>(c));
    if (!(m.eps[static_cast<std::size_t>(c)](idx[0], idx[1], idx[2]) > 1.0)) return false;
  }
  return true;
}

inline bool inside_crystal(const geometry::PhotonicCrystalSpec& s, const std::array<double, 3>& p) {
  return std::abs(p[0]) <= s.half_extent_x() && std::abs(p[1]) <= s.half_extent_y();
}

/// Emitted power of one dipole at several frequencies in a material map,
/// from the spectral source work. The pulse covers [min f, max f].
struct SpectralPower {
  std::vector<double> frequencies;
  std::vector<double> power;
  sources::PowerResult run;
};

template <class Real = float>
SpectralPower spectral_power(const geometry::MaterialMap& m, const std::array<double, 3>& position,
                             const std::array<double, 3>& orientation, const std::vector<double>& freqs,
                             const RateOptions& opt = {}) {
  if (freqs.empty()) throw std::invalid_argument("spectral_power: no frequencies");
  double lo = freqs.front(), hi = freqs.front();
  for (double f : freqs) {
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  sources::DipoleSource d;
  d.position = position;
  d.orientation = orientation;
  d.waveform = fdtd::Waveform::gaussian(0.5 * (lo + hi), std::max(opt.pulse_width, hi - lo));
  sources::PowerOptions po;
  po.decay_threshold = opt.decay_threshold;
  po.max_time = opt.max_time;
  po.frequencies = freqs;
  const auto box = sources::flux_box_around(m.grid, position, opt.flux_half_width);
  SpectralPower out;
  out.run = sources::radiated_power<Real>(m.grid, m.eps, d, box, po);
  out.frequencies = freqs;
  out.power = out.run.work_spectrum;
  return out;
}

/// Ratio spectrum of one dipole between a structure and the homogeneous
/// slab medium on the identical grid.
struct RatioSpectrum {
  std::vector<double> frequencies;
  std::vector<double> P_pc, P_bulk, ratio;
  bool valid = true;
  std::string flag = "ok";
};

template <class Real = float>
RatioSpectrum ratio_spectrum(const geometry::MaterialMap& pc, const std::array<double, 3>& position,
                             const std::array<double, 3>& orientation, const std::vector<double>& freqs,
                             const RateOptions& opt = {}) {
  const auto bulk = geometry::homogeneous(pc.grid, pc.eps_max);
  const auto a = spectral_power<Real>(pc, position, orientation, freqs, opt);
  const auto b = spectral_power<Real>(bulk, position, orientation, freqs, opt);
  RatioSpectrum r;
  r.frequencies = freqs;
  r.P_pc = a.power;
  r.P_bulk = b.power;
  for (std::size_t k = 0; k < freqs.size(); ++k) r.ratio.push_back(a.power[k] / b.power[k]);
  r.valid = a.run.valid() && b.run.valid();
  if (!a.run.valid()) r.flag = "pc:" + a.run.flag();
  if (!b.run.valid()) r.flag = (r.valid ? "" : r.flag + ";") + "bulk:" + b.run.flag();
  if (r.valid) r.flag = "ok";
  return r;
}

/// Gamma/Gamma0 for one emitter: PC run and bulk run with identical dipole,
/// grid and PML.
template <class Real = float>
RateResult single_emitter_rate(const geometry::MaterialMap& pc, const EmitterSpec& e, const RateOptions& opt = {},
                               const Provenance& prov = {}) {
  if (!in_dielectric(pc, e)) throw std::invalid_argument("single_emitter_rate: emitter sits in an air hole");
  const auto rs = ratio_spectrum<Real>(pc, e.position, e.orientation, {e.frequency}, opt);
  RateResult r;
  r.emitter = e;
  r.P_pc = rs.P_pc[0];
  r.P_bulk = rs.P_bulk[0];
  r.ratio = r.P_pc / r.P_bulk;
  r.valid = rs.valid && r.ratio > 0.0;
  r.flag = rs.valid ? (r.ratio > 0.0 ? "ok" : "nonpositive") : rs.flag;
  r.provenance = prov;
  r.provenance.resolution = pc.grid.resolution;
  r.provenance.bulk_reference = "homogeneous eps=" + std::to_string(pc.eps_max) + " on the same grid";
  return r;
}

// ---------------------------------------------------------------------------
// Ensemble

struct EnsembleSpec {
  int n_emitters = 200;
  double fmin = 0.28;              // emission band, a / lambda
  double fmax = 0.32;
  double radius = 1.2;             // sampling disc around the crystal center
  std::uint64_t seed = 1;
  int max_attempts = 100000;
};

/// Seeded emitter list: uniform positions in the disc (rejecting air), random
/// orientation, uniform frequency in band. 2D-TE draws in-plane orientations;
/// an isotropic 3D dipole projects onto a uniformly distributed in-plane angle.
inline std::vector<EmitterSpec> plan_ensemble(const geometry::MaterialMap& pc, const EnsembleSpec& s) {
  if (s.n_emitters < 1) throw std::invalid_argument("ensemble: n_emitters must be >= 1");
  if (!(s.fmin > 0.0 && s.fmax >= s.fmin)) throw std::invalid_argument("ensemble: invalid band");
  if (!(s.radius > 0.0)) throw std::invalid_argument("ensemble: radius must be positive");
  Rng rng(s.seed);
  const bool two_d = pc.grid.dim == fdtd::Dimensionality::TE2D;
  std::vector<EmitterSpec> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < s.n_emitters) {
    if (++attempts > s.max_attempts) throw std::runtime_error("ensemble: could not place emitters in dielectric");
    EmitterSpec e;
    const double r = s.radius * std::sqrt(rng.uniform());
    const double th = 2.0 * kPi * rng.uniform();
    e.position = {r * std::cos(th), r * std::sin(th), 0.0};
    if (two_d) {
      const double phi = 2.0 * kPi * rng.uniform();
      e.orientation = {std::cos(phi), std::sin(phi), 0.0};
    } else {
      const double z = rng.uniform(-1.0, 1.0), phi = 2.0 * kPi * rng.uniform(), q = std::sqrt(1.0 - z * z);
      e.orientation = {q * std::cos(phi), q * std::sin(phi), z};
    }
    e.frequency = rng.uniform(s.fmin, s.fmax);
    // Orientation is irrelevant to the air test when both in-plane samples are checked.
    EmitterSpec probe = e;
    probe.orientation = {1.0, 1.0, two_d ? 0.0 : 1.0};
    if (!in_dielectric(pc, probe)) continue;
    out.push_back(e);
  }
  return out;
}

struct EnsembleSummary {
  double mean = 0.0;
  double variance = 0.0;   // population variance over the ensemble
  int n = 0;
  int n_invalid = 0;
  bool flagged = false;    // more than 10% of emitters carry warnings
};

inline EnsembleSummary summarize(const std::vector<RateResult>& results) {
  EnsembleSummary s;
  s.n = static_cast<int>(results.size());
  if (results.empty()) return s;
  double sum = 0.0;
  for (const auto& r : results) {
    sum += r.ratio;
    if (!r.valid) ++s.n_invalid;
  }
  s.mean = sum / s.n;
  double ss = 0.0;
  for (const auto& r : results) ss += (r.ratio - s.mean) * (r.ratio - s.mean);
  s.variance = ss / s.n;
  s.flagged = s.n_invalid * 10 > s.n;
  return s;
}

// ---------------------------------------------------------------------------
// Rate map

struct RateMapSpec {
  std::vector<std::array<double, 2>> offsets;  // emitter positions relative to the cavity center
  std::vector<double> detunings;               // in cavity linewidths
};

struct RateMap {
  std::vector<std::array<double, 2>> offsets;
  std::vector<double> detunings;
  std::vector<double> frequencies;             // per detuning
  std::vector<std::vector<double>> ratio;      // [offset][detuning], NaN where skipped
  std::vector<std::string> marker;             // per offset: ok, air, or a run flag
  double lambda_cav = 0.0;
  double Q = 0.0;
  std::string polarization;

  bool skipped(std::size_t i) const { return marker[i] == "air"; }
};

inline std::array<double, 3> polarization_axis(const std::string& pol) {
  return pol == "y-dipole" ? std::array<double, 3>{0.0, 1.0, 0.0} : std::array<double, 3>{1.0, 0.0, 0.0};
}

/// Job list for a rate map: one emitter per offset carrying every detuning.
inline RateMap plan_rate_map(const geometry::MaterialMap& pc, const modal::ResonanceMode& mode, const RateMapSpec& s) {
  if (s.offsets.empty() || s.detunings.empty()) throw std::invalid_argument("rate_map: empty axes");
  RateMap m;
  m.offsets = s.offsets;
  m.detunings = s.detunings;
  m.lambda_cav = mode.wavelength();
  m.Q = mode.Q;
  m.polarization = mode.polarization;
  for (double d : s.detunings) m.frequencies.push_back(EmitterSpec::frequency_for_detuning(d, m.lambda_cav, m.Q));
  m.ratio.assign(s.offsets.size(), std::vector<double>(s.detunings.size(), std::numeric_limits<double>::quiet_NaN()));
  m.marker.assign(s.offsets.size(), "pending");
  for (std::size_t i = 0; i < s.offsets.size(); ++i) {
    EmitterSpec e;
    e.position = {s.offsets[i][0], s.offsets[i][1], 0.0};
    e.orientation = polarization_axis(m.polarization);
    if (!in_dielectric(pc, e)) m.marker[i] = "air";
  }
  return m;
}

/// Fills row i of a planned rate map.
template <class Real = float>
void run_rate_map_row(const geometry::MaterialMap& pc, RateMap& m, std::size_t i, const RateOptions& opt = {}) {
  if (m.skipped(i)) return;
  const std::array<double, 3> pos{m.offsets[i][0], m.offsets[i][1], 0.0};
  const auto rs = ratio_spectrum<Real>(pc, pos, polarization_axis(m.polarization), m.frequencies, opt);
  m.ratio[i] = rs.ratio;
  m.marker[i] = rs.flag;
}

// ---------------------------------------------------------------------------
// Bandgap scan

struct BandgapSpec {
  std::vector<double> frequencies;  // a / lambda grid
  int n_probes = 8;
  double radius = 1.2;
  std::uint64_t seed = 1;
  double threshold = 0.5;
};

struct GapEdges {
  bool found = false;
  double f_low = 0.0, f_high = 0.0;  // a / lambda
  bool open_low = false, open_high = false;  // region touches the scanned range
  std::string diagnostic;

  bool contains(double f) const { return found && f >= f_low && f <= f_high; }
};

struct BandgapScan {
  std::vector<double> frequencies;
  std::vector<double> mean_ratio;
  std::vector<EmitterSpec> probes;
  std::vector<std::vector<double>> per_probe;  // [probe][frequency]
  std::vector<std::string> flags;
  GapEdges gap;
};

/// Probe emitters for a gap scan (the frequency field is unused).
inline std::vector<EmitterSpec> plan_bandgap(const geometry::MaterialMap& pc, const BandgapSpec& s) {
  if (s.frequencies.size() < 3) throw std::invalid_argument("bandgap_scan: need at least 3 frequencies");
  EnsembleSpec es;
  es.n_emitters = s.n_probes;
  es.fmin = es.fmax = s.frequencies.front();
  es.radius = s.radius;
  es.seed = s.seed;
  return plan_ensemble(pc, es);
}

/// Contiguous sub-threshold region around the deepest point of the mean
/// spectrum; edges are linear threshold crossings.
inline GapEdges detect_gap(const std::vector<double>& f, const std::vector<double>& mean, double threshold) {
  GapEdges g;
  std::size_t best = 0;
  for (std::size_t k = 1; k < mean.size(); ++k)
    if (mean[k] < mean[best]) best = k;
  if (mean.empty() || !(mean[best] < threshold)) {
    g.diagnostic = "no gap detected";
    return g;
  }
  std::size_t lo = best, hi = best;
  while (lo > 0 && mean[lo - 1] < threshold) --lo;
  while (hi + 1 < mean.size() && mean[hi + 1] < threshold) ++hi;
  auto cross = [&](std::size_t a, std::size_t b) {
    return f[a] + (threshold - mean[a]) * (f[b] - f[a]) / (mean[b] - mean[a]);
  };
  g.found = true;
  g.open_low = lo == 0;
  g.open_high = hi + 1 == mean.size();
  g.f_low = g.open_low ? f[lo] : cross(lo - 1, lo);
  g.f_high = g.open_high ? f[hi] : cross(hi, hi + 1);
  return g;
}

inline BandgapScan reduce_bandgap(const BandgapSpec& s, const std::vector<EmitterSpec>& probes,
                                  const std::vector<RatioSpectrum>& spectra) {
  BandgapScan out;
  out.frequencies = s.frequencies;
  out.probes = probes;
  out.mean_ratio.assign(s.frequencies.size(), 0.0);
  for (const auto& r : spectra) {
    out.per_probe.push_back(r.ratio);
    out.flags.push_back(r.flag);
    for (std::size_t k = 0; k < r.ratio.size(); ++k) out.mean_ratio[k] += r.ratio[k] / static_cast<double>(spectra.size());
  }
  out.gap = detect_gap(out.frequencies, out.mean_ratio, s.threshold);
  return out;
}

/// Serial convenience driver; the CLI runs the same jobs on its pool.
template <class Real = float>
BandgapScan bandgap_scan(const geometry::MaterialMap& pc, const BandgapSpec& s, const RateOptions& opt = {}) {
  const auto probes = plan_bandgap(pc, s);
  std::vector<RatioSpectrum> spectra;
  for (const auto& p : probes) spectra.push_back(ratio_spectrum<Real>(pc, p.position, p.orientation, s.frequencies, opt));
  return reduce_bandgap(s, probes, spectra);
}

template <class Real = float>
std::vector<RateResult> ensemble_rate_suppression(const geometry::MaterialMap& pc, const EnsembleSpec& s,
                                                  const RateOptions& opt = {}, const Provenance& prov = {}) {
  const auto emitters = plan_ensemble(pc, s);
  std::vector<RateResult> out;
  Provenance p = prov;
  p.seed = s.seed;
  for (const auto& e : emitters) out.push_back(single_emitter_rate<Real>(pc, e, opt, p));
  return out;
}

template <class Real = float>
RateMap rate_map(const geometry::MaterialMap& pc, const modal::ResonanceMode& mode, const RateMapSpec& s,
                 const RateOptions& opt = {}) {
  auto m = plan_rate_map(pc, mode, s);
  for (std::size_t i = 0; i < m.offsets.size(); ++i) run_rate_map_row<Real>(pc, m, i, opt);
  return m;
}

}  // namespace pcsim::ensemble
