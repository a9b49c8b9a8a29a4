#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcsim/core/array.hpp"
#include "pcsim/core/units.hpp"
#include "pcsim/fdtd/simulation.hpp"
#include "pcsim/geometry/rasterize.hpp"
#include "pcsim/modal/figures.hpp"
#include "pcsim/modal/resonance.hpp"

namespace pcsim::modal {

using fdtd::Component;

/// Extracted cavity mode with its figures of merit. The profile holds E at
/// cell centers, scaled so that max(eps |E|^2) = 1.
struct ResonanceMode {
  double frequency = 0.0;      // c/a
  double Q = 0.0;
  double Q_error = 0.0;
  double amplitude = 0.0;
  double n = 1.0;              // index used for (lambda/n)^d
  int dims = 2;
  double V_mode = 0.0;         // a^d
  double V_mode_cells = 0.0;
  double V_mode_lambda_n = 0.0;  // (lambda/n)^d
  std::string polarization;    // x-dipole or y-dipole
  std::array<double, 3> antinode{};
  fdtd::GridSpec grid;
  std::array<Array3<cplx>, 3> profile;  // Ex, Ey, Ez at cell centers (Ez empty in 2D)

  double wavelength() const { return 1.0 / frequency; }
  DecayRate kappa(const UnitSystem& u = {}) const { return cavity_decay_rate(wavelength(), Q, u); }
  double linewidth_wavelength() const { return wavelength() / Q; }

  nlohmann::json to_json(const UnitSystem& u = {}) const {
    const auto k = kappa(u);
    return {{"frequency", frequency},
            {"lambda_norm", wavelength()},
            {"lambda_nm", u.frequency_to_nm(frequency)},
            {"Q", Q},
            {"Q_error", Q_error},
            {"V_mode_norm", V_mode},
            {"V_mode_cells", V_mode_cells},
            {"V_mode_lambda_over_n", V_mode_lambda_n},
            {"dims", dims},
            {"n", n},
            {"polarization", polarization},
            {"kappa_norm", k.normalized},
            {"kappa_si", k.si},
            {"antinode", {antinode[0], antinode[1], antinode[2]}}};
  }
};

struct CavityOptions {
  double fmin = 0.24;
  double fmax = 0.34;
  double ringdown_time = 800.0;
  double min_Q = 20.0;
  double profile_decay = 1e-4;
  double max_time = 20000.0;
  bool profiles = true;
};

/// Free ringdown at one probe with the modes fitted to it.
struct RingdownTrace {
  std::string label;
  double dt = 0.0;
  std::vector<double> value;
  std::vector<Resonance> fit;
};

struct CavityAnalysis {
  std::vector<Resonance> resonances;  // merged over probes, strongest first
  std::vector<ResonanceMode> modes;
  std::vector<RingdownTrace> traces;  // first probe of each excitation
  std::string diagnostic;
};

namespace detail {

inline std::array<std::size_t, 3> cell_shape(const fdtd::GridSpec& g) {
  return {static_cast<std::size_t>(g.cells[0]), static_cast<std::size_t>(g.cells[1]),
          static_cast<std::size_t>(g.cells[2])};
}

/// Average an E component DFT onto cell centers (mean over its node axes).
inline Array3<cplx> to_cell_centers(const fdtd::GridSpec& g, const fdtd::DftRecord::Part& part) {
  const auto cs = cell_shape(g);
  Array3<cplx> out(cs, cplx{});
  const auto ps = part.shape();
  const int axis = fdtd::component_axis(part.component);
  const int nd = g.ndim();
  for (std::size_t i = 0; i < cs[0]; ++i)
    for (std::size_t j = 0; j < cs[1]; ++j)
      for (std::size_t k = 0; k < cs[2]; ++k) {
        cplx sum{};
        int count = 0;
        const int span0 = (axis != 0 && nd > 0) ? 2 : 1;
        const int span1 = (axis != 1 && nd > 1) ? 2 : 1;
        const int span2 = (axis != 2 && nd > 2) ? 2 : 1;
        for (int a = 0; a < span0; ++a)
          for (int b = 0; b < span1; ++b)
            for (int c = 0; c < span2; ++c) {
              const std::size_t ii = i + static_cast<std::size_t>(a), jj = j + static_cast<std::size_t>(b),
                                kk = k + static_cast<std::size_t>(c);
              if (ii < part.lo[0] || jj < part.lo[1] || kk < part.lo[2]) continue;
              const std::size_t li = ii - part.lo[0], lj = jj - part.lo[1], lk = kk - part.lo[2];
              if (li >= ps[0] || lj >= ps[1] || lk >= ps[2]) continue;
              sum += part.data[(li * ps[1] + lj) * ps[2] + lk];
              ++count;
            }
        out(i, j, k) = count ? sum / static_cast<double>(count) : cplx{};
      }
  return out;
}

inline bool in_interior(const fdtd::GridSpec& g, std::size_t i, std::size_t j, std::size_t k) {
  const std::array<std::size_t, 3> idx{i, j, k};
  if (!g.pml_enabled) return true;
  const auto L = static_cast<std::size_t>(g.pml.thickness);
  for (int a = 0; a < g.ndim(); ++a) {
    const auto ua = static_cast<std::size_t>(a);
    if (idx[ua] < L || idx[ua] + L >= static_cast<std::size_t>(g.cells[ua])) return false;
  }
  return true;
}

}  // namespace detail

/// Point current on the sample of component c nearest the origin.
inline fdtd::PointCurrent center_current(const fdtd::GridSpec& g, Component c, const fdtd::Waveform& wf) {
  fdtd::PointCurrent pc;
  pc.component = c;
  for (int b = 0; b < 3; ++b) pc.index[static_cast<std::size_t>(b)] = g.nearest_index(c, b, 0.0);
  pc.waveform = wf;
  return pc;
}

/// Ringdown search after a broadband pulse from an x- and then a y-oriented
/// dipole at the cavity center. The mirror planes through the center keep the
/// two runs from exciting each other's modes, which labels the polarization.
template <class Real = float>
std::vector<Resonance> cavity_ringdown(const geometry::MaterialMap& m, const CavityOptions& opt, std::string* diag = nullptr,
                                       std::vector<RingdownTrace>* traces = nullptr) {
  const auto& g = m.grid;
  const double f0 = 0.5 * (opt.fmin + opt.fmax);
  const auto wf = fdtd::Waveform::gaussian(f0, opt.fmax - opt.fmin);
  std::vector<Resonance> all;
  std::string last;
  for (int pol = 0; pol < 2; ++pol) {
    fdtd::Simulation<Real> sim(g, m.eps);
    sim.add_source(center_current(g, static_cast<Component>(pol), wf));
    const std::array<std::array<double, 2>, 2> spots{{{0.21, 0.11}, {-0.17, 0.23}}};
    std::vector<std::size_t> probes;
    for (const auto& s : spots)
      for (auto c : {Component::Ex, Component::Ey}) {
        fdtd::Index3 idx{g.nearest_index(c, 0, s[0]), g.nearest_index(c, 1, s[1]), g.nearest_index(c, 2, 0.0)};
        probes.push_back(sim.add_probe(c, idx));
      }
    const long n_on = static_cast<long>(std::ceil(wf.end_time() / sim.dt()));
    const long n_ring = static_cast<long>(std::ceil(opt.ringdown_time / sim.dt()));
    sim.run(n_on + n_ring);

    std::vector<Resonance> found;
    for (auto id : probes) {
      const auto& p = sim.probe(id);
      std::vector<double> y(p.value.begin() + n_on, p.value.end());
      const auto r = find_resonances(y, sim.dt(), opt.fmin, opt.fmax);
      if (!r.diagnostic.empty()) last = r.diagnostic;
      if (traces && id == probes.front())
        traces->push_back({pol == 0 ? "x-dipole" : "y-dipole", sim.dt(), std::move(y), r.modes});
      for (auto mode : r.modes) {
        if (mode.Q < opt.min_Q) continue;
        mode.label = pol == 0 ? "x-dipole" : "y-dipole";
        // Merge sightings within a few linewidths; keep the strongest.
        bool merged = false;
        for (auto& e : found) {
          const double tol = 3.0 * std::max(e.frequency / e.Q, mode.frequency / mode.Q);
          if (std::abs(e.frequency - mode.frequency) < tol) {
            if (mode.amplitude > e.amplitude) e = mode;
            merged = true;
            break;
          }
        }
        if (!merged) found.push_back(mode);
      }
    }
    all.insert(all.end(), found.begin(), found.end());
  }
  std::sort(all.begin(), all.end(), [](const Resonance& a, const Resonance& b) { return a.amplitude > b.amplitude; });
  if (diag && all.empty()) *diag = last.empty() ? "no resonance found" : last;
  return all;
}

/// Field profile of one resonance: narrowband excitation, then a DFT of the
/// free ringdown so only resonant fields contribute.
template <class Real = float>
ResonanceMode mode_profile(const geometry::MaterialMap& m, const Resonance& r, const CavityOptions& opt) {
  const auto& g = m.grid;
  fdtd::Simulation<Real> sim(g, m.eps);
  const auto wf = fdtd::Waveform::gaussian(r.frequency, std::max(r.frequency / r.Q, 0.02));
  sim.add_source(center_current(g, r.label == "y-dipole" ? Component::Ey : Component::Ex, wf));
  sim.run(static_cast<long>(std::ceil(wf.end_time() / sim.dt())) + 1);
  std::vector<Component> comps{Component::Ex, Component::Ey};
  if (g.dim == fdtd::Dimensionality::Full3D) comps.push_back(Component::Ez);
  std::array<std::size_t, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const bool pml = g.pml_enabled && a < g.ndim();
    lo[ua] = pml ? static_cast<std::size_t>(g.pml.thickness) : 0;
    hi[ua] = pml ? static_cast<std::size_t>(g.cells[ua] - g.pml.thickness + 1) : static_cast<std::size_t>(g.cells[ua] + 1);
  }
  const auto did = sim.add_dft(comps, lo, hi, {r.frequency});
  // A few energy decay times of free ringdown fix the shape; the amplitude is rescaled anyway.
  const double window = std::max(0.5 * opt.ringdown_time, 3.0 * r.Q / (2.0 * kPi * r.frequency));
  const double t_stop = std::min(sim.time() + window, opt.max_time);
  const double u0 = sim.field_energy();
  while (sim.time() < t_stop) {
    sim.run(50);
    if (sim.field_energy() <= opt.profile_decay * u0) break;
  }

  ResonanceMode mode;
  mode.frequency = r.frequency;
  mode.Q = r.Q;
  mode.Q_error = r.Q_error;
  mode.amplitude = r.amplitude;
  mode.grid = g;
  mode.dims = g.ndim();
  mode.n = std::sqrt(m.eps_max);
  const auto& rec = sim.dft(did);
  for (std::size_t c = 0; c < comps.size(); ++c) mode.profile[c] = detail::to_cell_centers(g, rec.part(comps[c]));

  const auto cs = detail::cell_shape(g);
  Array3<double> inten(cs, 0.0);
  double best = -1.0;
  for (std::size_t i = 0; i < cs[0]; ++i)
    for (std::size_t j = 0; j < cs[1]; ++j)
      for (std::size_t k = 0; k < cs[2]; ++k) {
        if (!detail::in_interior(g, i, j, k)) continue;
        double v = 0.0;
        for (std::size_t c = 0; c < comps.size(); ++c) v += std::norm(mode.profile[c](i, j, k));
        inten(i, j, k) = v;
        const double u = v * m.eps_cell(i, j, k);
        const double x = g.coordinate(Component::Ex, 0, i), y = g.coordinate(Component::Ey, 1, j);
        if (u > best) {
          best = u;
          mode.antinode = {x, y, g.ndim() == 3 ? g.coordinate(Component::Ez, 2, k) : 0.0};
        }
      }
  mode.polarization = r.label;
  mode.V_mode = mode_volume(inten, m.eps_cell, g.cell_volume());
  mode.V_mode_cells = mode.V_mode / g.cell_volume();
  mode.V_mode_lambda_n = mode_volume_in_cubic_wavelengths(mode.V_mode, mode.wavelength(), mode.n, g.ndim());
  const double scale = 1.0 / std::sqrt(best);
  for (auto& p : mode.profile)
    for (auto& v : p.values()) v *= scale;
  return mode;
}

template <class Real = float>
CavityAnalysis analyze_cavity(const geometry::MaterialMap& m, const CavityOptions& opt = {}) {
  CavityAnalysis out;
  out.resonances = cavity_ringdown<Real>(m, opt, &out.diagnostic, &out.traces);
  for (const auto& r : out.resonances) {
    if (opt.profiles) {
      out.modes.push_back(mode_profile<Real>(m, r, opt));
      continue;
    }
    // Spectral figures only; V_mode stays 0 without a profile.
    ResonanceMode mode;
    mode.frequency = r.frequency;
    mode.Q = r.Q;
    mode.Q_error = r.Q_error;
    mode.amplitude = r.amplitude;
    mode.n = std::sqrt(m.eps_max);
    mode.dims = m.grid.ndim();
    mode.polarization = r.label;
    mode.grid = m.grid;
    out.modes.push_back(std::move(mode));
  }
  return out;
}

/// First mode with the requested polarization label, or the strongest mode
/// when the label is "any".
inline const ResonanceMode* select_mode(const CavityAnalysis& a, const std::string& polarization) {
  for (const auto& m : a.modes)
    if (polarization == "any" || m.polarization == polarization) return &m;
  return nullptr;
}

}  // namespace pcsim::modal
