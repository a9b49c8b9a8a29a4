#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcsim/fdtd/grid.hpp"
#include "pcsim/fdtd/monitors.hpp"
#include "pcsim/fdtd/simulation.hpp"
#include "pcsim/fdtd/waveform.hpp"

namespace pcsim::sources {

using fdtd::Component;
using fdtd::FluxBox;
using fdtd::GridSpec;

/// Electric point dipole. Each Cartesian part of the orientation drives the
/// nearest Yee sample of the matching E component; 2D-TE grids drive only the
/// in-plane parts.
struct DipoleSource {
  std::array<double, 3> position{0.0, 0.0, 0.0};
  std::array<double, 3> orientation{1.0, 0.0, 0.0};
  fdtd::Waveform waveform = fdtd::Waveform::gaussian(0.27, 0.1);
  double amplitude = 1.0;

  static constexpr double kMinCellsPerWavelength = 10.0;

  /// Throws on an invalid dipole for this grid. `n_max` is the largest
  /// refractive index the dipole radiates into.
  void validate(const GridSpec& g, double n_max = 1.0) const {
    const double norm = std::sqrt(orientation[0] * orientation[0] + orientation[1] * orientation[1] +
                                  orientation[2] * orientation[2]);
    if (std::abs(norm - 1.0) > 1e-9) throw std::invalid_argument("DipoleSource: orientation must be a unit vector");
    waveform.validate();
    if (!std::isfinite(amplitude)) throw std::invalid_argument("DipoleSource: amplitude must be finite");
    const double cells = g.resolution / (waveform.frequency * n_max);
    if (cells < kMinCellsPerWavelength - 1e-9)
      throw std::invalid_argument("DipoleSource: frequency " + std::to_string(waveform.frequency) + " gives " +
                                  std::to_string(cells) + " cells per wavelength in the medium (need >= 10)");
    if (g.dim == fdtd::Dimensionality::TE2D && std::hypot(orientation[0], orientation[1]) < 1e-12)
      throw std::invalid_argument("DipoleSource: 2D-TE grids cannot represent an out-of-plane dipole");
    for (int a = 0; a < g.ndim(); ++a) {
      const double hw = g.interior_half_width(a);
      if (std::abs(position[static_cast<std::size_t>(a)]) >= hw)
        throw std::invalid_argument("DipoleSource: position outside the PML-free interior");
    }
  }

  /// Snapped Yee index of the E component along `axis` nearest the position.
  fdtd::Index3 snapped_index(const GridSpec& g, Component c) const {
    fdtd::Index3 idx{};
    for (int a = 0; a < 3; ++a) idx[static_cast<std::size_t>(a)] = g.nearest_index(c, a, position[static_cast<std::size_t>(a)]);
    return idx;
  }

  std::array<double, 3> snapped_position(const GridSpec& g, Component c) const {
    const auto idx = snapped_index(g, c);
    return {g.coordinate(c, 0, idx[0]), g.coordinate(c, 1, idx[1]), g.coordinate(c, 2, idx[2])};
  }

  std::vector<fdtd::PointCurrent> currents(const GridSpec& g, const std::vector<double>& dft_frequencies = {}) const {
    std::vector<fdtd::PointCurrent> out;
    const int ncomp = g.dim == fdtd::Dimensionality::TE2D ? 2 : 3;
    for (int a = 0; a < ncomp; ++a) {
      const double u = orientation[static_cast<std::size_t>(a)];
      if (std::abs(u) < 1e-12) continue;
      fdtd::PointCurrent pc;
      pc.component = static_cast<Component>(a);
      pc.index = snapped_index(g, pc.component);
      pc.waveform = waveform;
      pc.moment = amplitude * u;
      pc.dft_frequencies = dft_frequencies;
      out.push_back(std::move(pc));
    }
    return out;
  }
};

/// Box of half-width `half` (lattice units) around the dipole, shrunk to stay
/// two cells clear of the PML.
inline FluxBox flux_box_around(const GridSpec& g, const std::array<double, 3>& center, double half = 0.5) {
  std::array<double, 3> hw{};
  for (int a = 0; a < g.ndim(); ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const double room = g.interior_half_width(a) - std::abs(center[ua]) - 2.0 * g.dx();
    hw[ua] = std::min(half, room);
    if (hw[ua] < 2.0 * g.dx()) throw std::invalid_argument("flux_box_around: no room for a flux box at this position");
  }
  return FluxBox::around(g, center, hw);
}

struct PowerOptions {
  enum class Mode { Pulse, ContinuousWave };
  Mode mode = Mode::Pulse;
  long n_steps = 0;               // 0 chooses automatically
  double decay_threshold = 1e-5;  // pulse: stop when field energy falls below this fraction of its peak
  double max_time = 20000.0;
  double residual_limit = 0.01;   // boxed energy left at the end / emitted energy
  double crosscheck_tolerance = 0.02;
  int cw_periods = 10;            // averaging window for CW power
  std::vector<double> frequencies;
};

struct PowerResult {
  double P = 0.0;          // flux power: time-integrated (pulse) or cycle-averaged (CW)
  double work = 0.0;       // source work over the same interval
  double mismatch = 0.0;   // |P - work| / |work|
  double residual_fraction = 0.0;
  bool decayed = true;
  bool crosscheck_ok = true;
  bool residual_ok = true;
  long steps = 0;
  std::vector<double> frequencies;
  std::vector<double> work_spectrum;  // summed over the driven components
  std::vector<double> flux_spectrum;

  bool valid() const { return decayed && crosscheck_ok && residual_ok; }
  std::string flag() const {
    if (valid()) return "ok";
    std::string s;
    auto add = [&](const char* w) { s += s.empty() ? w : std::string("|") + w; };
    if (!decayed) add("not-decayed");
    if (!residual_ok) add("residual-energy");
    if (!crosscheck_ok) add("flux-work-mismatch");
    return s;
  }
};

/// Radiated power of a dipole through a closed flux box, with the source work
/// integral as an independent check.
template <class Real = float>
PowerResult radiated_power(const GridSpec& g, const fdtd::EpsilonArrays& eps, const DipoleSource& dip,
                           const FluxBox& box, const PowerOptions& opt = {}) {
  double n_max = 1.0;
  for (const auto& e : eps)
    for (double v : e.values()) n_max = std::max(n_max, std::sqrt(v));
  dip.validate(g, n_max);
  if (!box.inside_interior(g)) throw std::invalid_argument("radiated_power: flux box must lie inside the PML-free interior");
  const auto currents = dip.currents(g, opt.frequencies);
  for (const auto& pc : currents)
    if (!box.encloses_node_position(g, dip.snapped_position(g, pc.component)))
      throw std::invalid_argument("radiated_power: flux box does not enclose the dipole");
  if (opt.mode == PowerOptions::Mode::ContinuousWave && dip.waveform.kind != fdtd::Waveform::Kind::ContinuousWave)
    throw std::invalid_argument("radiated_power: CW mode needs a continuous waveform");

  fdtd::Simulation<Real> sim(g, eps);
  for (const auto& pc : currents) sim.add_source(pc);
  const auto fid = sim.add_flux(box, opt.frequencies);
  const std::array<double, 3> lo{g.coordinate(Component::Ey, 0, box.lo[0]), g.coordinate(Component::Ex, 1, box.lo[1]),
                                 g.coordinate(Component::Ex, 2, box.lo[2])};
  const std::array<double, 3> hi{g.coordinate(Component::Ey, 0, box.hi[0]), g.coordinate(Component::Ex, 1, box.hi[1]),
                                 g.coordinate(Component::Ex, 2, box.hi[2])};
  auto total_work = [&] {
    double w = 0.0;
    for (std::size_t s = 0; s < currents.size(); ++s) w += sim.source_record(s).work;
    return w;
  };

  PowerResult out;
  if (opt.mode == PowerOptions::Mode::Pulse) {
    if (opt.n_steps > 0) {
      sim.run(opt.n_steps);
    } else {
      out.decayed = sim.run_until_decayed(opt.decay_threshold, opt.max_time);
    }
    out.P = sim.flux(fid).integrated;
    out.work = total_work();
    const double boxed = sim.field_energy_in(lo, hi);
    out.residual_fraction = out.work != 0.0 ? boxed / std::abs(out.work) : 0.0;
  } else {
    const double period = 1.0 / dip.waveform.frequency;
    double t_end = opt.n_steps > 0 ? static_cast<double>(opt.n_steps) * g.dt()
                                   : dip.waveform.turn_on + 200.0 * period + opt.cw_periods * period;
    const double t1 = t_end - opt.cw_periods * period;
    if (t1 <= dip.waveform.turn_on) throw std::invalid_argument("radiated_power: CW run too short to average");
    while (sim.time() < t1) sim.step();
    const double f1 = sim.flux(fid).integrated, w1 = total_work(), ta = sim.time();
    while (sim.time() < t_end) sim.step();
    const double span = sim.time() - ta;
    out.P = (sim.flux(fid).integrated - f1) / span;
    out.work = (total_work() - w1) / span;
  }
  out.steps = sim.time_step();
  out.mismatch = out.work != 0.0 ? std::abs(out.P - out.work) / std::abs(out.work) : std::abs(out.P);
  out.crosscheck_ok = out.mismatch <= opt.crosscheck_tolerance;
  out.residual_ok = out.residual_fraction <= opt.residual_limit;
  out.frequencies = opt.frequencies;
  out.work_spectrum.assign(opt.frequencies.size(), 0.0);
  for (std::size_t s = 0; s < currents.size(); ++s) {
    const auto ws = sim.source_record(s).work_spectrum();
    for (std::size_t k = 0; k < ws.size(); ++k) out.work_spectrum[k] += ws[k];
  }
  out.flux_spectrum = sim.flux(fid).spectrum();
  return out;
}

}  // namespace pcsim::sources
