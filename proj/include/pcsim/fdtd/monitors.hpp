#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcsim/core/array.hpp"
#include "pcsim/fdtd/grid.hpp"

namespace pcsim::fdtd {

using Index3 = std::array<std::size_t, 3>;
using cplx = std::complex<double>;

/// Time series of one field sample. E samples are taken at integer steps,
/// H samples at half steps.
struct ProbeRecord {
  Component component = Component::Ex;
  Index3 index{};
  std::vector<double> t;
  std::vector<double> value;
};

/// Axis-aligned closed box on the node lattice: node indices lo..hi along each
/// active axis. In 2D the box is a rectangle.
struct FluxBox {
  std::array<std::size_t, 3> lo{};
  std::array<std::size_t, 3> hi{};

  /// Box of half-widths (lattice units) centered at `center`, snapped to nodes.
  static FluxBox around(const GridSpec& g, std::array<double, 3> center, std::array<double, 3> half_width) {
    FluxBox b;
    for (int a = 0; a < g.ndim(); ++a) {
      const auto ua = static_cast<std::size_t>(a);
      // Node lattice is shared by every component that is a node along `a`.
      const Component ref = a == 0 ? Component::Ey : Component::Ex;
      b.lo[ua] = g.nearest_index(ref, a, center[ua] - half_width[ua]);
      b.hi[ua] = g.nearest_index(ref, a, center[ua] + half_width[ua]);
    }
    return b;
  }

  bool inside_interior(const GridSpec& g) const {
    for (int a = 0; a < g.ndim(); ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const std::size_t margin = g.pml_enabled ? static_cast<std::size_t>(g.pml.thickness) : 1;
      const std::size_t n = static_cast<std::size_t>(g.cells[ua]);
      if (lo[ua] < margin || hi[ua] + margin > n || hi[ua] <= lo[ua]) return false;
    }
    return true;
  }

  bool encloses_node_position(const GridSpec& g, std::array<double, 3> x) const {
    for (int a = 0; a < g.ndim(); ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const Component ref = a == 0 ? Component::Ey : Component::Ex;
      const double l = g.coordinate(ref, a, lo[ua]);
      const double h = g.coordinate(ref, a, hi[ua]);
      if (!(x[ua] > l && x[ua] < h)) return false;
    }
    return true;
  }
};

/// Outward Poynting flux through a FluxBox, both time-integrated and at a set
/// of DFT frequencies. E is averaged to half steps to pair with H.
struct FluxRecord {
  struct Sample {
    std::size_t e_idx = 0;
    std::size_t h_idx0 = 0;
    std::size_t h_idx1 = 0;
    double weight = 0.0;  // sign * normal * quadrature weight * face element
    Component e = Component::Ex;
    Component h = Component::Hx;
  };

  FluxBox box{};
  std::vector<Sample> samples;
  std::vector<double> e_prev;
  std::vector<double> frequencies;
  std::vector<cplx> e_dft;  // [sample * nfreq + f]
  std::vector<cplx> h_dft;
  double integrated = 0.0;  // time-integrated outward flux (energy)
  std::vector<double> flux_series;

  std::vector<double> spectrum() const {
    const std::size_t nf = frequencies.size();
    std::vector<double> out(nf, 0.0);
    for (std::size_t s = 0; s < samples.size(); ++s)
      for (std::size_t f = 0; f < nf; ++f)
        out[f] += samples[s].weight * std::real(e_dft[s * nf + f] * std::conj(h_dft[s * nf + f]));
    return out;
  }
};

/// Running DFT of selected components over an index box.
struct DftRecord {
  struct Part {
    Component component = Component::Ex;
    std::array<std::size_t, 3> lo{};
    std::array<std::size_t, 3> hi{};  // exclusive
    std::vector<cplx> data;           // [((i*nj + j)*nk + k) * nfreq + f]

    Shape3 shape() const { return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}; }
    std::size_t count() const {
      const auto s = shape();
      return s[0] * s[1] * s[2];
    }
  };

  std::vector<double> frequencies;
  std::vector<Part> parts;

  const Part& part(Component c) const {
    for (const auto& p : parts)
      if (p.component == c) return p;
    throw std::out_of_range("DftRecord: component " + std::string(to_string(c)) + " not recorded");
  }
};

/// Per-source energy bookkeeping: the work done by the current on the field,
/// -sum E*I dt with E averaged to the half step of the current sample.
struct SourceRecord {
  double work = 0.0;
  std::vector<double> frequencies;
  std::vector<cplx> e_dft;
  std::vector<cplx> i_dft;

  /// Spectral work density Re[-E(w) I*(w)]; the ratio of this quantity between
  /// two environments for the same current is the ratio of emitted powers.
  std::vector<double> work_spectrum() const {
    std::vector<double> out(frequencies.size());
    for (std::size_t f = 0; f < frequencies.size(); ++f) out[f] = -std::real(e_dft[f] * std::conj(i_dft[f]));
    return out;
  }
};

}  // namespace pcsim::fdtd
