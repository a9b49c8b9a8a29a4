#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pcsim/core/array.hpp"

namespace pcsim::fdtd {

enum class Dimensionality { TE2D, Full3D };

inline std::string_view to_string(Dimensionality d) { return d == Dimensionality::TE2D ? "2d-te" : "3d"; }

inline Dimensionality dimensionality_from_string(std::string_view s) {
  if (s == "2d-te" || s == "2d") return Dimensionality::TE2D;
  if (s == "3d") return Dimensionality::Full3D;
  throw std::invalid_argument("unknown dimensionality '" + std::string(s) + "'");
}

enum class Component { Ex = 0, Ey = 1, Ez = 2, Hx = 3, Hy = 4, Hz = 5 };

inline constexpr bool is_electric(Component c) { return static_cast<int>(c) < 3; }
inline constexpr int component_axis(Component c) { return static_cast<int>(c) % 3; }

inline std::string_view to_string(Component c) {
  constexpr std::array<std::string_view, 6> names{"Ex", "Ey", "Ez", "Hx", "Hy", "Hz"};
  return names[static_cast<std::size_t>(c)];
}

inline Component component_from_string(std::string_view s) {
  for (int i = 0; i < 6; ++i)
    if (to_string(static_cast<Component>(i)) == s) return static_cast<Component>(i);
  throw std::invalid_argument("unknown field component '" + std::string(s) + "'");
}

struct PmlSpec {
  int thickness = 10;          // cells
  double order = 3.0;          // polynomial grading
  double reflection = 1e-4;    // target normal-incidence reflection
  double kappa_max = 1.0;
  double alpha_max = 0.1;      // complex-frequency shift, normalized 1/time

  void validate() const {
    if (thickness < 4) throw std::invalid_argument("PmlSpec: thickness must be >= 4 cells");
    if (order < 1.0) throw std::invalid_argument("PmlSpec: grading order must be >= 1");
    if (!(reflection > 0.0 && reflection < 1.0))
      throw std::invalid_argument("PmlSpec: reflection must lie in (0, 1)");
    if (kappa_max < 1.0) throw std::invalid_argument("PmlSpec: kappa_max must be >= 1");
    if (alpha_max < 0.0) throw std::invalid_argument("PmlSpec: alpha_max must be >= 0");
  }
};

/// Grid description. Cell counts include the PML layers; the physical origin
/// sits at the domain center so that mirror-symmetric structures rasterize to
/// mirror-symmetric arrays.
struct GridSpec {
  Dimensionality dim = Dimensionality::TE2D;
  std::array<int, 3> cells{0, 0, 1};
  double resolution = 20.0;  // cells per lattice constant
  double courant = 0.5;
  PmlSpec pml{};
  bool pml_enabled = true;

  double dx() const { return 1.0 / resolution; }
  double dt() const { return courant * dx(); }
  int ndim() const { return dim == Dimensionality::TE2D ? 2 : 3; }

  double max_courant() const { return 1.0 / std::sqrt(static_cast<double>(ndim())); }

  /// Interior size in lattice units plus PML on every active axis.
  static GridSpec for_domain(Dimensionality dim, std::array<double, 3> size, double resolution,
                             PmlSpec pml = {}, bool pml_enabled = true, double courant = 0.5) {
    GridSpec g;
    g.dim = dim;
    g.resolution = resolution;
    g.pml = pml;
    g.pml_enabled = pml_enabled;
    g.courant = courant;
    const int naxes = dim == Dimensionality::TE2D ? 2 : 3;
    for (int a = 0; a < 3; ++a) {
      if (a < naxes) {
        int n = static_cast<int>(std::lround(size[static_cast<std::size_t>(a)] * resolution));
        if (pml_enabled) n += 2 * pml.thickness;
        g.cells[static_cast<std::size_t>(a)] = n;
      } else {
        g.cells[static_cast<std::size_t>(a)] = 1;
      }
    }
    return g;
  }

  void validate() const {
    if (!(resolution > 0.0)) throw std::invalid_argument("GridSpec: resolution must be positive");
    if (!(courant > 0.0) || courant > max_courant() + 1e-12)
      throw std::invalid_argument("GridSpec: Courant factor " + std::to_string(courant) +
                                  " exceeds the stability limit 1/sqrt(" + std::to_string(ndim()) + ")");
    const int naxes = ndim();
    for (int a = 0; a < naxes; ++a) {
      const int min_cells = pml_enabled ? 2 * pml.thickness + 2 : 2;
      if (cells[static_cast<std::size_t>(a)] < min_cells)
        throw std::invalid_argument("GridSpec: too few cells along axis " + std::to_string(a));
    }
    if (dim == Dimensionality::TE2D && cells[2] != 1)
      throw std::invalid_argument("GridSpec: 2D-TE grids have a single cell along z");
    if (pml_enabled) pml.validate();
  }

  /// Yee extents: a component is sampled at nodes along its own axis for H
  /// and at half-integer positions along its own axis for E; the opposite
  /// holds on the transverse axes.
  Shape3 extent(Component c) const {
    Shape3 s{};
    const int own = component_axis(c);
    for (int a = 0; a < 3; ++a) {
      const auto n = static_cast<std::size_t>(cells[static_cast<std::size_t>(a)]);
      const bool active = a < ndim();
      if (!active) {
        s[static_cast<std::size_t>(a)] = 1;
        continue;
      }
      const bool node = is_electric(c) ? (a != own) : (a == own);
      s[static_cast<std::size_t>(a)] = node ? n + 1 : n;
    }
    return s;
  }

  /// Whether component c sits on integer (node) positions along axis.
  bool on_node(Component c, int axis) const {
    if (axis >= ndim()) return true;
    const int own = component_axis(c);
    return is_electric(c) ? (axis != own) : (axis == own);
  }

  /// Physical coordinate (lattice units) of index idx of component c along axis.
  double coordinate(Component c, int axis, std::size_t idx) const {
    if (axis >= ndim()) return 0.0;
    const double n = cells[static_cast<std::size_t>(axis)];
    const double off = on_node(c, axis) ? 0.0 : 0.5;
    return (static_cast<double>(idx) + off - 0.5 * n) * dx();
  }

  /// Nearest index of component c to coordinate x along axis (clamped). Ties
  /// go to the sample closer to the origin so that mirrored coordinates snap
  /// to mirrored samples.
  std::size_t nearest_index(Component c, int axis, double x) const {
    if (axis >= ndim()) return 0;
    const double n = cells[static_cast<std::size_t>(axis)];
    const double off = on_node(c, axis) ? 0.0 : 0.5;
    const double f = x / dx() + 0.5 * n - off;
    const double lo = std::floor(f);
    long idx;
    if (f - lo < 0.5) {
      idx = static_cast<long>(lo);
    } else if (f - lo > 0.5) {
      idx = static_cast<long>(lo) + 1;
    } else {
      const double plo = std::abs(lo + off - 0.5 * n), phi = std::abs(lo + 1.0 + off - 0.5 * n);
      idx = static_cast<long>(lo) + (plo < phi ? 0 : 1);
    }
    const long hi = static_cast<long>(extent(c)[static_cast<std::size_t>(axis)]) - 1;
    return static_cast<std::size_t>(std::clamp(idx, 0L, hi));
  }

  /// Half-extent of the PML-free interior along an axis (lattice units).
  double interior_half_width(int axis) const {
    if (axis >= ndim()) return 0.0;
    const double n = cells[static_cast<std::size_t>(axis)];
    const double t = pml_enabled ? pml.thickness : 0.0;
    return (0.5 * n - t) * dx();
  }

  double cell_volume() const { return std::pow(dx(), ndim()); }
};

}  // namespace pcsim::fdtd
