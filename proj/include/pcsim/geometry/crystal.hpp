#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcsim/fdtd/grid.hpp"

namespace pcsim::geometry {

/// Per-hole modification, addressed by triangular-lattice indices (i, j):
/// row j sits at y = j * sqrt(3)/2 * a, odd rows are offset by a/2 in x.
struct HoleOverride {
  int i = 0;
  int j = 0;
  double dx = 0.0;
  double dy = 0.0;
  std::optional<double> radius;
  bool remove = false;

  bool operator==(const HoleOverride&) const = default;
};

struct Hole {
  int i = 0;
  int j = 0;
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
};

/// Triangular lattice of air holes in a dielectric slab. All lengths are in
/// units of the lattice constant; `a` is carried for serialization and must
/// stay 1 in the normalized unit system.
struct PhotonicCrystalSpec {
  double a = 1.0;
  double r = 0.3;
  double d = 0.65;       // slab thickness, 3D only
  double n = 3.6;        // slab index for 3D runs
  double n_eff = 2.65;   // effective index used by 2D-TE runs
  int periods_x = 9;
  int periods_y = 9;
  std::vector<HoleOverride> overrides;

  bool operator==(const PhotonicCrystalSpec&) const = default;

  static constexpr double row_pitch() { return 0.86602540378443864676; }  // sqrt(3)/2

  double slab_index(fdtd::Dimensionality dim) const { return dim == fdtd::Dimensionality::TE2D ? n_eff : n; }

  bool has_defect() const {
    for (const auto& o : overrides)
      if (o.remove) return true;
    return false;
  }

  int max_i() const { return (periods_x - 1) / 2; }
  int max_j() const { return (periods_y - 1) / 2; }

  static double lattice_x(int i, int j) { return static_cast<double>(i) + ((j & 1) ? 0.5 : 0.0); }
  static double lattice_y(int j) { return static_cast<double>(j) * row_pitch(); }

  /// Whether lattice site (i, j) belongs to the crystal patch.
  bool contains_site(int i, int j) const {
    if (std::abs(j) > max_j()) return false;
    return std::abs(lattice_x(i, j)) <= static_cast<double>(max_i()) + 1e-9;
  }

  /// Half-extents of the patch including hole radii.
  double half_extent_x() const { return max_i() + r; }
  double half_extent_y() const { return max_j() * row_pitch() + r; }

  /// Collects every invariant violation; empty when the spec is valid.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (std::abs(a - 1.0) > 1e-12) out.push_back("lattice.a: must be 1 (normalized units)");
    if (!(r >= 0.0 && r < 0.5 * a)) out.push_back("lattice.r: requires 0 <= r < a/2 (holes must not overlap)");
    if (!(n > 1.0)) out.push_back("slab.n: must exceed 1");
    if (!(n_eff > 1.0)) out.push_back("slab.n_eff: must exceed 1");
    if (!(d > 0.0)) out.push_back("slab.d: must be positive");
    if (periods_x < 1 || periods_x % 2 == 0) out.push_back("lattice.periods[0]: must be a positive odd count");
    if (periods_y < 1 || periods_y % 2 == 0) out.push_back("lattice.periods[1]: must be a positive odd count");
    for (std::size_t k = 0; k < overrides.size(); ++k) {
      const auto& o = overrides[k];
      const std::string tag = "defect.overrides[" + std::to_string(k) + "]";
      if (periods_x >= 1 && periods_y >= 1 && !contains_site(o.i, o.j)) {
        out.push_back(tag + ": lattice site outside the crystal extent");
        continue;
      }
      const double x = lattice_x(o.i, o.j) + o.dx;
      const double y = lattice_y(o.j) + o.dy;
      if (std::abs(x) > max_i() + 1e-9 || std::abs(y) > max_j() * row_pitch() + 1e-9)
        out.push_back(tag + ": shifted position lies outside the crystal extent");
      if (o.radius && !(*o.radius >= 0.0 && *o.radius < 0.5 * a))
        out.push_back(tag + ": radius override requires 0 <= r < a/2");
    }
    return out;
  }

  void validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid photonic crystal spec:";
    for (const auto& s : v) msg += "\n  " + s;
    throw std::invalid_argument(msg);
  }

  /// Hole list after overrides; removed holes are omitted.
  std::vector<Hole> holes() const {
    std::vector<Hole> out;
    for (int j = -max_j(); j <= max_j(); ++j) {
      for (int i = -max_i() - 1; i <= max_i() + 1; ++i) {
        if (!contains_site(i, j)) continue;
        Hole h{i, j, lattice_x(i, j), lattice_y(j), r};
        bool removed = false;
        for (const auto& o : overrides) {
          if (o.i != i || o.j != j) continue;
          if (o.remove) removed = true;
          h.x += o.dx;
          h.y += o.dy;
          if (o.radius) h.r = *o.radius;
        }
        if (!removed && h.r > 0.0) out.push_back(h);
      }
    }
    return out;
  }
};

/// Outward shift applied to the two nearest holes along x when forming the
/// default cavity. Placeholder for the unpublished fabrication tweak.
inline constexpr double kDefaultCavityShift = 0.05;

/// Removes the central hole and shifts its two x-axis neighbours outward.
inline PhotonicCrystalSpec make_single_defect_cavity(const PhotonicCrystalSpec& base,
                                                     double shift = kDefaultCavityShift) {
  base.validate();
  if (base.has_defect()) throw std::invalid_argument("make_single_defect_cavity: spec already has a defect");
  if (base.periods_x < 3) throw std::invalid_argument("make_single_defect_cavity: need at least 3 periods along x");
  PhotonicCrystalSpec out = base;
  out.overrides.push_back(HoleOverride{0, 0, 0.0, 0.0, std::nullopt, true});
  out.overrides.push_back(HoleOverride{1, 0, shift, 0.0, std::nullopt, false});
  out.overrides.push_back(HoleOverride{-1, 0, -shift, 0.0, std::nullopt, false});
  out.validate();
  return out;
}

}  // namespace pcsim::geometry
