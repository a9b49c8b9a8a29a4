#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcsim/core/array.hpp"
#include "pcsim/fdtd/grid.hpp"
#include "pcsim/fdtd/simulation.hpp"
#include "pcsim/geometry/crystal.hpp"
#include "pcsim/geometry/serialize.hpp"

namespace pcsim::geometry {

using fdtd::Component;
using fdtd::Dimensionality;
using fdtd::GridSpec;

/// Simulation domain around a crystal patch: `padding` of slab material (2D)
/// or membrane (3D) beyond the outermost holes, `air_z` of air above and below
/// the slab in 3D.
struct DomainSpec {
  Dimensionality dim = Dimensionality::TE2D;
  double resolution = 20.0;
  double padding = 1.0;
  double air_z = 1.0;
  double courant = 0.5;
  fdtd::PmlSpec pml{};

  static DomainSpec defaults(Dimensionality dim) {
    DomainSpec d;
    d.dim = dim;
    d.resolution = dim == Dimensionality::TE2D ? 20.0 : 12.0;
    return d;
  }
};

inline constexpr int kSubsamples = 16;

struct MaterialMap {
  GridSpec grid;
  fdtd::EpsilonArrays eps;     // at the Ex, Ey (, Ez) sample locations
  Array3<double> eps_cell;     // at cell centers, for export and mode volumes
  double eps_max = 1.0;        // slab permittivity n^2
  std::string spec_hash;
  double resolution = 0.0;
  std::string smoothing = "area-fraction-16";
};

inline GridSpec make_grid(const PhotonicCrystalSpec& s, const DomainSpec& d) {
  if (d.resolution < 8.0) throw std::invalid_argument("rasterize: resolution must be >= 8 cells per a");
  std::array<double, 3> size{2.0 * (s.half_extent_x() + d.padding), 2.0 * (s.half_extent_y() + d.padding),
                             d.dim == Dimensionality::Full3D ? s.d + 2.0 * d.air_z : 0.0};
  // Even cell counts keep a node at the origin on every axis.
  for (auto& v : size) v = 2.0 * std::ceil(0.5 * v * d.resolution) / d.resolution;
  auto g = GridSpec::for_domain(d.dim, size, d.resolution, d.pml, true, d.courant);
  g.validate();
  return g;
}

namespace detail {

/// Hole lookup by lattice indices.
class HoleTable {
 public:
  explicit HoleTable(const PhotonicCrystalSpec& s) : mi_(s.max_i() + 2), mj_(s.max_j()) {
    table_.assign(static_cast<std::size_t>((2 * mi_ + 1) * (2 * mj_ + 1)), std::nullopt);
    for (const auto& h : s.holes()) table_[slot(h.i, h.j)] = h;
    for (const auto& h : s.holes()) reach_ = std::max(reach_, std::hypot(h.x - PhotonicCrystalSpec::lattice_x(h.i, h.j),
                                                                         h.y - PhotonicCrystalSpec::lattice_y(h.j)) + h.r);
  }

  template <class F>
  void for_candidates(double x, double y, double half, F&& f) const {
    const double pitch = PhotonicCrystalSpec::row_pitch();
    const int span_j = static_cast<int>(std::ceil((reach_ + half) / pitch)) ;
    const int j0 = static_cast<int>(std::lround(y / pitch));
    for (int j = std::max(j0 - span_j, -mj_); j <= std::min(j0 + span_j, mj_); ++j) {
      const double off = (j & 1) ? 0.5 : 0.0;
      const int span_i = static_cast<int>(std::ceil(reach_ + half)) ;
      const int i0 = static_cast<int>(std::lround(x - off));
      for (int i = std::max(i0 - span_i, -mi_); i <= std::min(i0 + span_i, mi_); ++i) {
        const auto& h = table_[slot(i, j)];
        if (h) f(*h);
      }
    }
  }

 private:
  std::size_t slot(int i, int j) const {
    return static_cast<std::size_t>((j + mj_) * (2 * mi_ + 1) + (i + mi_));
  }
  int mi_, mj_;
  double reach_ = 0.0;
  std::vector<std::optional<Hole>> table_;
};

/// Number of the kSubsamples^2 points of the square centered at (x, y) with
/// side h that fall inside any hole. Symmetric sample offsets keep mirrored
/// squares giving identical counts.
inline int air_count(const HoleTable& tab, double x, double y, double h) {
  const double half = 0.5 * h;
  std::vector<const Hole*> partial;
  bool full = false;
  tab.for_candidates(x, y, half, [&](const Hole& hole) {
    if (full) return;
    const double ax = std::abs(x - hole.x), ay = std::abs(y - hole.y);
    const double nx = std::max(ax - half, 0.0), ny = std::max(ay - half, 0.0);
    if (nx * nx + ny * ny >= hole.r * hole.r) return;
    const double fx = ax + half, fy = ay + half;
    if (fx * fx + fy * fy <= hole.r * hole.r) {
      full = true;
      return;
    }
    partial.push_back(&hole);
  });
  constexpr int N = kSubsamples;
  if (full) return N * N;
  if (partial.empty()) return 0;
  int count = 0;
  for (int a = 0; a < N; ++a) {
    const double px = x + ((a + 0.5) / N - 0.5) * h;
    for (int b = 0; b < N; ++b) {
      const double py = y + ((b + 0.5) / N - 0.5) * h;
      for (const Hole* hole : partial) {
        const double ddx = px - hole->x, ddy = py - hole->y;
        if (ddx * ddx + ddy * ddy < hole->r * hole->r) {
          ++count;
          break;
        }
      }
    }
  }
  return count;
}

/// Number of kSubsamples points of the z-interval centered at z with width h
/// that lie inside the slab |z| < d/2.
inline int slab_count(double z, double h, double d) {
  int count = 0;
  for (int c = 0; c < kSubsamples; ++c) {
    const double pz = z + ((c + 0.5) / kSubsamples - 0.5) * h;
    if (std::abs(pz) < 0.5 * d) ++count;
  }
  return count;
}

inline double mix(double eps_slab, long long dielectric, long long total) {
  if (dielectric == 0) return 1.0;
  if (dielectric == total) return eps_slab;
  return 1.0 + (eps_slab - 1.0) * static_cast<double>(dielectric) / static_cast<double>(total);
}

}  // namespace detail

/// Area-fraction rasterization of the crystal onto an existing grid. Holes
/// exist only inside the crystal patch; outside it the slab continues.
inline MaterialMap rasterize(const PhotonicCrystalSpec& s, const GridSpec& g) {
  s.validate();
  g.validate();
  if (g.resolution < 8.0) throw std::invalid_argument("rasterize: resolution must be >= 8 cells per a");
  const double n = s.slab_index(g.dim);
  const double eps_slab = n * n;
  const bool three_d = g.dim == Dimensionality::Full3D;
  const double h = g.dx();
  detail::HoleTable tab(s);

  auto value_at = [&](double x, double y, double z) {
    const long long air = detail::air_count(tab, x, y, h);
    constexpr long long A = kSubsamples * kSubsamples;
    if (!three_d) return detail::mix(eps_slab, A - air, A);
    const long long zc = detail::slab_count(z, h, s.d);
    return detail::mix(eps_slab, (A - air) * zc, A * kSubsamples);
  };

  MaterialMap m;
  m.grid = g;
  m.eps_max = eps_slab;
  m.resolution = g.resolution;
  m.spec_hash = spec_hash(s);
  const int ncomp = three_d ? 3 : 2;
  for (int c = 0; c < ncomp; ++c) {
    const auto comp = static_cast<Component>(c);
    Array3<double> arr(g.extent(comp));
    const auto sh = arr.shape();
    for (std::size_t i = 0; i < sh[0]; ++i) {
      const double x = g.coordinate(comp, 0, i);
      for (std::size_t j = 0; j < sh[1]; ++j) {
        const double y = g.coordinate(comp, 1, j);
        for (std::size_t k = 0; k < sh[2]; ++k) arr(i, j, k) = value_at(x, y, g.coordinate(comp, 2, k));
      }
    }
    m.eps[static_cast<std::size_t>(c)] = std::move(arr);
  }
  // Cell centers sit at half positions on every active axis, which is where
  // Hz lives in 2D and where no component lives in 3D.
  const Shape3 cs{static_cast<std::size_t>(g.cells[0]), static_cast<std::size_t>(g.cells[1]),
                  static_cast<std::size_t>(g.cells[2])};
  m.eps_cell = Array3<double>(cs);
  for (std::size_t i = 0; i < cs[0]; ++i) {
    const double x = g.coordinate(Component::Ex, 0, i);
    for (std::size_t j = 0; j < cs[1]; ++j) {
      const double y = g.coordinate(Component::Ey, 1, j);
      for (std::size_t k = 0; k < cs[2]; ++k)
        m.eps_cell(i, j, k) = value_at(x, y, three_d ? g.coordinate(Component::Ez, 2, k) : 0.0);
    }
  }
  return m;
}

inline MaterialMap rasterize(const PhotonicCrystalSpec& s, const DomainSpec& d) { return rasterize(s, make_grid(s, d)); }

inline MaterialMap rasterize(const PhotonicCrystalSpec& s, double resolution,
                             Dimensionality dim = Dimensionality::TE2D) {
  auto d = DomainSpec::defaults(dim);
  d.resolution = resolution;
  return rasterize(s, d);
}

/// Uniform medium on the same grid; the bulk reference for rate ratios.
inline MaterialMap homogeneous(const GridSpec& g, double eps) {
  if (!(eps >= 1.0) || !std::isfinite(eps)) throw std::invalid_argument("homogeneous: permittivity must be >= 1");
  MaterialMap m;
  m.grid = g;
  m.eps = fdtd::uniform_epsilon(g, eps);
  m.eps_cell = Array3<double>({static_cast<std::size_t>(g.cells[0]), static_cast<std::size_t>(g.cells[1]),
                               static_cast<std::size_t>(g.cells[2])},
                              eps);
  m.eps_max = eps;
  m.resolution = g.resolution;
  m.spec_hash = io::sha256_hex("homogeneous:" + std::to_string(eps));
  m.smoothing = "none";
  return m;
}

}  // namespace pcsim::geometry
