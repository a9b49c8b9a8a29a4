#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pcsim/fdtd/grid.hpp"

namespace pcsim::fdtd {

/// Per-axis CPML coefficients at node and half-node positions. Along an axis
/// with N cells and L PML cells, the graded layers occupy node indices
/// [0, L) and (N-L, N], half indices [0, L) and [N-L, N).
struct PmlAxisProfile {
  int layers = 0;
  std::size_t cells = 0;
  std::vector<double> b_node, c_node, kinv_node;  // kinv = 1/kappa - 1
  std::vector<double> b_half, c_half, kinv_half;

  bool active() const { return layers > 0; }

  /// Slab-local index for a position index, or -1 outside the graded layers.
  long slab_index(std::size_t idx, bool node) const {
    const auto L = static_cast<std::size_t>(layers);
    if (idx < L) return static_cast<long>(idx);
    const std::size_t hi_start = node ? cells - L + 1 : cells - L;
    if (idx >= hi_start) return static_cast<long>(L + (idx - hi_start));
    return -1;
  }

  static PmlAxisProfile make(const PmlSpec& spec, std::size_t ncells, double dx, double dt, double n_ref) {
    PmlAxisProfile p;
    p.layers = spec.thickness;
    p.cells = ncells;
    const double L = spec.thickness;
    const double thickness = L * dx;
    const double sigma_max = -(spec.order + 1.0) * std::log(spec.reflection) / (2.0 * n_ref * thickness);
    auto coeffs = [&](double pos, double& b, double& c, double& kinv) {
      const double depth = std::max({L - pos, pos - (static_cast<double>(ncells) - L), 0.0}) / L;
      if (depth <= 0.0) {
        b = 1.0;
        c = 0.0;
        kinv = 0.0;
        return;
      }
      const double g = std::pow(depth, spec.order);
      const double sigma = sigma_max * g;
      const double kappa = 1.0 + (spec.kappa_max - 1.0) * g;
      const double alpha = spec.alpha_max * (1.0 - depth);
      b = std::exp(-(sigma / kappa + alpha) * dt);
      c = sigma / (sigma * kappa + kappa * kappa * alpha) * (b - 1.0);
      kinv = 1.0 / kappa - 1.0;
    };
    const auto Ls = static_cast<std::size_t>(spec.thickness);
    p.b_node.resize(2 * Ls);
    p.c_node.resize(2 * Ls);
    p.kinv_node.resize(2 * Ls);
    p.b_half.resize(2 * Ls);
    p.c_half.resize(2 * Ls);
    p.kinv_half.resize(2 * Ls);
    for (std::size_t s = 0; s < 2 * Ls; ++s) {
      const double node_pos = s < Ls ? static_cast<double>(s) : static_cast<double>(ncells - Ls + 1 + (s - Ls));
      const double half_pos = (s < Ls ? static_cast<double>(s) : static_cast<double>(ncells - Ls + (s - Ls))) + 0.5;
      coeffs(node_pos, p.b_node[s], p.c_node[s], p.kinv_node[s]);
      coeffs(half_pos, p.b_half[s], p.c_half[s], p.kinv_half[s]);
    }
    return p;
  }
};

}  // namespace pcsim::fdtd
