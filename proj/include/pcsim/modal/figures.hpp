#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pcsim/core/array.hpp"
#include "pcsim/core/units.hpp"
#include "pcsim/fdtd/grid.hpp"

namespace pcsim::modal {

using cplx = std::complex<double>;

/// Energy-normalized mode volume: sum(eps |E|^2) dV / max(eps |E|^2).
/// `intensity` holds |E|^2 per cell, congruent with `eps`.
inline double mode_volume(const Array3<double>& intensity, const Array3<double>& eps, double cell_volume) {
  if (intensity.shape() != eps.shape()) throw std::invalid_argument("mode_volume: field and permittivity shapes differ");
  if (!(cell_volume > 0.0)) throw std::invalid_argument("mode_volume: cell volume must be positive");
  double sum = 0.0, peak = 0.0;
  for (std::size_t n = 0; n < intensity.size(); ++n) {
    const double u = eps.values()[n] * intensity.values()[n];
    if (!(u >= 0.0) || !std::isfinite(u)) throw std::invalid_argument("mode_volume: invalid energy density");
    sum += u;
    peak = std::max(peak, u);
  }
  if (peak == 0.0) throw std::invalid_argument("mode_volume: field is identically zero");
  return sum * cell_volume / peak;
}

/// Volume in units of (lambda/n)^d.
inline double mode_volume_in_cubic_wavelengths(double volume, double lambda, double n, int dims = 3) {
  return volume / std::pow(lambda / n, dims);
}

/// Cavity Purcell factor (3 / 4 pi^2) (lambda/n)^3 Q / V, with V in the same
/// length unit as lambda.
inline double purcell_factor(double Q, double V, double lambda, double n) {
  if (!(Q > 0.0) || !(V > 0.0) || !(lambda > 0.0) || !(n > 0.0))
    throw std::invalid_argument("purcell_factor: inputs must be positive");
  if (std::isinf(V)) return 0.0;
  const double l = lambda / n;
  return 3.0 / (4.0 * kPi * kPi) * (l * l * l) * Q / V;
}

struct EnhancementInput {
  double F_cav = 0.0;
  double F_PC = 0.0;
  double eta_or = 1.0;      // orientation/position overlap in [0, 1]
  double lambda = 1.0;
  double lambda_cav = 1.0;
  double Q = 1.0;

  void validate() const {
    if (!(F_cav >= 0.0)) throw std::invalid_argument("EnhancementInput: F_cav must be >= 0");
    if (!(F_PC >= 0.0)) throw std::invalid_argument("EnhancementInput: F_PC must be >= 0");
    if (!(eta_or >= 0.0 && eta_or <= 1.0)) throw std::invalid_argument("EnhancementInput: overlap must lie in [0, 1]");
    if (!(lambda > 0.0) || !(lambda_cav > 0.0) || !(Q > 0.0))
      throw std::invalid_argument("EnhancementInput: wavelengths and Q must be positive");
  }
};

/// (E(r) . mu / (|E_max| |mu|))^2 for real field and dipole vectors.
inline double orientation_overlap(const std::array<double, 3>& E, const std::array<double, 3>& mu, double E_max) {
  const double mu_n = std::sqrt(mu[0] * mu[0] + mu[1] * mu[1] + mu[2] * mu[2]);
  if (!(E_max > 0.0) || !(mu_n > 0.0)) throw std::invalid_argument("orientation_overlap: zero field or dipole");
  const double d = (E[0] * mu[0] + E[1] * mu[1] + E[2] * mu[2]) / (E_max * mu_n);
  return std::min(d * d, 1.0);
}

/// Lorentzian spectral factor 1 / (1 + 4 Q^2 (lambda/lambda_cav - 1)^2).
inline double lorentzian_factor(double lambda, double lambda_cav, double Q) {
  const double x = lambda / lambda_cav - 1.0;
  return 1.0 / (1.0 + 4.0 * Q * Q * x * x);
}

inline double rate_enhancement(const EnhancementInput& in) {
  in.validate();
  return in.F_cav * in.eta_or * lorentzian_factor(in.lambda, in.lambda_cav, in.Q) + in.F_PC;
}

struct DecayRate {
  double normalized = 0.0;  // rad per a/c
  double si = 0.0;          // 1/s
};

/// kappa = pi c / (lambda Q). `lambda` is normalized (units of a); the SI
/// value uses the unit anchor.
inline DecayRate cavity_decay_rate(double lambda, double Q, const UnitSystem& u = {}) {
  if (!(lambda > 0.0) || !(Q > 0.0)) throw std::invalid_argument("cavity_decay_rate: inputs must be positive");
  DecayRate k;
  k.normalized = kPi / (lambda * Q);
  k.si = kPi * kSpeedOfLight / (u.to_nm(lambda) * 1e-9 * Q);
  return k;
}

/// Same rate straight from a physical wavelength in nm.
inline double cavity_decay_rate_si(double lambda_nm, double Q) {
  if (!(lambda_nm > 0.0) || !(Q > 0.0)) throw std::invalid_argument("cavity_decay_rate: inputs must be positive");
  return kPi * kSpeedOfLight / (lambda_nm * 1e-9 * Q);
}

struct CouplingCheck {
  bool weak = true;
  double margin = std::numeric_limits<double>::infinity();  // kappa / |g|
};

inline CouplingCheck weak_coupling_check(double kappa, double g) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("weak_coupling_check: kappa must be >= 0");
  CouplingCheck c;
  const double ag = std::abs(g);
  c.weak = kappa > ag;
  c.margin = ag == 0.0 ? std::numeric_limits<double>::infinity() : kappa / ag;
  return c;
}

/// Tangential fields on a plane z = const at one frequency, sampled on a
/// uniform nx x ny grid (row-major, x outer) with spacing h.
struct PlaneField {
  double frequency = 0.0;
  double h = 0.0;
  std::size_t nx = 0, ny = 0;
  double x0 = 0.0, y0 = 0.0;  // coordinate of sample (0, 0)
  double z = 0.0;
  std::vector<cplx> Ex, Ey, Hx, Hy;
};

struct CollectionResult {
  double efficiency = 0.0;
  double upward_power = 0.0;
  double collected_power = 0.0;
};

/// Plane-wave decomposition of the plane field; efficiency is the upward
/// power inside |k_par| <= NA k0 over that inside |k_par| <= k0.
inline CollectionResult collection_efficiency(const PlaneField& p, double NA, int oversample = 8) {
  if (!(NA > 0.0 && NA <= 1.0)) throw std::invalid_argument("collection_efficiency: NA must lie in (0, 1]");
  const std::size_t n = p.nx * p.ny;
  if (n == 0 || p.Ex.size() != n || p.Ey.size() != n || p.Hx.size() != n || p.Hy.size() != n)
    throw std::invalid_argument("collection_efficiency: inconsistent plane field");
  if (!(p.frequency > 0.0) || !(p.h > 0.0)) throw std::invalid_argument("collection_efficiency: bad sampling");
  const double k0 = 2.0 * kPi * p.frequency;
  const double Lx = p.h * static_cast<double>(p.nx), Ly = p.h * static_cast<double>(p.ny);
  const double dk = 2.0 * kPi / (static_cast<double>(oversample) * std::max(Lx, Ly));
  const int nk = static_cast<int>(std::ceil(k0 / dk));
  const std::size_t K = static_cast<std::size_t>(2 * nk + 1);
  std::vector<double> kv(K);
  for (std::size_t a = 0; a < K; ++a) kv[a] = (static_cast<double>(a) - nk) * dk;

  // Separable DFT: x first for every row, then y.
  std::vector<cplx> px(p.nx * K), py(p.ny * K);
  for (std::size_t i = 0; i < p.nx; ++i)
    for (std::size_t a = 0; a < K; ++a) px[i * K + a] = std::polar(1.0, -kv[a] * (p.x0 + static_cast<double>(i) * p.h));
  for (std::size_t j = 0; j < p.ny; ++j)
    for (std::size_t b = 0; b < K; ++b) py[j * K + b] = std::polar(1.0, -kv[b] * (p.y0 + static_cast<double>(j) * p.h));
  auto transform = [&](const std::vector<cplx>& f) {
    std::vector<cplx> tmp(K * p.ny, cplx{}), out(K * K, cplx{});
    for (std::size_t i = 0; i < p.nx; ++i)
      for (std::size_t j = 0; j < p.ny; ++j) {
        const cplx v = f[i * p.ny + j];
        if (v == cplx{}) continue;
        for (std::size_t a = 0; a < K; ++a) tmp[a * p.ny + j] += v * px[i * K + a];
      }
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t j = 0; j < p.ny; ++j) {
        const cplx v = tmp[a * p.ny + j];
        for (std::size_t b = 0; b < K; ++b) out[a * K + b] += v * py[j * K + b];
      }
    return out;
  };
  const auto ex = transform(p.Ex), ey = transform(p.Ey), hx = transform(p.Hx), hy = transform(p.Hy);
  CollectionResult r;
  const double kna = NA * k0;
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = 0; b < K; ++b) {
      const double kk = std::hypot(kv[a], kv[b]);
      if (kk > k0) continue;
      const std::size_t m = a * K + b;
      const double s = 0.5 * std::real(ex[m] * std::conj(hy[m]) - ey[m] * std::conj(hx[m]));
      r.upward_power += s;
      if (kk <= kna) r.collected_power += s;
    }
  if (!(r.upward_power > 0.0)) throw std::invalid_argument("collection_efficiency: no upward propagating power");
  r.efficiency = std::clamp(r.collected_power / r.upward_power, 0.0, 1.0);
  return r;
}

/// Rejects a plane that sits inside the absorbing layers of grid g.
inline void check_plane_in_interior(const PlaneField& p, const fdtd::GridSpec& g) {
  if (g.dim != fdtd::Dimensionality::Full3D) throw std::invalid_argument("collection_efficiency: needs a 3D grid");
  if (std::abs(p.z) >= g.interior_half_width(2)) throw std::invalid_argument("collection_efficiency: plane lies inside the PML");
  const double xe = p.x0 + p.h * static_cast<double>(p.nx - 1), ye = p.y0 + p.h * static_cast<double>(p.ny - 1);
  if (std::abs(p.x0) > g.interior_half_width(0) || std::abs(xe) > g.interior_half_width(0) ||
      std::abs(p.y0) > g.interior_half_width(1) || std::abs(ye) > g.interior_half_width(1))
    throw std::invalid_argument("collection_efficiency: plane extends into the PML");
}

}  // namespace pcsim::modal
