#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcsim/core/array.hpp"
#include "pcsim/fdtd/grid.hpp"
#include "pcsim/fdtd/monitors.hpp"
#include "pcsim/fdtd/pml.hpp"
#include "pcsim/fdtd/waveform.hpp"

namespace pcsim::fdtd {

/// Relative permittivity sampled at the Ex, Ey, Ez locations. Ez is left empty
/// for 2D-TE grids.
using EpsilonArrays = std::array<Array3<double>, 3>;

inline EpsilonArrays uniform_epsilon(const GridSpec& g, double eps) {
  EpsilonArrays out;
  const int ncomp = g.dim == Dimensionality::TE2D ? 2 : 3;
  for (int c = 0; c < ncomp; ++c)
    out[static_cast<std::size_t>(c)] = Array3<double>(g.extent(static_cast<Component>(c)), eps);
  return out;
}

/// Soft current source on a single Yee sample. `moment` is the current moment
/// I = J * dV, so the injected current density is moment * waveform(t) / dV.
struct PointCurrent {
  Component component = Component::Ex;
  Index3 index{};
  Waveform waveform{};
  double moment = 1.0;
  std::vector<double> dft_frequencies;
};

/// Yee-lattice Maxwell solver (normalized units c = eps0 = mu0 = 1). One call
/// to step() advances H by a half step, then E by a full step with the soft
/// sources applied at the half step in between.
template <class Real = float>
class Simulation {
 public:
  using Field = Array3<Real>;

  explicit Simulation(const GridSpec& spec) : Simulation(spec, uniform_epsilon(spec, 1.0)) {}

  Simulation(const GridSpec& spec, const EpsilonArrays& eps) : spec_(spec) {
    spec_.validate();
    dx_ = spec_.dx();
    dt_ = spec_.dt();
    for (int c = 0; c < 6; ++c) {
      const auto comp = static_cast<Component>(c);
      if (has(comp)) fields_[static_cast<std::size_t>(c)] = Field(spec_.extent(comp));
    }
    set_epsilon(eps);
    build_terms();
  }

  const GridSpec& spec() const noexcept { return spec_; }
  double dt() const noexcept { return dt_; }
  double dx() const noexcept { return dx_; }
  long time_step() const noexcept { return step_; }
  double time() const noexcept { return static_cast<double>(step_) * dt_; }

  bool has(Component c) const noexcept {
    if (spec_.dim == Dimensionality::Full3D) return true;
    return c == Component::Ex || c == Component::Ey || c == Component::Hz;
  }

  std::vector<Component> components() const {
    std::vector<Component> out;
    for (int c = 0; c < 6; ++c)
      if (has(static_cast<Component>(c))) out.push_back(static_cast<Component>(c));
    return out;
  }

  Field& field(Component c) {
    require(c);
    return fields_[static_cast<std::size_t>(c)];
  }
  const Field& field(Component c) const {
    require(c);
    return fields_[static_cast<std::size_t>(c)];
  }

  const Array3<Real>& epsilon(Component c) const {
    if (!is_electric(c)) throw std::invalid_argument("epsilon is defined on E components only");
    require(c);
    return eps_[static_cast<std::size_t>(c)];
  }

  void set_epsilon(const EpsilonArrays& eps) {
    double boundary_sum = 0.0;
    std::size_t boundary_count = 0;
    for (int c = 0; c < 3; ++c) {
      const auto comp = static_cast<Component>(c);
      if (!has(comp)) continue;
      const auto& src = eps[static_cast<std::size_t>(c)];
      if (src.shape() != spec_.extent(comp))
        throw std::invalid_argument("permittivity array shape does not match " + std::string(to_string(comp)));
      auto& e = eps_[static_cast<std::size_t>(c)];
      auto& ce = ce_[static_cast<std::size_t>(c)];
      e = Array3<Real>(src.shape());
      ce = Array3<Real>(src.shape());
      for (std::size_t n = 0; n < src.size(); ++n) {
        const double v = src.values()[n];
        if (!std::isfinite(v) || v < 1.0)
          throw std::invalid_argument("relative permittivity must be finite and >= 1");
        e.values()[n] = static_cast<Real>(v);
        ce.values()[n] = static_cast<Real>(dt_ / (v * dx_));
      }
      const auto s = src.shape();
      for (std::size_t i = 0; i < s[0]; ++i)
        for (std::size_t j = 0; j < s[1]; ++j)
          for (std::size_t k = 0; k < s[2]; ++k) {
            const bool edge = i == 0 || i + 1 == s[0] || j == 0 || j + 1 == s[1] ||
                              (spec_.ndim() == 3 && (k == 0 || k + 1 == s[2]));
            if (edge) {
              boundary_sum += src(i, j, k);
              ++boundary_count;
            }
          }
    }
    pml_ref_index_ = boundary_count ? std::sqrt(boundary_sum / static_cast<double>(boundary_count)) : 1.0;
    build_pml_profiles();
  }

  std::size_t add_source(PointCurrent src) {
    require(src.component);
    if (!is_electric(src.component)) throw std::invalid_argument("sources must drive an E component");
    const auto ext = spec_.extent(src.component);
    for (int a = 0; a < 3; ++a)
      if (src.index[static_cast<std::size_t>(a)] >= ext[static_cast<std::size_t>(a)])
        throw std::out_of_range("source index outside the grid");
    src.waveform.validate();
    SourceRecord rec;
    rec.frequencies = src.dft_frequencies;
    rec.e_dft.assign(rec.frequencies.size(), cplx{});
    rec.i_dft.assign(rec.frequencies.size(), cplx{});
    sources_.push_back(std::move(src));
    source_records_.push_back(std::move(rec));
    return sources_.size() - 1;
  }

  std::size_t add_probe(Component c, Index3 idx) {
    require(c);
    const auto ext = spec_.extent(c);
    for (int a = 0; a < 3; ++a)
      if (idx[static_cast<std::size_t>(a)] >= ext[static_cast<std::size_t>(a)])
        throw std::out_of_range("probe index outside the grid");
    ProbeRecord p;
    p.component = c;
    p.index = idx;
    probes_.push_back(std::move(p));
    return probes_.size() - 1;
  }

  std::size_t add_flux(const FluxBox& box, std::vector<double> frequencies = {}, bool keep_series = false) {
    if (!box.inside_interior(spec_)) throw std::out_of_range("flux box must lie strictly inside the PML-free interior");
    FluxRecord rec;
    rec.box = box;
    rec.frequencies = std::move(frequencies);
    build_flux_samples(rec);
    rec.e_prev.assign(rec.samples.size(), 0.0);
    rec.e_dft.assign(rec.samples.size() * rec.frequencies.size(), cplx{});
    rec.h_dft.assign(rec.samples.size() * rec.frequencies.size(), cplx{});
    flux_keep_series_.push_back(keep_series);
    fluxes_.push_back(std::move(rec));
    return fluxes_.size() - 1;
  }

  /// Running DFT of the listed components over [lo, hi) in each component's
  /// own index space (clamped to the extents).
  std::size_t add_dft(const std::vector<Component>& comps, std::array<std::size_t, 3> lo,
                      std::array<std::size_t, 3> hi, std::vector<double> frequencies) {
    DftRecord rec;
    rec.frequencies = std::move(frequencies);
    for (auto c : comps) {
      require(c);
      DftRecord::Part part;
      part.component = c;
      const auto ext = spec_.extent(c);
      for (std::size_t a = 0; a < 3; ++a) {
        part.lo[a] = std::min(lo[a], ext[a]);
        part.hi[a] = std::min(hi[a], ext[a]);
        if (part.hi[a] <= part.lo[a]) throw std::out_of_range("empty DFT region");
      }
      part.data.assign(part.count() * rec.frequencies.size(), cplx{});
      rec.parts.push_back(std::move(part));
    }
    dfts_.push_back(std::move(rec));
    return dfts_.size() - 1;
  }

  const ProbeRecord& probe(std::size_t id) const { return probes_.at(id); }
  const FluxRecord& flux(std::size_t id) const { return fluxes_.at(id); }
  const DftRecord& dft(std::size_t id) const { return dfts_.at(id); }
  const SourceRecord& source_record(std::size_t id) const { return source_records_.at(id); }
  const std::vector<PointCurrent>& sources() const { return sources_; }

  /// Latest time at which any source is nonzero.
  double sources_end_time() const {
    double t = 0.0;
    for (const auto& s : sources_) t = std::max(t, s.waveform.end_time());
    return t;
  }

  /// Enables the exactly-conserved leapfrog energy 1/2 sum(eps E^n E^{n+1} + H^2),
  /// evaluated at each half step.
  void track_energy(bool on) { track_energy_ = on; }
  double leapfrog_energy() const { return leapfrog_energy_; }

  /// 1/2 sum(eps E^2 + H^2) dV with E at the current integer step and H at the
  /// preceding half step.
  double field_energy() const {
    double total = 0.0;
    for (int c = 0; c < 6; ++c) {
      const auto comp = static_cast<Component>(c);
      if (!has(comp)) continue;
      const auto& f = fields_[static_cast<std::size_t>(c)].values();
      double s = 0.0;
      if (is_electric(comp)) {
        const auto& e = eps_[static_cast<std::size_t>(c)].values();
        for (std::size_t n = 0; n < f.size(); ++n) s += static_cast<double>(e[n]) * f[n] * f[n];
      } else {
        for (auto v : f) s += static_cast<double>(v) * v;
      }
      total += s;
    }
    return 0.5 * total * spec_.cell_volume();
  }

  /// Same as field_energy() restricted to samples with lo < x < hi on every
  /// active axis.
  double field_energy_in(std::array<double, 3> lo, std::array<double, 3> hi) const {
    double total = 0.0;
    for (int c = 0; c < 6; ++c) {
      const auto comp = static_cast<Component>(c);
      if (!has(comp)) continue;
      const auto& f = fields_[static_cast<std::size_t>(c)];
      const auto s = f.shape();
      std::array<std::vector<char>, 3> in;
      for (int a = 0; a < 3; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        in[ua].resize(s[ua]);
        for (std::size_t i = 0; i < s[ua]; ++i) {
          const double x = spec_.coordinate(comp, a, i);
          in[ua][i] = a >= spec_.ndim() || (x > lo[ua] && x < hi[ua]);
        }
      }
      const auto* e = is_electric(comp) ? &eps_[static_cast<std::size_t>(c)] : nullptr;
      double sum = 0.0;
      for (std::size_t i = 0; i < s[0]; ++i) {
        if (!in[0][i]) continue;
        for (std::size_t j = 0; j < s[1]; ++j) {
          if (!in[1][j]) continue;
          for (std::size_t k = 0; k < s[2]; ++k) {
            if (!in[2][k]) continue;
            const double v = f(i, j, k);
            sum += (e ? static_cast<double>((*e)(i, j, k)) : 1.0) * v * v;
          }
        }
      }
      total += sum;
    }
    return 0.5 * total * spec_.cell_volume();
  }

  void step() {
    update_h();
    const double t_half = (static_cast<double>(step_) + 0.5) * dt_;
    if (track_energy_) {
      for (int c = 0; c < 3; ++c)
        if (has(static_cast<Component>(c))) e_copy_[static_cast<std::size_t>(c)] = fields_[static_cast<std::size_t>(c)];
    }
    for (auto& fr : fluxes_)
      for (std::size_t s = 0; s < fr.samples.size(); ++s)
        fr.e_prev[s] = static_cast<double>(fields_[static_cast<std::size_t>(fr.samples[s].e)].values()[fr.samples[s].e_idx]);
    std::vector<double> e_before(sources_.size());
    for (std::size_t s = 0; s < sources_.size(); ++s) {
      const auto& src = sources_[s];
      e_before[s] = static_cast<double>(field(src.component)(src.index[0], src.index[1], src.index[2]));
    }

    update_e();

    const double dv = spec_.cell_volume();
    for (std::size_t s = 0; s < sources_.size(); ++s) {
      const auto& src = sources_[s];
      const double current = src.moment * src.waveform(t_half);
      auto& f = field(src.component);
      const auto ci = static_cast<std::size_t>(src.component);
      const std::size_t idx = f.index(src.index[0], src.index[1], src.index[2]);
      if (current != 0.0) {
        const double coef = static_cast<double>(ce_[ci].values()[idx]) * dx_;
        f.values()[idx] = static_cast<Real>(static_cast<double>(f.values()[idx]) - coef * current / dv);
      }
      const double e_avg = 0.5 * (e_before[s] + static_cast<double>(f.values()[idx]));
      auto& rec = source_records_[s];
      rec.work -= e_avg * current * dt_;
      for (std::size_t k = 0; k < rec.frequencies.size(); ++k) {
        const cplx ph = std::polar(dt_, 2.0 * kPi * rec.frequencies[k] * t_half);
        rec.e_dft[k] += e_avg * ph;
        rec.i_dft[k] += current * ph;
      }
    }

    if (track_energy_) {
      double ee = 0.0, hh = 0.0;
      for (int c = 0; c < 3; ++c) {
        if (!has(static_cast<Component>(c))) continue;
        const auto& a = e_copy_[static_cast<std::size_t>(c)].values();
        const auto& b = fields_[static_cast<std::size_t>(c)].values();
        const auto& e = eps_[static_cast<std::size_t>(c)].values();
        for (std::size_t n = 0; n < a.size(); ++n) ee += static_cast<double>(e[n]) * a[n] * b[n];
      }
      for (int c = 3; c < 6; ++c) {
        if (!has(static_cast<Component>(c))) continue;
        for (auto v : fields_[static_cast<std::size_t>(c)].values()) hh += static_cast<double>(v) * v;
      }
      leapfrog_energy_ = 0.5 * (ee + hh) * dv;
    }

    record_fluxes(t_half);
    ++step_;
    record_probes();
    record_dfts();
  }

  void run(long n_steps) {
    if (n_steps < 1) throw std::invalid_argument("run: n_steps must be >= 1");
    for (long n = 0; n < n_steps; ++n) step();
  }

  /// Steps until all sources are off and the field energy has dropped below
  /// `rel_threshold` times its post-source maximum, or until `max_time`.
  /// Returns true when the decay criterion was met.
  bool run_until_decayed(double rel_threshold, double max_time, long check_every = 50) {
    const double t_off = sources_end_time();
    double peak = 0.0;
    while (time() < max_time) {
      for (long n = 0; n < check_every; ++n) step();
      if (time() < t_off) continue;
      const double u = field_energy();
      peak = std::max(peak, u);
      if (peak == 0.0 || u <= rel_threshold * peak) return true;
    }
    return false;
  }

 private:
  struct Term {
    Component target;
    Component source;
    int axis;
    Real sign;
  };

  struct PmlTerm {
    Term term;
    Array3<Real> psi;
    std::array<std::size_t, 3> lo{};  // target index range covered by the slab loop
    std::array<std::size_t, 3> hi{};
  };

  void require(Component c) const {
    if (!has(c)) throw std::invalid_argument("component " + std::string(to_string(c)) + " is not simulated in this grid");
  }

  void build_terms() {
    using C = Component;
    if (spec_.dim == Dimensionality::TE2D) {
      terms_ = {{C::Ex, C::Hz, 1, Real(1)},  {C::Ey, C::Hz, 0, Real(-1)},
                {C::Hz, C::Ey, 0, Real(-1)}, {C::Hz, C::Ex, 1, Real(1)}};
    } else {
      terms_ = {{C::Ex, C::Hz, 1, Real(1)},  {C::Ex, C::Hy, 2, Real(-1)}, {C::Ey, C::Hx, 2, Real(1)},
                {C::Ey, C::Hz, 0, Real(-1)}, {C::Ez, C::Hy, 0, Real(1)},  {C::Ez, C::Hx, 1, Real(-1)},
                {C::Hx, C::Ez, 1, Real(-1)}, {C::Hx, C::Ey, 2, Real(1)},  {C::Hy, C::Ex, 2, Real(-1)},
                {C::Hy, C::Ez, 0, Real(1)},  {C::Hz, C::Ey, 0, Real(-1)}, {C::Hz, C::Ex, 1, Real(1)}};
    }
  }

  /// Update range of a target component along an axis: tangential E on the
  /// outer walls stays zero (PEC backing), everything else is updated.
  std::array<std::size_t, 2> range(Component c, int axis) const {
    const auto ext = spec_.extent(c)[static_cast<std::size_t>(axis)];
    if (is_electric(c) && axis < spec_.ndim() && spec_.on_node(c, axis)) return {1, ext - 1};
    return {0, ext};
  }

  void build_pml_profiles() {
    pml_terms_.clear();
    for (auto& p : pml_axes_) p = PmlAxisProfile{};
    if (!spec_.pml_enabled) return;
    for (int a = 0; a < spec_.ndim(); ++a)
      pml_axes_[static_cast<std::size_t>(a)] = PmlAxisProfile::make(
          spec_.pml, static_cast<std::size_t>(spec_.cells[static_cast<std::size_t>(a)]), dx_, dt_, pml_ref_index_);
    if (terms_.empty()) build_terms();
    for (const auto& t : terms_) {
      PmlTerm pt;
      pt.term = t;
      Shape3 shape = spec_.extent(t.target);
      const auto L = static_cast<std::size_t>(spec_.pml.thickness);
      for (int a = 0; a < 3; ++a) {
        const auto r = range(t.target, a);
        pt.lo[static_cast<std::size_t>(a)] = r[0];
        pt.hi[static_cast<std::size_t>(a)] = r[1];
      }
      shape[static_cast<std::size_t>(t.axis)] = 2 * L;
      pt.psi = Array3<Real>(shape, Real(0));
      pml_terms_.push_back(std::move(pt));
    }
  }

  template <bool Electric>
  void apply_terms(Component target, const Term* t0, const Term* t1) {
    auto& T = fields_[static_cast<std::size_t>(target)];
    const auto& S0 = fields_[static_cast<std::size_t>(t0->source)];
    const auto r0 = range(target, 0), r1 = range(target, 1), r2 = range(target, 2);
    const auto st0 = static_cast<std::ptrdiff_t>(S0.stride(t0->axis));
    const Real s0 = t0->sign;
    const Field* S1p = t1 ? &fields_[static_cast<std::size_t>(t1->source)] : nullptr;
    const auto st1 = t1 ? static_cast<std::ptrdiff_t>(S1p->stride(t1->axis)) : 0;
    const Real s1 = t1 ? t1->sign : Real(0);
    const Real hcoef = static_cast<Real>(dt_ / dx_);
    const Real* C = Electric ? ce_[static_cast<std::size_t>(target)].data() : nullptr;
    // Backward difference for E (H sits half a cell behind), forward for H.
    const std::ptrdiff_t fwd0 = Electric ? 0 : st0, bwd0 = Electric ? st0 : 0;
    const std::ptrdiff_t fwd1 = Electric ? 0 : st1, bwd1 = Electric ? st1 : 0;

    for (std::size_t i = r0[0]; i < r0[1]; ++i) {
      for (std::size_t j = r1[0]; j < r1[1]; ++j) {
        Real* __restrict tp = T.data() + T.index(i, j, 0);
        const Real* __restrict a = S0.data() + S0.index(i, j, 0);
        const Real* __restrict c = Electric ? C + T.index(i, j, 0) : nullptr;
        if (S1p) {
          const Real* __restrict b = S1p->data() + S1p->index(i, j, 0);
          for (std::size_t k = r2[0]; k < r2[1]; ++k) {
            const auto kk = static_cast<std::ptrdiff_t>(k);
            const Real d = s0 * (a[kk + fwd0] - a[kk - bwd0]) + s1 * (b[kk + fwd1] - b[kk - bwd1]);
            tp[k] += (Electric ? c[k] : hcoef) * d;
          }
        } else {
          for (std::size_t k = r2[0]; k < r2[1]; ++k) {
            const auto kk = static_cast<std::ptrdiff_t>(k);
            const Real d = s0 * (a[kk + fwd0] - a[kk - bwd0]);
            tp[k] += (Electric ? c[k] : hcoef) * d;
          }
        }
      }
    }
  }

  /// 2D variant: the contiguous axis is y.
  template <bool Electric>
  void apply_terms_2d(Component target, const Term* t0, const Term* t1) {
    auto& T = fields_[static_cast<std::size_t>(target)];
    const auto& S0 = fields_[static_cast<std::size_t>(t0->source)];
    const auto r0 = range(target, 0), r1 = range(target, 1);
    const auto st0 = static_cast<std::ptrdiff_t>(S0.stride(t0->axis));
    const Real s0 = t0->sign;
    const Field* S1p = t1 ? &fields_[static_cast<std::size_t>(t1->source)] : nullptr;
    const auto st1 = t1 ? static_cast<std::ptrdiff_t>(S1p->stride(t1->axis)) : 0;
    const Real s1 = t1 ? t1->sign : Real(0);
    const Real hcoef = static_cast<Real>(dt_ / dx_);
    const Real* C = Electric ? ce_[static_cast<std::size_t>(target)].data() : nullptr;
    const std::ptrdiff_t fwd0 = Electric ? 0 : st0, bwd0 = Electric ? st0 : 0;
    const std::ptrdiff_t fwd1 = Electric ? 0 : st1, bwd1 = Electric ? st1 : 0;

    for (std::size_t i = r0[0]; i < r0[1]; ++i) {
      Real* __restrict tp = T.data() + T.index(i, 0, 0);
      const Real* __restrict a = S0.data() + S0.index(i, 0, 0);
      const Real* __restrict c = Electric ? C + T.index(i, 0, 0) : nullptr;
      if (S1p) {
        const Real* __restrict b = S1p->data() + S1p->index(i, 0, 0);
        for (std::size_t j = r1[0]; j < r1[1]; ++j) {
          const auto jj = static_cast<std::ptrdiff_t>(j);
          const Real d = s0 * (a[jj + fwd0] - a[jj - bwd0]) + s1 * (b[jj + fwd1] - b[jj - bwd1]);
          tp[j] += (Electric ? c[j] : hcoef) * d;
        }
      } else {
        for (std::size_t j = r1[0]; j < r1[1]; ++j) {
          const auto jj = static_cast<std::ptrdiff_t>(j);
          const Real d = s0 * (a[jj + fwd0] - a[jj - bwd0]);
          tp[j] += (Electric ? c[j] : hcoef) * d;
        }
      }
    }
  }

  template <bool Electric>
  void update_group() {
    for (std::size_t n = 0; n < terms_.size();) {
      const Term* t0 = &terms_[n];
      if (is_electric(t0->target) != Electric) {
        ++n;
        continue;
      }
      const Term* t1 = (n + 1 < terms_.size() && terms_[n + 1].target == t0->target) ? &terms_[n + 1] : nullptr;
      if (spec_.dim == Dimensionality::TE2D)
        apply_terms_2d<Electric>(t0->target, t0, t1);
      else
        apply_terms<Electric>(t0->target, t0, t1);
      n += t1 ? 2 : 1;
    }
    for (auto& pt : pml_terms_)
      if (is_electric(pt.term.target) == Electric) apply_pml<Electric>(pt);
  }

  template <bool Electric>
  void apply_pml(PmlTerm& pt) {
    const Term& t = pt.term;
    auto& T = fields_[static_cast<std::size_t>(t.target)];
    const auto& S = fields_[static_cast<std::size_t>(t.source)];
    const auto& prof = pml_axes_[static_cast<std::size_t>(t.axis)];
    const bool node = spec_.on_node(t.target, t.axis);
    const auto& bv = node ? prof.b_node : prof.b_half;
    const auto& cv = node ? prof.c_node : prof.c_half;
    const auto& kv = node ? prof.kinv_node : prof.kinv_half;
    const auto st = static_cast<std::ptrdiff_t>(S.stride(t.axis));
    const std::ptrdiff_t fwd = Electric ? 0 : st, bwd = Electric ? st : 0;
    const Real hcoef = static_cast<Real>(dt_ / dx_);
    const Real sign = t.sign;
    const Real* cbase = Electric ? ce_[static_cast<std::size_t>(t.target)].data() : nullptr;
    const auto ax = static_cast<std::size_t>(t.axis);
    const auto L = static_cast<std::size_t>(spec_.pml.thickness);
    const std::size_t ext = spec_.extent(t.target)[ax];
    const std::size_t hi_start = ext - L;

    // Two contiguous runs along the PML axis: [0, L) -> slab [0, L) and
    // [ext - L, ext) -> slab [L, 2L), each clipped to the update range.
    const std::array<std::array<std::size_t, 3>, 2> runs{{{0, L, 0}, {hi_start, ext, L}}};
    for (const auto& run : runs) {
      std::array<std::size_t, 3> lo = pt.lo, hi = pt.hi;
      lo[ax] = std::max(lo[ax], run[0]);
      hi[ax] = std::min(hi[ax], run[1]);
      if (lo[ax] >= hi[ax]) continue;
      const std::size_t slab0 = run[2] + (lo[ax] - run[0]);  // slab index of lo[ax]
      for (std::size_t i = lo[0]; i < hi[0]; ++i) {
        for (std::size_t j = lo[1]; j < hi[1]; ++j) {
          Real* __restrict tp = T.data() + T.index(i, j, 0);
          const Real* __restrict sp = S.data() + S.index(i, j, 0);
          const Real* __restrict cp = Electric ? cbase + T.index(i, j, 0) : nullptr;
          if (ax == 2) {
            Real* __restrict psi = pt.psi.data() + pt.psi.index(i, j, 0);
            for (std::size_t k = lo[2]; k < hi[2]; ++k) {
              const std::size_t s = slab0 + (k - lo[2]);
              const auto kk = static_cast<std::ptrdiff_t>(k);
              const Real d = sp[kk + fwd] - sp[kk - bwd];
              psi[s] = static_cast<Real>(bv[s]) * psi[s] + static_cast<Real>(cv[s]) * d;
              tp[k] += (Electric ? cp[k] : hcoef) * sign * (static_cast<Real>(kv[s]) * d + psi[s]);
            }
          } else {
            const std::size_t s = slab0 + ((ax == 0 ? i : j) - lo[ax]);
            const Real b = static_cast<Real>(bv[s]), c = static_cast<Real>(cv[s]), kinv = static_cast<Real>(kv[s]);
            Real* __restrict psi = pt.psi.data() + (ax == 0 ? pt.psi.index(s, j, 0) : pt.psi.index(i, s, 0));
            for (std::size_t k = lo[2]; k < hi[2]; ++k) {
              const auto kk = static_cast<std::ptrdiff_t>(k);
              const Real d = sp[kk + fwd] - sp[kk - bwd];
              psi[k] = b * psi[k] + c * d;
              tp[k] += (Electric ? cp[k] : hcoef) * sign * (kinv * d + psi[k]);
            }
          }
        }
      }
    }
  }

  void update_h() { update_group<false>(); }
  void update_e() { update_group<true>(); }

  void build_flux_samples(FluxRecord& rec) const {
    using C = Component;
    struct Pair {
      C e, h;
      double sign;
    };
    const int nd = spec_.ndim();
    const double face_element = std::pow(dx_, nd - 1);
    for (int u = 0; u < nd; ++u) {
      std::vector<Pair> pairs;
      if (nd == 2) {
        if (u == 0) pairs = {{C::Ey, C::Hz, 1.0}};
        else pairs = {{C::Ex, C::Hz, -1.0}};
      } else {
        if (u == 0) pairs = {{C::Ey, C::Hz, 1.0}, {C::Ez, C::Hy, -1.0}};
        else if (u == 1) pairs = {{C::Ez, C::Hx, 1.0}, {C::Ex, C::Hz, -1.0}};
        else pairs = {{C::Ex, C::Hy, 1.0}, {C::Ey, C::Hx, -1.0}};
      }
      const auto uu = static_cast<std::size_t>(u);
      for (int side = 0; side < 2; ++side) {
        const std::size_t p = side == 0 ? rec.box.lo[uu] : rec.box.hi[uu];
        const double normal = side == 0 ? -1.0 : 1.0;
        for (const auto& pr : pairs) {
          const auto& E = fields_[static_cast<std::size_t>(pr.e)];
          const auto& H = fields_[static_cast<std::size_t>(pr.h)];
          std::array<std::size_t, 3> lo{0, 0, 0}, hi{1, 1, 1};
          std::array<bool, 3> node{false, false, false};
          for (int w = 0; w < 3; ++w) {
            const auto uw = static_cast<std::size_t>(w);
            if (w == u) {
              lo[uw] = p;
              hi[uw] = p + 1;
            } else if (w < nd) {
              node[uw] = spec_.on_node(pr.e, w);
              lo[uw] = rec.box.lo[uw];
              hi[uw] = node[uw] ? rec.box.hi[uw] + 1 : rec.box.hi[uw];
            }
          }
          for (std::size_t i = lo[0]; i < hi[0]; ++i)
            for (std::size_t j = lo[1]; j < hi[1]; ++j)
              for (std::size_t k = lo[2]; k < hi[2]; ++k) {
                std::array<std::size_t, 3> q{i, j, k};
                double w8 = 1.0;
                for (int w = 0; w < nd; ++w) {
                  const auto uw = static_cast<std::size_t>(w);
                  if (w == u || !node[uw]) continue;
                  if (q[uw] == rec.box.lo[uw] || q[uw] == rec.box.hi[uw]) w8 *= 0.5;
                }
                FluxRecord::Sample s;
                s.e = pr.e;
                s.h = pr.h;
                s.e_idx = E.index(q[0], q[1], q[2]);
                std::array<std::size_t, 3> qh = q;
                qh[uu] = p - 1;
                s.h_idx0 = H.index(qh[0], qh[1], qh[2]);
                qh[uu] = p;
                s.h_idx1 = H.index(qh[0], qh[1], qh[2]);
                s.weight = pr.sign * normal * w8 * face_element;
                rec.samples.push_back(s);
              }
        }
      }
    }
  }

  void record_fluxes(double t_half) {
    for (std::size_t r = 0; r < fluxes_.size(); ++r) {
      auto& fr = fluxes_[r];
      const std::size_t nf = fr.frequencies.size();
      std::vector<cplx> phase(nf);
      for (std::size_t f = 0; f < nf; ++f) phase[f] = std::polar(dt_, 2.0 * kPi * fr.frequencies[f] * t_half);
      double s_total = 0.0;
      for (std::size_t s = 0; s < fr.samples.size(); ++s) {
        const auto& smp = fr.samples[s];
        const auto& E = fields_[static_cast<std::size_t>(smp.e)].values();
        const auto& H = fields_[static_cast<std::size_t>(smp.h)].values();
        const double e = 0.5 * (fr.e_prev[s] + static_cast<double>(E[smp.e_idx]));
        const double h = 0.5 * (static_cast<double>(H[smp.h_idx0]) + static_cast<double>(H[smp.h_idx1]));
        s_total += smp.weight * e * h;
        for (std::size_t f = 0; f < nf; ++f) {
          fr.e_dft[s * nf + f] += e * phase[f];
          fr.h_dft[s * nf + f] += h * phase[f];
        }
      }
      fr.integrated += s_total * dt_;
      if (flux_keep_series_[r]) fr.flux_series.push_back(s_total);
    }
  }

  void record_probes() {
    for (auto& p : probes_) {
      const auto& f = fields_[static_cast<std::size_t>(p.component)];
      const double t = is_electric(p.component) ? time() : time() - 0.5 * dt_;
      p.t.push_back(t);
      p.value.push_back(static_cast<double>(f(p.index[0], p.index[1], p.index[2])));
    }
  }

  void record_dfts() {
    for (auto& d : dfts_) {
      const std::size_t nf = d.frequencies.size();
      for (auto& part : d.parts) {
        const double t = is_electric(part.component) ? time() : time() - 0.5 * dt_;
        std::vector<cplx> phase(nf);
        for (std::size_t f = 0; f < nf; ++f) phase[f] = std::polar(dt_, 2.0 * kPi * d.frequencies[f] * t);
        const auto& F = fields_[static_cast<std::size_t>(part.component)];
        std::size_t n = 0;
        for (std::size_t i = part.lo[0]; i < part.hi[0]; ++i)
          for (std::size_t j = part.lo[1]; j < part.hi[1]; ++j)
            for (std::size_t k = part.lo[2]; k < part.hi[2]; ++k, ++n) {
              const double v = static_cast<double>(F(i, j, k));
              if (v == 0.0) continue;
              for (std::size_t f = 0; f < nf; ++f) part.data[n * nf + f] += v * phase[f];
            }
      }
    }
  }

  GridSpec spec_;
  double dx_ = 0.0, dt_ = 0.0;
  long step_ = 0;
  std::array<Field, 6> fields_;
  std::array<Array3<Real>, 3> eps_;
  std::array<Array3<Real>, 3> ce_;  // dt / (eps dx)
  double pml_ref_index_ = 1.0;
  std::array<PmlAxisProfile, 3> pml_axes_;
  std::vector<Term> terms_;
  std::vector<PmlTerm> pml_terms_;

  std::vector<PointCurrent> sources_;
  std::vector<SourceRecord> source_records_;
  std::vector<ProbeRecord> probes_;
  std::vector<FluxRecord> fluxes_;
  std::vector<bool> flux_keep_series_;
  std::vector<DftRecord> dfts_;

  bool track_energy_ = false;
  double leapfrog_energy_ = 0.0;
  std::array<Field, 3> e_copy_;
};

}  // namespace pcsim::fdtd
