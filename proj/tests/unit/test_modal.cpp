#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcsim/core/random.hpp"
#include "pcsim/geometry/rasterize.hpp"
#include "pcsim/modal/cavity.hpp"
#include "pcsim/modal/figures.hpp"
#include "pcsim/modal/resonance.hpp"
#include "pcsim/sources/spectrum.hpp"
#include "pcsim/stats/fits.hpp"

using namespace pcsim;
using namespace pcsim::modal;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> ringdown(double f, double Q, double dt, std::size_t n, double phase = 0.4) {
  const double tau = Q / (kPi * f);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    y[i] = std::exp(-t / tau) * std::cos(2 * kPi * f * t + phase);
  }
  return y;
}

}  // namespace

TEST_CASE("ringdown fit recovers Q of a synthetic mode", "[modal][resonance]") {
  const double f = 0.3013, dt = 0.05;
  for (double Q : {320.0, 1600.0}) {
    const double tau = Q / (kPi * f);
    const auto y = ringdown(f, Q, dt, static_cast<std::size_t>(6 * tau / dt));
    const auto r = find_resonances(y, dt, 0.25, 0.35);
    REQUIRE(r.modes.size() >= 1);
    INFO("Q " << Q << " fit " << r.modes[0].Q);
    REQUIRE_THAT(r.modes[0].Q, WithinRel(Q, 0.03));
    REQUIRE_THAT(r.modes[0].frequency, WithinRel(f, 1e-4));
  }
  SECTION("record truncated after three decay times") {
    const double Q = 5000.0, tau = Q / (kPi * f);
    const auto y = ringdown(f, Q, dt, static_cast<std::size_t>(3 * tau / dt));
    const auto r = find_resonances(y, dt, 0.25, 0.35);
    REQUIRE(r.modes.size() >= 1);
    REQUIRE_THAT(r.modes[0].Q, WithinRel(Q, 0.05));
  }
}

TEST_CASE("ringdown fit separates two modes", "[modal][resonance]") {
  const double dt = 0.05;
  auto a = ringdown(0.29, 400.0, dt, 40000), b = ringdown(0.31, 900.0, dt, 40000, 1.1);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += 0.6 * b[i];
  const auto r = find_resonances(a, dt, 0.25, 0.35);
  REQUIRE(r.modes.size() == 2);
  std::vector<Resonance> m = r.modes;
  std::sort(m.begin(), m.end(), [](const Resonance& x, const Resonance& y) { return x.frequency < y.frequency; });
  REQUIRE_THAT(m[0].Q, WithinRel(400.0, 0.03));
  REQUIRE_THAT(m[1].Q, WithinRel(900.0, 0.03));
}

TEST_CASE("pure noise yields no resonance", "[modal][resonance]") {
  Rng rng(11);
  std::vector<double> y(20000);
  for (auto& v : y) v = rng.normal();
  const auto r = find_resonances(y, 0.05, 0.25, 0.35);
  REQUIRE(r.modes.empty());
  REQUIRE_FALSE(r.diagnostic.empty());
  REQUIRE(find_resonances(std::vector<double>(1000, 0.0), 0.05, 0.25, 0.35).modes.empty());
}

TEST_CASE("ringdown Q agrees with the spectral linewidth", "[modal][resonance]") {
  const double f = 0.3, dt = 0.05, Q = 1600.0;
  const double tau = Q / (kPi * f);
  const auto n = static_cast<std::size_t>(8 * tau / dt);
  const auto y = ringdown(f, Q, dt, n);
  const auto rd = find_resonances(y, dt, 0.25, 0.35);
  REQUIRE(rd.modes.size() >= 1);

  std::vector<double> padded(y);
  padded.resize(2 * n, 0.0);
  sources::SpectrumOptions so;
  so.window = sources::WindowKind::Rectangular;
  const auto s = sources::emission_spectrum(padded, dt, n, so);
  // Ascending wavelength for the fit.
  std::vector<double> lam(s.wavelength_nm.rbegin(), s.wavelength_nm.rend());
  std::vector<double> pw(s.power.rbegin(), s.power.rend());
  const double lc = UnitSystem{}.frequency_to_nm(f);
  const auto lf = stats::fit_lorentzian(lam, pw, std::make_pair(lc * (1 - 4 / Q), lc * (1 + 4 / Q)));
  REQUIRE(lf.ok);
  INFO("ringdown Q " << rd.modes[0].Q << " linewidth Q " << lf.Q);
  REQUIRE(std::abs(rd.modes[0].Q / lf.Q - 1.0) < 0.05);
}

TEST_CASE("mode volume of simple fields", "[modal][figures]") {
  SECTION("uniform field fills the box") {
    Array3<double> I({7, 5, 3}, 2.0), eps({7, 5, 3}, 3.0);
    REQUIRE_THAT(mode_volume(I, eps, 0.125), WithinRel(7 * 5 * 3 * 0.125, 1e-14));
  }
  SECTION("single hot cell") {
    Array3<double> I({9, 9, 1}, 0.0), eps({9, 9, 1}, 12.0);
    I(4, 4, 0) = 1.0;
    REQUIRE(mode_volume(I, eps, 0.01) == 0.01);
  }
  SECTION("invariant under field scaling") {
    Array3<double> I({20, 10, 1}), eps({20, 10, 1}, 1.0);
    Rng rng(5);
    for (auto& v : I.values()) v = rng.uniform();
    for (std::size_t n = 0; n < eps.size(); ++n) eps.values()[n] = 1.0 + 11.0 * rng.uniform();
    const double v0 = mode_volume(I, eps, 0.02);
    for (double c : {4.0, 3.7, 1e-6}) {
      auto J = I;
      for (auto& v : J.values()) v *= c * c;
      REQUIRE_THAT(mode_volume(J, eps, 0.02), WithinRel(v0, 1e-12));
    }
  }
  SECTION("bad input") {
    Array3<double> z({3, 3, 1}, 0.0);
    REQUIRE_THROWS(mode_volume(z, z, 1.0));
    REQUIRE_THROWS(mode_volume(Array3<double>({3, 3, 1}, 1.0), Array3<double>({3, 2, 1}, 1.0), 1.0));
  }
  REQUIRE_THAT(mode_volume_in_cubic_wavelengths(8.0, 2.0, 1.0), WithinRel(1.0, 1e-15));
  REQUIRE_THAT(mode_volume_in_cubic_wavelengths(1.0, 3.6, 3.6, 2), WithinRel(1.0, 1e-15));
}

TEST_CASE("cavity Purcell factor", "[modal][figures]") {
  const double lam = 3.7, n = 3.6;
  const double unit = std::pow(lam / n, 3);
  const double pref = 3.0 / (4.0 * kPi * kPi);
  REQUIRE_THAT(purcell_factor(45000, 0.5 * unit, lam, n), WithinRel(pref * 45000 / 0.5, 1e-9));
  REQUIRE_THAT(purcell_factor(45000, 0.5 * unit, lam, n), WithinRel(6839.4, 1e-4));
  REQUIRE_THAT(purcell_factor(5000, 0.5 * unit, lam, n), WithinRel(759.93, 1e-4));
  REQUIRE(purcell_factor(100, std::numeric_limits<double>::infinity(), lam, n) == 0.0);
  REQUIRE_THROWS(purcell_factor(0, 1, lam, n));
  REQUIRE_THROWS(purcell_factor(10, -1, lam, n));
}

TEST_CASE("total rate enhancement", "[modal][figures]") {
  EnhancementInput in;
  in.F_cav = 120;
  in.F_PC = 0.2;
  in.lambda_cav = 3.3;
  in.Q = 500;
  in.lambda = in.lambda_cav;
  REQUIRE_THAT(rate_enhancement(in), WithinRel(120.2, 1e-12));
  in.lambda = in.lambda_cav * (1 + 0.5 / in.Q);
  REQUIRE_THAT(rate_enhancement(in), WithinRel(60.2, 1e-12));
  in.eta_or = 0.0;
  REQUIRE(rate_enhancement(in) == 0.2);

  // Additive in the two channels.
  in.eta_or = 0.37;
  in.lambda = in.lambda_cav * 1.0007;
  auto only_cav = in, only_pc = in;
  only_cav.F_PC = 0;
  only_pc.F_cav = 0;
  REQUIRE_THAT(rate_enhancement(in), WithinRel(rate_enhancement(only_cav) + rate_enhancement(only_pc), 1e-12));

  in.eta_or = 1.5;
  REQUIRE_THROWS(rate_enhancement(in));
  REQUIRE(orientation_overlap({0, 2, 0}, {1, 0, 0}, 2) == 0.0);
  REQUIRE_THAT(orientation_overlap({1, 1, 0}, {1, 1, 0}, std::sqrt(2.0)), WithinRel(1.0, 1e-12));
}

TEST_CASE("cavity field decay rate", "[modal][figures]") {
  const double k = cavity_decay_rate_si(921.0, 5000);
  REQUIRE_THAT(k, WithinRel(2.0452e11, 1e-4));
  for (double Q : {320.0, 1600.0, 5000.0})
    for (double l : {900.0, 921.0, 950.0}) REQUIRE_THAT(cavity_decay_rate_si(l, Q) * Q * l * 1e-9, WithinRel(kPi * kSpeedOfLight, 1e-9));
  // Normalized and SI forms agree through the unit anchor.
  UnitSystem u;
  const auto d = cavity_decay_rate(1.0 / 0.27, 5000, u);
  REQUIRE_THAT(d.si, WithinRel(k, 1e-9));
  REQUIRE_THAT(d.normalized, WithinRel(kPi * 0.27 / 5000, 1e-12));
  REQUIRE(cavity_decay_rate_si(921.0, 1e300) < 1e-280);
}

TEST_CASE("weak coupling check", "[modal][figures]") {
  const auto z = weak_coupling_check(1e11, 0.0);
  REQUIRE(z.weak);
  REQUIRE(std::isinf(z.margin));
  REQUIRE_FALSE(weak_coupling_check(1.0, 2.0).weak);
  REQUIRE(weak_coupling_check(4.0, -2.0).margin == 2.0);
}

TEST_CASE("collection efficiency of a plane field", "[modal][figures]") {
  PlaneField p;
  p.frequency = 1.0;
  p.h = 0.25;
  p.nx = p.ny = 129;
  p.x0 = p.y0 = -16.0;
  const double w = 4.0;
  for (std::size_t i = 0; i < p.nx; ++i)
    for (std::size_t j = 0; j < p.ny; ++j) {
      const double x = p.x0 + p.h * static_cast<double>(i), y = p.y0 + p.h * static_cast<double>(j);
      const cplx e = std::exp(-(x * x + y * y) / (w * w));
      p.Ex.push_back(e);
      p.Ey.push_back(0.0);
      p.Hx.push_back(0.0);
      p.Hy.push_back(e);
    }
  REQUIRE_THAT(collection_efficiency(p, 1.0, 4).efficiency, WithinRel(1.0, 1e-12));
  // A beam several wavelengths wide is almost entirely paraxial.
  for (double na : {0.3, 0.6}) REQUIRE(collection_efficiency(p, na, 4).efficiency > 0.99);
  // A point-like source fills the whole upper half space.
  PlaneField q = p;
  std::fill(q.Ex.begin(), q.Ex.end(), cplx{});
  std::fill(q.Hy.begin(), q.Hy.end(), cplx{});
  q.Ex[64 * p.ny + 64] = q.Hy[64 * p.ny + 64] = 1.0;
  const double small = collection_efficiency(q, 0.3, 4).efficiency;
  REQUIRE_THAT(small, Catch::Matchers::WithinAbs(0.09, 0.02));
  REQUIRE_THROWS(collection_efficiency(p, 0.0));
}

TEST_CASE("default cavity mode at resolution 16", "[modal][slow]") {
  // Golden values from the first converged run; a change here means the
  // solver or geometry changed.
  const auto m = geometry::rasterize(geometry::make_single_defect_cavity(geometry::PhotonicCrystalSpec{}), 16.0);
  const auto a = analyze_cavity<float>(m);
  const auto* md = select_mode(a, "x-dipole");
  REQUIRE(md != nullptr);
  INFO("f " << md->frequency << " Q " << md->Q << " V " << md->V_mode_lambda_n);
  REQUIRE_THAT(md->frequency, Catch::Matchers::WithinAbs(0.30527, 5e-4));
  REQUIRE_THAT(md->Q, WithinRel(244.7, 0.02));
  REQUIRE_THAT(md->V_mode_lambda_n, WithinRel(0.6556, 0.02));
  REQUIRE(md->V_mode_lambda_n < 2.0);
  REQUIRE(md->dims == 2);

  const auto k = md->kappa();
  REQUIRE_THAT(k.si * md->Q * UnitSystem{}.frequency_to_nm(md->frequency) * 1e-9,
               WithinRel(kPi * kSpeedOfLight, 1e-12));

  // Profile normalized so the peak of eps |E|^2 is one.
  double peak = 0;
  const auto sh = md->profile[0].shape();
  for (std::size_t i = 0; i < sh[0]; ++i)
    for (std::size_t j = 0; j < sh[1]; ++j) {
      const double e2 = std::norm(md->profile[0](i, j, 0)) + std::norm(md->profile[1](i, j, 0));
      peak = std::max(peak, m.eps_cell(i, j, 0) * e2);
    }
  REQUIRE_THAT(peak, WithinRel(1.0, 1e-6));
}
