#include <catch_amalgamated.hpp>

#include <cmath>

#include "pcsim/geometry/rasterize.hpp"
#include "pcsim/sources/dipole.hpp"
#include "pcsim/sources/spectrum.hpp"
#include "support/oracles.hpp"

using namespace pcsim;
using namespace pcsim::sources;
using fdtd::Dimensionality;
using fdtd::GridSpec;

namespace {

GridSpec vacuum2d(double res = 20, double size = 6) {
  return GridSpec::for_domain(Dimensionality::TE2D, {size, size, 0}, res);
}

DipoleSource dipole(std::array<double, 3> u = {1, 0, 0}, double f0 = 0.5, double df = 0.4) {
  DipoleSource d;
  d.orientation = u;
  d.waveform = fdtd::Waveform::gaussian(f0, df);
  return d;
}

PowerResult power(const GridSpec& g, const DipoleSource& d, double half = 0.5, double eps = 1.0) {
  const auto box = flux_box_around(g, d.position, half);
  return radiated_power<float>(g, fdtd::uniform_epsilon(g, eps), d, box);
}

}  // namespace

TEST_CASE("zero amplitude radiates nothing", "[sources]") {
  const auto g = vacuum2d();
  auto d = dipole();
  d.amplitude = 0.0;
  const auto r = power(g, d);
  REQUIRE(r.P == 0.0);
  REQUIRE(r.work == 0.0);
}

TEST_CASE("2D vacuum dipole matches the closed-form radiated energy", "[sources]") {
  const auto d = dipole();
  const double exact = oracle::vacuum_energy_2d(d.waveform);
  for (double res : {20.0, 40.0}) {
    const auto r = power(vacuum2d(res), d);
    INFO("res " << res << " P " << r.P << " exact " << exact);
    REQUIRE(r.valid());
    REQUIRE(std::abs(r.P - exact) / exact < (res == 20.0 ? 0.02 : 0.005));
  }
}

TEST_CASE("flux and source work agree", "[sources]") {
  SECTION("vacuum") {
    const auto r = power(vacuum2d(), dipole({0.6, 0.8, 0}));
    REQUIRE(r.mismatch < 0.02);
    REQUIRE(r.crosscheck_ok);
  }
  SECTION("structured permittivity") {
    geometry::PhotonicCrystalSpec s;
    const auto m = geometry::rasterize(s, 20.0);
    DipoleSource d = dipole({1, 0, 0}, 0.3, 0.1);
    d.position = {0.5, 0.0, 0.0};  // between holes
    const auto box = flux_box_around(m.grid, d.position, 0.5);
    PowerOptions po;
    po.decay_threshold = 1e-6;
    const auto r = radiated_power<float>(m.grid, m.eps, d, box, po);
    INFO("P " << r.P << " work " << r.work << " mismatch " << r.mismatch);
    REQUIRE(r.mismatch < 0.02);
  }
}

TEST_CASE("radiated power does not depend on the enclosing surface", "[sources]") {
  const auto g = vacuum2d(20, 8);
  const auto d = dipole();
  const double p1 = power(g, d, 0.5).P, p2 = power(g, d, 1.5).P;
  REQUIRE(std::abs(p1 - p2) / p1 < 0.01);
}

TEST_CASE("vacuum emission is isotropic in the dipole direction", "[sources]") {
  const auto g = vacuum2d();
  const double p0 = power(g, dipole({1, 0, 0})).P;
  for (double ang : {30.0, 45.0, 90.0, 137.0}) {
    const double a = ang * kPi / 180.0;
    const double p = power(g, dipole({std::cos(a), std::sin(a), 0})).P;
    INFO("angle " << ang << " ratio " << p / p0);
    REQUIRE(std::abs(p / p0 - 1.0) < 0.03);
  }
}

TEST_CASE("continuous-wave power matches the harmonic closed form", "[sources]") {
  const auto g = vacuum2d(20, 4);
  DipoleSource d;
  d.waveform = fdtd::Waveform::continuous(0.5, 10.0);
  PowerOptions po;
  po.mode = PowerOptions::Mode::ContinuousWave;
  const auto r = radiated_power<float>(g, fdtd::uniform_epsilon(g, 1.0), d, flux_box_around(g, d.position, 0.5), po);
  // Time-averaged power of a unit in-plane line dipole: w / 16.
  const double exact = 2.0 * kPi * 0.5 / 16.0;
  INFO("P " << r.P << " work " << r.work << " exact " << exact);
  REQUIRE(std::abs(r.P - exact) / exact < 0.03);
  REQUIRE(std::abs(r.work - exact) / exact < 0.03);
}

TEST_CASE("dipole validation", "[sources]") {
  const auto g = vacuum2d();
  auto d = dipole({1, 1, 0});
  REQUIRE_THROWS_WITH(d.validate(g), Catch::Matchers::ContainsSubstring("unit vector"));
  d = dipole({0, 0, 1});
  REQUIRE_THROWS_WITH(d.validate(g), Catch::Matchers::ContainsSubstring("out-of-plane"));
  d = dipole({1, 0, 0}, 1.5, 0.2);  // 13 cells per vacuum wavelength, too few in n = 3.6
  REQUIRE_NOTHROW(d.validate(g, 1.0));
  REQUIRE_THROWS_WITH(d.validate(g, 3.6), Catch::Matchers::ContainsSubstring("cells per wavelength"));
  d = dipole();
  d.position = {3.2, 0, 0};
  REQUIRE_THROWS_WITH(d.validate(g), Catch::Matchers::ContainsSubstring("PML"));
  d.position = {0, 0, 0};
  const auto box = flux_box_around(g, {1.5, 0, 0}, 0.5);
  REQUIRE_THROWS_WITH(radiated_power<float>(g, fdtd::uniform_epsilon(g, 1.0), d, box),
                      Catch::Matchers::ContainsSubstring("does not enclose"));
}

TEST_CASE("dipole snaps to the nearest Yee sample of each component", "[sources]") {
  const auto g = vacuum2d(20);
  DipoleSource d;
  d.position = {0.26, -0.12, 0};
  const auto px = d.snapped_position(g, fdtd::Component::Ex);
  const auto py = d.snapped_position(g, fdtd::Component::Ey);
  REQUIRE(std::abs(px[0] - 0.26) <= 0.5 * g.dx() + 1e-12);
  REQUIRE(std::abs(px[1] + 0.12) <= 0.5 * g.dx() + 1e-12);
  REQUIRE(std::abs(py[0] - 0.26) <= 0.5 * g.dx() + 1e-12);
  REQUIRE(px != py);
  d.orientation = {0.6, 0.8, 0};
  const auto cur = d.currents(g);
  REQUIRE(cur.size() == 2);
  REQUIRE(cur[0].moment == Catch::Approx(0.6));
  REQUIRE(cur[1].moment == Catch::Approx(0.8));
}

TEST_CASE("homogeneous medium raises 3D dipole power by n", "[sources][3d][slow]") {
  const auto g = GridSpec::for_domain(Dimensionality::Full3D, {3, 3, 3}, 10);
  const auto d = dipole({0, 0, 1}, 0.4, 0.3);
  const double p1 = power(g, d, 0.5, 1.0).P;
  const double p15 = power(g, d, 0.5, 2.25).P;
  INFO("P(1.5)/P(1) = " << p15 / p1);
  REQUIRE(std::abs(p15 / p1 / 1.5 - 1.0) < 0.05);
}

TEST_CASE("spectrum of a pure sinusoid peaks at its frequency", "[sources][spectrum]") {
  const double dt = 0.025, f0 = 0.3127;
  std::vector<double> y(40000);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.7 * std::sin(2 * kPi * f0 * static_cast<double>(i) * dt + 0.3);
  const auto s = emission_spectrum(y, dt, 8192);
  const auto k = s.peak_bin(0.1, 1.0);
  const double df = s.frequency[1] - s.frequency[0];
  REQUIRE(std::abs(s.frequency[k] - f0) <= df);
  REQUIRE(s.amplitude[k] == Catch::Approx(1.7).epsilon(0.05));
  REQUIRE(s.wavelength_nm[k] == Catch::Approx(UnitSystem{}.frequency_to_nm(s.frequency[k])));
}

TEST_CASE("two sinusoids give two distinct peaks", "[sources][spectrum]") {
  const double dt = 0.025;
  const std::size_t window = 4096;
  const double bin = 1.0 / (window * dt);
  const double f1 = 0.30, f2 = 0.30 + 6 * bin;
  std::vector<double> y(32768);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = static_cast<double>(i) * dt;
    y[i] = std::sin(2 * kPi * f1 * t) + 0.8 * std::sin(2 * kPi * f2 * t);
  }
  const auto s = emission_spectrum(y, dt, window);
  const auto mid = 0.5 * (f1 + f2);
  const auto k1 = s.peak_bin(0.2, mid), k2 = s.peak_bin(mid, 0.45);
  REQUIRE(std::abs(s.frequency[k1] - f1) < bin);
  REQUIRE(std::abs(s.frequency[k2] - f2) < bin);
  // A clear dip separates them.
  const auto kd = (k1 + k2) / 2;
  REQUIRE(s.power[kd] < 0.2 * s.power[k2]);
}

TEST_CASE("decaying sinusoid has the Lorentzian linewidth", "[sources][spectrum]") {
  const double dt = 0.05, f0 = 0.3, tau = 150.0;
  // One decay followed by silence; the window holds essentially all of it.
  const std::size_t window = 40000;
  std::vector<double> y(2 * window, 0.0);
  for (std::size_t i = 0; i < window; ++i) {
    const double t = static_cast<double>(i) * dt;
    y[i] = std::exp(-t / tau) * std::sin(2 * kPi * f0 * t);
  }
  SpectrumOptions opt;
  opt.window = WindowKind::Rectangular;
  const auto s = emission_spectrum(y, dt, window, opt);
  const auto k = s.peak_bin(0.2, 0.4);
  const double half = 0.5 * s.power[k];
  std::size_t lo = k, hi = k;
  while (lo > 0 && s.power[lo] > half) --lo;
  while (hi + 1 < s.power.size() && s.power[hi] > half) ++hi;
  auto cross = [&](std::size_t a, std::size_t b) {
    return s.frequency[a] + (half - s.power[a]) * (s.frequency[b] - s.frequency[a]) / (s.power[b] - s.power[a]);
  };
  const double fwhm = cross(hi - 1, hi) - cross(lo, lo + 1);
  const double expected = 1.0 / (kPi * tau);
  INFO("FWHM " << fwhm << " expected " << expected);
  REQUIRE(std::abs(fwhm - expected) / expected < 0.10);
}

TEST_CASE("spectrum input validation", "[sources][spectrum]") {
  std::vector<double> y(100, 1.0);
  REQUIRE_THROWS(emission_spectrum({}, 0.1, 8));
  REQUIRE_THROWS(emission_spectrum(y, 0.0, 8));
  REQUIRE_THROWS(emission_spectrum(y, 0.1, 80));
}
