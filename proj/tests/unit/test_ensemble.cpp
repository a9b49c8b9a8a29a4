#include <catch_amalgamated.hpp>

#include <cmath>

#include "pcsim/ensemble/rates.hpp"
#include "pcsim/geometry/rasterize.hpp"

using namespace pcsim;
using namespace pcsim::ensemble;
using Catch::Matchers::WithinRel;

namespace {

const std::array<double, 3> kHoleCentre{0.5, 0.8660254037844386, 0.0};

modal::ResonanceMode fake_mode() {
  modal::ResonanceMode m;
  m.frequency = 0.305;
  m.Q = 245.0;
  m.polarization = "x-dipole";
  return m;
}

}  // namespace

TEST_CASE("uniform slab against itself gives unit ratio", "[ensemble]") {
  geometry::PhotonicCrystalSpec s;
  s.r = 0.0;
  const auto m = geometry::rasterize(s, 16.0);
  EmitterSpec e;
  e.position = {0.31, -0.2, 0};
  e.orientation = {0.6, 0.8, 0};
  e.frequency = 0.3;
  const auto r = single_emitter_rate(m, e);
  REQUIRE(r.valid);
  REQUIRE(r.ratio == 1.0);
  REQUIRE(r.provenance.resolution == 16.0);
}

TEST_CASE("dielectric emitter inside the gap is suppressed", "[ensemble][slow]") {
  const auto m = geometry::rasterize(geometry::PhotonicCrystalSpec{}, 16.0);
  EmitterSpec e;
  e.position = {0.5, 0.0, 0};  // between two holes
  e.frequency = 0.30;
  const auto r = single_emitter_rate(m, e);
  INFO("ratio " << r.ratio << " flag " << r.flag);
  REQUIRE(r.valid);
  REQUIRE(r.ratio < 0.5);
}

TEST_CASE("emitted power is a quadratic form in the dipole orientation", "[ensemble][slow]") {
  const auto m = geometry::rasterize(geometry::PhotonicCrystalSpec{}, 16.0);
  const std::array<double, 3> pos{0.5, 0.2, 0};
  const std::vector<double> f{0.25};
  auto P = [&](double deg) {
    const double a = deg * kPi / 180.0;
    return spectral_power(m, pos, {std::cos(a), std::sin(a), 0}, f).power[0];
  };
  const double px = P(0), py = P(90), p45 = P(45);
  const double cross = p45 - 0.5 * (px + py);
  const double a = 30.0 * kPi / 180.0;
  const double predicted = px * std::cos(a) * std::cos(a) + py * std::sin(a) * std::sin(a) + 2 * cross * std::sin(a) * std::cos(a);
  const double measured = P(30);
  INFO("px " << px << " py " << py << " cross " << cross << " P30 " << measured << " predicted " << predicted);
  REQUIRE(std::abs(measured / predicted - 1.0) < 0.05);
}

TEST_CASE("ensemble planning", "[ensemble]") {
  const auto m = geometry::rasterize(geometry::make_single_defect_cavity(geometry::PhotonicCrystalSpec{}), 16.0);
  EnsembleSpec s;
  s.n_emitters = 300;
  s.seed = 77;
  const auto a = plan_ensemble(m, s), b = plan_ensemble(m, s);
  REQUIRE(a.size() == 300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].position == b[i].position);
    REQUIRE(a[i].orientation == b[i].orientation);
    REQUIRE(a[i].frequency == b[i].frequency);
    REQUIRE(in_dielectric(m, a[i]));
    REQUIRE(std::hypot(a[i].position[0], a[i].position[1]) <= s.radius);
    REQUIRE(a[i].frequency >= s.fmin);
    REQUIRE(a[i].frequency <= s.fmax);
    const auto& u = a[i].orientation;
    REQUIRE_THAT(u[0] * u[0] + u[1] * u[1] + u[2] * u[2], WithinRel(1.0, 1e-12));
  }
  s.seed = 78;
  REQUIRE(plan_ensemble(m, s)[0].position != a[0].position);
  s.n_emitters = 0;
  REQUIRE_THROWS(plan_ensemble(m, s));
}

TEST_CASE("ensemble summary", "[ensemble]") {
  RateResult one;
  one.ratio = 0.42;
  auto s = summarize({one});
  REQUIRE(s.n == 1);
  REQUIRE(s.mean == 0.42);
  REQUIRE(s.variance == 0.0);
  RateResult two = one, bad = one;
  two.ratio = 0.62;
  bad.valid = false;
  s = summarize({one, two});
  REQUIRE_THAT(s.mean, WithinRel(0.52, 1e-12));
  REQUIRE_THAT(s.variance, WithinRel(0.01, 1e-9));
  REQUIRE_FALSE(s.flagged);
  REQUIRE(summarize({one, bad}).flagged);
}

TEST_CASE("emitter in an air hole is rejected", "[ensemble]") {
  const auto m = geometry::rasterize(geometry::PhotonicCrystalSpec{}, 16.0);
  EmitterSpec e;
  e.position = kHoleCentre;
  REQUIRE_FALSE(in_dielectric(m, e));
  REQUIRE_THROWS_WITH(single_emitter_rate(m, e), Catch::Matchers::ContainsSubstring("air hole"));
  e.position = {0.5, 0, 0};
  REQUIRE(in_dielectric(m, e));
}

TEST_CASE("detuning and frequency are consistent", "[ensemble]") {
  const double lc = 1.0 / 0.305, Q = 245.0;
  for (double d : {-3.0, -0.5, 0.0, 0.5, 1.0, 3.0}) {
    const double f = EmitterSpec::frequency_for_detuning(d, lc, Q);
    REQUIRE(std::abs(EmitterSpec::detuning_of(f, lc, Q) - d) < 1e-9);
    REQUIRE_THAT(1.0 / f - lc, Catch::Matchers::WithinAbs(d * lc / Q, 1e-12));
  }
  REQUIRE_THAT(EmitterSpec::frequency_for_detuning(0.0, lc, Q), WithinRel(0.305, 1e-14));
}

TEST_CASE("rate map marks air offsets and skips them", "[ensemble]") {
  const auto m = geometry::rasterize(geometry::make_single_defect_cavity(geometry::PhotonicCrystalSpec{}), 16.0);
  RateMapSpec s;
  s.offsets = {{0.0, 0.0}, {kHoleCentre[0], kHoleCentre[1]}};
  s.detunings = {-1.0, 0.0, 1.0};
  auto map = plan_rate_map(m, fake_mode(), s);
  REQUIRE(map.frequencies.size() == 3);
  REQUIRE(map.frequencies[1] == Catch::Approx(0.305));
  REQUIRE(map.frequencies[0] > map.frequencies[2]);  // negative detuning is blue
  REQUIRE(map.marker[0] == "pending");
  REQUIRE(map.marker[1] == "air");
  run_rate_map_row(m, map, 1);
  for (double v : map.ratio[1]) REQUIRE(std::isnan(v));
  s.offsets.clear();
  REQUIRE_THROWS(plan_rate_map(m, fake_mode(), s));
}

TEST_CASE("gap detection on synthetic spectra", "[ensemble]") {
  std::vector<double> f, mean, flat;
  for (int k = 0; k <= 40; ++k) {
    const double x = 0.2 + 0.005 * k;
    f.push_back(x);
    // Piecewise linear dip crossing 0.5 at 0.26 and 0.34.
    mean.push_back(std::min(0.1 + 10.0 * std::abs(x - 0.3), 1.0));
    flat.push_back(1.0);
  }
  const auto g = detect_gap(f, mean, 0.5);
  REQUIRE(g.found);
  REQUIRE_FALSE(g.open_low);
  REQUIRE_FALSE(g.open_high);
  REQUIRE_THAT(g.f_low, Catch::Matchers::WithinAbs(0.26, 1e-9));
  REQUIRE_THAT(g.f_high, Catch::Matchers::WithinAbs(0.34, 1e-9));
  REQUIRE(g.contains(0.27));
  REQUIRE_FALSE(g.contains(0.35));
  REQUIRE_FALSE(detect_gap(f, flat, 0.5).found);
}
