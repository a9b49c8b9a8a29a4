#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "pcsim/core/random.hpp"
#include "pcsim/fdtd/simulation.hpp"
#include "support/oracles.hpp"

using namespace pcsim;
using namespace pcsim::fdtd;

namespace {

GridSpec box2d(int nx, int ny, double res, bool pml = true) {
  GridSpec g;
  g.dim = Dimensionality::TE2D;
  g.cells = {nx, ny, 1};
  g.resolution = res;
  g.pml_enabled = pml;
  return g;
}

Index3 center_index(const GridSpec& g, Component c) {
  return {g.nearest_index(c, 0, 0.0), g.nearest_index(c, 1, 0.0), g.nearest_index(c, 2, 0.0)};
}

// Energy-weighted mean time of a probe trace.
double centroid(const ProbeRecord& p, double t0, double t1) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < p.t.size(); ++i) {
    if (p.t[i] < t0 || p.t[i] > t1) continue;
    num += p.t[i] * p.value[i] * p.value[i];
    den += p.value[i] * p.value[i];
  }
  return num / den;
}

}  // namespace

TEST_CASE("Yee extents", "[fdtd]") {
  auto g = box2d(10, 12, 20, false);
  REQUIRE(g.extent(Component::Ex) == Shape3{10, 13, 1});
  REQUIRE(g.extent(Component::Ey) == Shape3{11, 12, 1});
  REQUIRE(g.extent(Component::Hz) == Shape3{10, 12, 1});
  GridSpec g3 = GridSpec::for_domain(Dimensionality::Full3D, {1, 1, 1}, 8, {}, false);
  REQUIRE(g3.extent(Component::Ez) == Shape3{9, 9, 8});
  REQUIRE(g3.extent(Component::Hz) == Shape3{8, 8, 9});
}

TEST_CASE("nearest index is mirror symmetric", "[fdtd]") {
  auto g = box2d(40, 40, 20, false);
  // x = 0 on a half-integer lattice is an exact tie with no mirror image.
  for (double x : {0.0125, 0.025, 0.05, 0.3, 0.775}) {
    for (auto c : {Component::Ex, Component::Ey}) {
      const auto a = g.nearest_index(c, 0, x), b = g.nearest_index(c, 0, -x);
      REQUIRE(g.coordinate(c, 0, a) == Catch::Approx(-g.coordinate(c, 0, b)).margin(1e-12));
    }
  }
}

TEST_CASE("unstable Courant factor is rejected at construction", "[fdtd]") {
  auto g = box2d(40, 40, 20);
  g.courant = 0.75;  // above 1/sqrt(2)
  REQUIRE_THROWS_WITH(Simulation<float>(g), Catch::Matchers::ContainsSubstring("Courant"));
  GridSpec g3 = GridSpec::for_domain(Dimensionality::Full3D, {2, 2, 2}, 10, {}, true, 0.6);
  REQUIRE_THROWS(Simulation<float>(g3));
  g.courant = 0.7;
  REQUIRE_NOTHROW(Simulation<float>(g));
}

TEST_CASE("zero state is a fixed point", "[fdtd]") {
  Simulation<float> sim(box2d(60, 50, 20));
  sim.run(500);
  for (auto c : sim.components())
    for (float v : sim.field(c).values()) REQUIRE(v == 0.0f);
  REQUIRE(sim.time_step() == 500);
}

TEST_CASE("bad monitors and sources are rejected before stepping", "[fdtd]") {
  auto g = box2d(60, 60, 20);
  Simulation<float> sim(g);
  REQUIRE_THROWS(sim.add_probe(Component::Ex, {60, 0, 0}));
  REQUIRE_THROWS(sim.add_probe(Component::Ez, {1, 1, 0}));
  PointCurrent pc;
  pc.index = {100, 1, 0};
  REQUIRE_THROWS(sim.add_source(pc));
  FluxBox inside_pml{{2, 2, 0}, {50, 50, 0}};
  REQUIRE_THROWS(sim.add_flux(inside_pml));
  REQUIRE_THROWS(sim.run(0));
}

TEST_CASE("probe at the source sees the first injection", "[fdtd]") {
  auto g = box2d(60, 60, 20);
  Simulation<float> sim(g);
  PointCurrent pc;
  pc.component = Component::Ey;
  pc.index = center_index(g, Component::Ey);
  pc.waveform = Waveform::gaussian(0.5, 0.5);
  sim.add_source(pc);
  const auto p = sim.add_probe(Component::Ey, pc.index);
  sim.step();
  REQUIRE(sim.probe(p).value.size() == 1);
  REQUIRE(sim.probe(p).value[0] != 0.0);
}

TEST_CASE("identical runs are bit identical", "[fdtd]") {
  auto once = [] {
    auto g = box2d(80, 70, 20);
    Array3<double> ex(g.extent(Component::Ex), 1.0), ey(g.extent(Component::Ey), 1.0);
    for (std::size_t i = 30; i < 50; ++i)
      for (std::size_t j = 20; j < 40; ++j) ex(i, j, 0) = ey(i, j, 0) = 6.0;
    Simulation<float> sim(g, {ex, ey, {}});
    PointCurrent pc;
    pc.index = {35, 35, 0};
    pc.waveform = Waveform::gaussian(0.3, 0.2);
    sim.add_source(pc);
    const auto p = sim.add_probe(Component::Ey, {52, 30, 0});
    sim.run(800);
    return sim.probe(p).value;
  };
  REQUIRE(once() == once());
}

TEST_CASE("fields are linear in the source amplitude", "[fdtd]") {
  auto trace = [](double moment) {
    auto g = box2d(60, 60, 20);
    Simulation<float> sim(g);
    PointCurrent pc;
    pc.index = center_index(g, Component::Ex);
    pc.waveform = Waveform::gaussian(0.4, 0.3);
    pc.moment = moment;
    sim.add_source(pc);
    sim.run(400);
    return std::vector<float>(sim.field(Component::Hz).values());
  };
  const auto a = trace(1.0), b = trace(2.0);
  bool any = false;
  for (std::size_t n = 0; n < a.size(); ++n) {
    REQUIRE(b[n] == 2.0f * a[n]);
    any = any || a[n] != 0.0f;
  }
  REQUIRE(any);
}

TEST_CASE("closed vacuum box conserves energy after the source stops", "[fdtd]") {
  auto g = box2d(48, 40, 20, false);
  Simulation<float> sim(g);
  sim.track_energy(true);
  PointCurrent pc;
  pc.component = Component::Ey;
  pc.index = {17, 23, 0};
  pc.waveform = Waveform::gaussian(0.6, 0.4);
  sim.add_source(pc);
  while (sim.time() < sim.sources_end_time() + 1.0) sim.step();
  const double e0 = sim.leapfrog_energy();
  REQUIRE(e0 > 0.0);
  double worst = 0.0;
  for (int n = 0; n < 10000; ++n) {
    sim.step();
    worst = std::max(worst, std::abs(sim.leapfrog_energy() - e0) / e0);
  }
  INFO("max relative drift " << worst);
  REQUIRE(worst < 1e-3);
}

TEST_CASE("plane wave group delay matches free-space propagation", "[fdtd]") {
  // Uniform Ey sheet between the PEC walls at y = const launches a TEM wave
  // along x; the energy centroid moves at c.
  const double res = 40;
  auto g = box2d(800, 8, res, false);
  Simulation<float> sim(g);
  const auto ny = g.extent(Component::Ey)[1];
  const std::size_t x0 = 200;
  for (std::size_t j = 0; j < ny; ++j) {
    PointCurrent pc;
    pc.component = Component::Ey;
    pc.index = {x0, j, 0};
    pc.waveform = Waveform::gaussian(1.0, 0.5);
    sim.add_source(pc);
  }
  const std::size_t n_cells = 300;
  const auto p1 = sim.add_probe(Component::Ey, {x0 + 50, 4, 0});
  const auto p2 = sim.add_probe(Component::Ey, {x0 + 50 + n_cells, 4, 0});
  // Windows close before either wall echo arrives (left wall: t = 11.25 at
  // the near probe).
  sim.run(static_cast<long>(14.5 / g.dt()));
  const double delay = centroid(sim.probe(p2), 7.0, 14.5) - centroid(sim.probe(p1), 0.0, 7.0);
  const double expect = static_cast<double>(n_cells) / res;
  INFO("delay " << delay << " expected " << expect);
  REQUIRE(std::abs(delay - expect) / expect < 0.01);
}

TEST_CASE("PML echo is below -40 dB", "[fdtd]") {
  // Reference: same source/probe in a domain 4x larger, where no boundary
  // echo arrives inside the observation time.
  const double res = 20;
  auto probe_trace = [&](double size, double t_end) {
    auto g = GridSpec::for_domain(Dimensionality::TE2D, {size, size, 0}, res);
    Simulation<double> sim(g);
    PointCurrent pc;
    pc.component = Component::Ey;
    pc.index = center_index(g, Component::Ey);
    pc.waveform = Waveform::gaussian(1.0, 0.6);
    sim.add_source(pc);
    const auto pr = sim.add_probe(Component::Ey, {g.nearest_index(Component::Ey, 0, 1.5), pc.index[1], 0});
    while (sim.time() < t_end) sim.step();
    return sim.probe(pr).value;
  };
  const double t_end = 16.0;
  const auto small = probe_trace(4.0, t_end), big = probe_trace(16.0, t_end);
  REQUIRE(small.size() == big.size());
  double incident = 0, echo = 0;
  for (std::size_t n = 0; n < small.size(); ++n) {
    incident = std::max(incident, std::abs(big[n]));
    echo = std::max(echo, std::abs(small[n] - big[n]));
  }
  const double db = 20.0 * std::log10(echo / incident);
  INFO("echo " << db << " dB");
  REQUIRE(db < -40.0);
}

TEST_CASE("swapping source and probe gives the same waveform", "[fdtd]") {
  auto g = box2d(70, 60, 20, false);
  Array3<double> ex(g.extent(Component::Ex), 1.0), ey(g.extent(Component::Ey), 1.0);
  Rng rng(5);
  for (int blk = 0; blk < 12; ++blk) {
    const auto i0 = static_cast<std::size_t>(rng.uniform(5, 55)), j0 = static_cast<std::size_t>(rng.uniform(5, 45));
    const double e = rng.uniform(1.5, 12.0);
    for (std::size_t i = i0; i < i0 + 8; ++i)
      for (std::size_t j = j0; j < j0 + 8; ++j) {
        ex(i, j, 0) = e;
        ey(i, j, 0) = e;
      }
  }
  const Index3 a{20, 22, 0}, b{47, 35, 0};
  auto run = [&](Component cs, Index3 is, Component cp, Index3 ip) {
    Simulation<double> sim(g, {ex, ey, {}});
    PointCurrent pc;
    pc.component = cs;
    pc.index = is;
    pc.waveform = Waveform::gaussian(0.35, 0.25);
    sim.add_source(pc);
    const auto p = sim.add_probe(cp, ip);
    sim.run(1500);
    return sim.probe(p).value;
  };
  const auto ab = run(Component::Ex, a, Component::Ey, b);
  const auto ba = run(Component::Ey, b, Component::Ex, a);
  double peak = 0, diff = 0;
  for (std::size_t n = 0; n < ab.size(); ++n) {
    peak = std::max(peak, std::abs(ab[n]));
    diff = std::max(diff, std::abs(ab[n] - ba[n]));
  }
  REQUIRE(peak > 0.0);
  INFO("relative mismatch " << diff / peak);
  REQUIRE(diff / peak < 1e-6);
}

TEST_CASE("3D grid runs and radiates", "[fdtd][3d]") {
  auto g = GridSpec::for_domain(Dimensionality::Full3D, {2, 2, 2}, 10);
  Simulation<float> sim(g);
  PointCurrent pc;
  pc.component = Component::Ez;
  pc.index = center_index(g, Component::Ez);
  pc.waveform = Waveform::gaussian(0.6, 0.4);
  sim.add_source(pc);
  const auto f = sim.add_flux(FluxBox::around(g, {0, 0, 0}, {0.5, 0.5, 0.5}));
  REQUIRE(sim.run_until_decayed(1e-6, 200.0));
  const double w = sim.source_record(0).work, p = sim.flux(f).integrated;
  REQUIRE(w > 0.0);
  REQUIRE(std::abs(p - w) / w < 0.02);
}
