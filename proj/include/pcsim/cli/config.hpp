#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pcsim/core/units.hpp"
#include "pcsim/ensemble/rates.hpp"
#include "pcsim/geometry/rasterize.hpp"
#include "pcsim/geometry/serialize.hpp"
#include "pcsim/io/files.hpp"
#include "pcsim/io/hash.hpp"
#include "pcsim/io/json_reader.hpp"
#include "pcsim/modal/cavity.hpp"
#include "pcsim/stats/g2.hpp"
#include "pcsim/stats/photon.hpp"

namespace pcsim::cli {

using io::json;
namespace fs = std::filesystem;

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"resonance", "purcell", "single-rate", "ensemble",
                                          "rate-map", "bandgap", "photon-stats"};
  return k;
}

inline bool is_experiment(const std::string& s) {
  for (const auto& k : experiment_kinds())
    if (k == s) return true;
  return false;
}

struct SolverSettings {
  geometry::DomainSpec domain = geometry::DomainSpec::defaults(fdtd::Dimensionality::TE2D);
  std::string precision = "float";
  double decay_threshold = 1e-5;
  double max_time = 8000.0;
};

struct ResonanceParams {
  modal::CavityOptions cavity;
  bool snapshots = true;
};

struct PurcellParams {
  std::string source = "computed";  // computed: run the cavity analysis; given: use the numbers below
  std::string polarization = "any";
  modal::CavityOptions cavity;
  double Q = 0.0;
  double V_lambda_n = 0.0;          // mode volume in (lambda/n)^3
  double lambda_nm = 0.0;
  double n = 3.6;
  double F_PC = 0.0;
  double eta_or = 1.0;
  std::vector<double> detunings{-10, -5, -2, -1, -0.5, 0, 0.5, 1, 2, 5, 10};  // linewidths
  std::optional<double> coupling_g;  // emitter-cavity coupling, 1/s
};

struct SingleRateParams {
  std::array<double, 3> position{0.0, 0.0, 0.0};
  std::array<double, 3> orientation{1.0, 0.0, 0.0};
  double frequency = 0.27;
  double pulse_width = 0.05;
  double flux_half_width = 0.5;
};

struct EnsembleParams {
  ensemble::EnsembleSpec spec;
  double pulse_width = 0.05;
  double flux_half_width = 0.5;
};

struct RateMapParams {
  std::vector<std::array<double, 2>> offsets{{-0.5, 0.0}, {-0.25, 0.0}, {0.0, 0.0}, {0.25, 0.0}, {0.5, 0.0}};
  std::vector<double> detunings{-10, -2, -1, 0, 1, 2, 10};
  std::string polarization = "x-dipole";
  std::optional<double> mode_frequency, mode_Q;  // skip the cavity search when both are given
  modal::CavityOptions cavity;
  double pulse_width = 0.05;
  double flux_half_width = 0.5;
};

struct BandgapParams {
  double fmin = 0.22, fmax = 0.40, df = 0.005;
  std::vector<double> frequencies;  // overrides the range when nonempty
  int n_probes = 8;
  double radius = 1.2;
  double threshold = 0.5;
  double flux_half_width = 0.5;

  std::vector<double> grid() const {
    if (!frequencies.empty()) return frequencies;
    std::vector<double> f;
    const int n = static_cast<int>(std::floor((fmax - fmin) / df + 1e-9));
    for (int k = 0; k <= n; ++k) f.push_back(fmin + k * df);
    return f;
  }
};

struct PhotonParams {
  std::string source = "simulate";  // simulate or analyze
  stats::EmitterModel emitter;
  stats::PulseTrain train{13000.0, 100000, 50.0 / 2.3548200450309493};  // jitter sigma matching a 50 ps FWHM response
  int replicates = 1;
  std::int64_t bin_ps = 100;
  std::int64_t window_ps = 52000;
  stats::Pairing pairing = stats::Pairing::StartStop;
  stats::G2Options g2;
  double lifetime_bin_ps = 50.0;
  double irf_fwhm_ps = 50.0;
  double fold_offset_ps = 500.0;  // where the pulse lands in the folded decay trace
  std::optional<double> reference_tau_ps;  // bulk lifetime for the rate ratio
  bool write_timestamps = true;
  // analyze mode inputs (absolute paths after validation)
  std::string timestamps_file, histogram_file, decay_file, spectrum_file;
  std::optional<std::array<double, 2>> lorentzian_window;
};

struct RunConfig {
  std::string experiment;
  std::optional<std::uint64_t> seed;
  geometry::PhotonicCrystalSpec geometry;
  SolverSettings solver;
  UnitSystem units;
  std::optional<std::string> output_dir;

  ResonanceParams resonance;
  PurcellParams purcell;
  SingleRateParams single_rate;
  EnsembleParams ensemble;
  RateMapParams rate_map;
  BandgapParams bandgap;
  PhotonParams photon;

  bool stochastic() const {
    return experiment == "ensemble" || experiment == "bandgap" || (experiment == "photon-stats" && photon.source == "simulate");
  }
  bool needs_geometry() const { return experiment != "photon-stats" && !(experiment == "purcell" && purcell.source == "given"); }

  ensemble::RateOptions rate_options(double pulse_width, double flux_half_width) const {
    ensemble::RateOptions o;
    o.pulse_width = pulse_width;
    o.decay_threshold = solver.decay_threshold;
    o.max_time = solver.max_time;
    o.flux_half_width = flux_half_width;
    return o;
  }
};

struct ValidationResult {
  RunConfig config;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

namespace detail {

inline std::array<double, 3> vec3(io::ObjectReader& rd, const std::string& key, std::array<double, 3> def) {
  const auto v = rd.numbers(key, {def[0], def[1], def[2]});
  if (v.size() != 3) {
    rd.error(key, "expected three numbers");
    return def;
  }
  return {v[0], v[1], v[2]};
}

inline void read_cavity(io::ObjectReader& rd, modal::CavityOptions& c) {
  c.fmin = rd.number("fmin", c.fmin);
  c.fmax = rd.number("fmax", c.fmax);
  c.ringdown_time = rd.number("ringdown_time", c.ringdown_time);
  c.min_Q = rd.number("min_Q", c.min_Q);
  if (!(c.fmin > 0.0 && c.fmax > c.fmin)) rd.error("fmax", "requires 0 < fmin < fmax");
  if (!(c.ringdown_time > 0.0)) rd.error("ringdown_time", "must be positive");
}

inline json cavity_json(const modal::CavityOptions& c) {
  return {{"fmin", c.fmin}, {"fmax", c.fmax}, {"ringdown_time", c.ringdown_time}, {"min_Q", c.min_Q}};
}

inline std::string resolve_file(io::ObjectReader& rd, const std::string& key, const fs::path& base) {
  const auto s = rd.string(key, "");
  if (s.empty()) return s;
  fs::path p(s);
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) {
    rd.error(key, "file '" + p.string() + "' does not exist");
    return s;
  }
  return fs::weakly_canonical(p).string();
}

}  // namespace detail

/// Reads and checks a config object. Every problem is collected; `base` is the
/// directory relative paths are resolved against.
inline ValidationResult validate_config(const json& j, const fs::path& base = fs::current_path(),
                                        const std::string& subcommand = {}) {
  ValidationResult out;
  auto& c = out.config;
  auto& errors = out.errors;
  io::ObjectReader rd(&j, "", errors);

  c.experiment = rd.string("experiment", subcommand);
  if (c.experiment.empty()) rd.error("experiment", "missing (one of resonance, purcell, single-rate, ensemble, rate-map, bandgap, photon-stats)");
  else if (!is_experiment(c.experiment)) rd.error("experiment", "unknown experiment kind '" + c.experiment + "'");
  if (!subcommand.empty() && c.experiment != subcommand)
    rd.error("experiment", "config is for '" + c.experiment + "' but the subcommand is '" + subcommand + "'");
  c.seed = rd.optional_unsigned("seed");
  if (rd.present("output_dir")) c.output_dir = rd.string("output_dir", "");

  {
    auto u = rd.child("units");
    c.units.lambda_cav_nm = u.number("lambda_cav_nm", c.units.lambda_cav_nm);
    c.units.a_over_lambda_cav = u.number("a_over_lambda_cav", c.units.a_over_lambda_cav);
    if (!(c.units.lambda_cav_nm > 0.0)) u.error("lambda_cav_nm", "must be positive");
    if (!(c.units.a_over_lambda_cav > 0.0)) u.error("a_over_lambda_cav", "must be positive");
    u.finish();
  }

  // Geometry: inline object or a file holding one.
  {
    const std::string gfile = detail::resolve_file(rd, "geometry_file", base);
    if (!gfile.empty() && rd.present("geometry")) rd.error("geometry_file", "give either geometry or geometry_file, not both");
    if (!gfile.empty() && fs::exists(gfile)) {
      try {
        const json gj = json::parse(io::read_text(gfile));
        io::ObjectReader g(&gj, "geometry_file", errors);
        c.geometry = geometry::read_crystal_spec(g);
        g.finish();
      } catch (const json::parse_error& e) {
        rd.error("geometry_file", std::string("not valid JSON: ") + e.what());
      }
    } else {
      auto g = rd.child("geometry");
      c.geometry = geometry::read_crystal_spec(g);
      g.finish();
    }
    for (const auto& v : c.geometry.violations()) errors.push_back("geometry." + v);
  }

  {
    auto s = rd.child("solver");
    const auto dim = s.string("dim", "2d-te");
    try {
      c.solver.domain = geometry::DomainSpec::defaults(fdtd::dimensionality_from_string(dim));
    } catch (const std::exception& e) {
      s.error("dim", "must be 2d-te or 3d");
    }
    auto& d = c.solver.domain;
    if (s.present("resolution")) d.resolution = s.number("resolution", d.resolution);
    d.courant = s.number("courant", d.courant);
    d.padding = s.number("padding", d.padding);
    d.air_z = s.number("air_z", d.air_z);
    c.solver.precision = s.string("precision", c.solver.precision);
    c.solver.decay_threshold = s.number("decay_threshold", c.solver.decay_threshold);
    c.solver.max_time = s.number("max_time", c.solver.max_time);
    auto p = s.child("pml");
    d.pml.thickness = static_cast<int>(p.integer("thickness", d.pml.thickness));
    d.pml.order = p.number("order", d.pml.order);
    d.pml.reflection = p.number("reflection", d.pml.reflection);
    d.pml.kappa_max = p.number("kappa_max", d.pml.kappa_max);
    d.pml.alpha_max = p.number("alpha_max", d.pml.alpha_max);
    p.finish();
    if (d.resolution < 8.0) s.error("resolution", "must be >= 8 cells per lattice constant");
    const double cmax = d.dim == fdtd::Dimensionality::TE2D ? 1.0 / std::sqrt(2.0) : 1.0 / std::sqrt(3.0);
    if (!(d.courant > 0.0 && d.courant <= cmax)) s.error("courant", "must lie in (0, " + io::fmt(cmax) + "]");
    if (!(d.padding >= 0.0)) s.error("padding", "must be >= 0");
    if (!(d.air_z >= 0.0)) s.error("air_z", "must be >= 0");
    if (c.solver.precision != "float" && c.solver.precision != "double") s.error("precision", "must be float or double");
    if (!(c.solver.decay_threshold > 0.0 && c.solver.decay_threshold < 1.0)) s.error("decay_threshold", "must lie in (0, 1)");
    if (!(c.solver.max_time > 0.0)) s.error("max_time", "must be positive");
    try {
      d.pml.validate();
    } catch (const std::exception& e) {
      s.error("pml", e.what());
    }
    s.finish();
  }

  const std::string& e = c.experiment;
  if (e == "resonance") {
    auto r = rd.child("resonance");
    detail::read_cavity(r, c.resonance.cavity);
    c.resonance.snapshots = r.boolean("snapshots", c.resonance.snapshots);
    r.finish();
  } else if (e == "purcell") {
    auto r = rd.child("purcell");
    auto& p = c.purcell;
    p.source = r.string("source", p.source);
    p.polarization = r.string("polarization", p.polarization);
    detail::read_cavity(r, p.cavity);
    p.Q = r.number("Q", p.Q);
    p.V_lambda_n = r.number("V_mode_lambda_n", p.V_lambda_n);
    p.lambda_nm = r.number("lambda_nm", p.lambda_nm);
    p.n = r.number("n", p.n);
    p.F_PC = r.number("F_PC", p.F_PC);
    p.eta_or = r.number("eta_or", p.eta_or);
    p.detunings = r.numbers("detunings", p.detunings);
    p.coupling_g = r.optional_number("coupling_g");
    if (p.source != "computed" && p.source != "given") r.error("source", "must be computed or given");
    if (p.source == "given") {
      if (!(p.Q > 0.0)) r.error("Q", "must be positive");
      if (!(p.V_lambda_n > 0.0)) r.error("V_mode_lambda_n", "must be positive");
      if (!(p.lambda_nm > 0.0)) r.error("lambda_nm", "must be positive");
      if (!(p.n > 0.0)) r.error("n", "must be positive");
    }
    if (p.polarization != "any" && p.polarization != "x-dipole" && p.polarization != "y-dipole")
      r.error("polarization", "must be any, x-dipole or y-dipole");
    if (!(p.F_PC >= 0.0)) r.error("F_PC", "must be >= 0");
    if (!(p.eta_or >= 0.0 && p.eta_or <= 1.0)) r.error("eta_or", "must lie in [0, 1]");
    if (p.detunings.empty()) r.error("detunings", "must not be empty");
    r.finish();
  } else if (e == "single-rate") {
    auto r = rd.child("single-rate");
    auto& p = c.single_rate;
    p.position = detail::vec3(r, "position", p.position);
    p.orientation = detail::vec3(r, "orientation", p.orientation);
    const auto f = r.optional_number("frequency");
    const auto l = r.optional_number("lambda_nm");
    if (f && l) r.error("lambda_nm", "give either frequency or lambda_nm, not both");
    if (f) p.frequency = *f;
    if (l) {
      if (*l > 0.0) p.frequency = c.units.nm_to_frequency(*l);
      else r.error("lambda_nm", "must be positive");
    }
    p.pulse_width = r.number("pulse_width", p.pulse_width);
    p.flux_half_width = r.number("flux_half_width", p.flux_half_width);
    const double nrm = std::sqrt(p.orientation[0] * p.orientation[0] + p.orientation[1] * p.orientation[1] +
                                 p.orientation[2] * p.orientation[2]);
    if (!(nrm > 0.0)) r.error("orientation", "must be nonzero");
    else for (auto& v : p.orientation) v /= nrm;
    if (!(p.frequency > 0.0)) r.error("frequency", "must be positive");
    if (!(p.pulse_width > 0.0)) r.error("pulse_width", "must be positive");
    if (!(p.flux_half_width > 0.0)) r.error("flux_half_width", "must be positive");
    if (std::abs(p.position[0]) > c.geometry.half_extent_x() || std::abs(p.position[1]) > c.geometry.half_extent_y())
      r.error("position", "must lie inside the crystal region");
    r.finish();
  } else if (e == "ensemble") {
    auto r = rd.child("ensemble");
    auto& p = c.ensemble;
    p.spec.n_emitters = static_cast<int>(r.integer("n_emitters", p.spec.n_emitters));
    p.spec.fmin = r.number("fmin", p.spec.fmin);
    p.spec.fmax = r.number("fmax", p.spec.fmax);
    p.spec.radius = r.number("radius", p.spec.radius);
    p.pulse_width = r.number("pulse_width", p.pulse_width);
    p.flux_half_width = r.number("flux_half_width", p.flux_half_width);
    if (p.spec.n_emitters < 1) r.error("n_emitters", "must be >= 1");
    if (!(p.spec.fmin > 0.0 && p.spec.fmax >= p.spec.fmin)) r.error("fmax", "requires 0 < fmin <= fmax");
    if (!(p.spec.radius > 0.0)) r.error("radius", "must be positive");
    if (p.spec.radius > std::min(c.geometry.half_extent_x(), c.geometry.half_extent_y()))
      r.error("radius", "sampling disc must lie inside the crystal region");
    r.finish();
  } else if (e == "rate-map") {
    auto r = rd.child("rate-map");
    auto& p = c.rate_map;
    if (const json* o = r.raw("offsets")) {
      p.offsets.clear();
      bool good = o->is_array() && !o->empty();
      if (good)
        for (const auto& x : *o) {
          if (!x.is_array() || x.size() != 2 || !x[0].is_number() || !x[1].is_number()) {
            good = false;
            break;
          }
          p.offsets.push_back({x[0].get<double>(), x[1].get<double>()});
        }
      if (!good) r.error("offsets", "expected a nonempty array of [x, y] pairs");
    }
    p.detunings = r.numbers("detunings", p.detunings);
    p.polarization = r.string("polarization", p.polarization);
    p.mode_frequency = r.optional_number("mode_frequency");
    p.mode_Q = r.optional_number("mode_Q");
    detail::read_cavity(r, p.cavity);
    p.pulse_width = r.number("pulse_width", p.pulse_width);
    p.flux_half_width = r.number("flux_half_width", p.flux_half_width);
    if (p.detunings.empty()) r.error("detunings", "must not be empty");
    if (p.polarization != "x-dipole" && p.polarization != "y-dipole") r.error("polarization", "must be x-dipole or y-dipole");
    if (p.mode_frequency.has_value() != p.mode_Q.has_value()) r.error("mode_Q", "give both mode_frequency and mode_Q, or neither");
    if (p.mode_Q && !(*p.mode_Q > 0.0)) r.error("mode_Q", "must be positive");
    if (p.mode_frequency && !(*p.mode_frequency > 0.0)) r.error("mode_frequency", "must be positive");
    r.finish();
  } else if (e == "bandgap") {
    auto r = rd.child("bandgap");
    auto& p = c.bandgap;
    p.fmin = r.number("fmin", p.fmin);
    p.fmax = r.number("fmax", p.fmax);
    p.df = r.number("df", p.df);
    p.frequencies = r.numbers("frequencies", p.frequencies);
    p.n_probes = static_cast<int>(r.integer("n_probes", p.n_probes));
    p.radius = r.number("radius", p.radius);
    p.threshold = r.number("threshold", p.threshold);
    p.flux_half_width = r.number("flux_half_width", p.flux_half_width);
    if (p.frequencies.empty() && !(p.fmin > 0.0 && p.fmax > p.fmin && p.df > 0.0))
      r.error("df", "requires 0 < fmin < fmax and df > 0");
    if (p.grid().size() < 3) r.error("frequencies", "need at least 3 frequencies");
    for (double f : p.frequencies)
      if (!(f > 0.0)) r.error("frequencies", "must be positive");
    if (p.n_probes < 1) r.error("n_probes", "must be >= 1");
    if (!(p.radius > 0.0)) r.error("radius", "must be positive");
    if (!(p.threshold > 0.0)) r.error("threshold", "must be positive");
    if (c.geometry.has_defect()) r.error("", "bandgap scans need a defect-free crystal");
    r.finish();
  } else if (e == "photon-stats") {
    auto r = rd.child("photon-stats");
    auto& p = c.photon;
    p.source = r.string("source", p.source);
    auto em = r.child("emitter");
    p.emitter.tau_ps = em.number("tau_ps", p.emitter.tau_ps);
    p.emitter.p_exc = em.number("p_exc", p.emitter.p_exc);
    p.emitter.eta_det = em.number("eta_det", p.emitter.eta_det);
    p.emitter.background_rate = em.number("background_rate", p.emitter.background_rate);
    const auto kind = em.string("kind", "two-level");
    if (kind == "two-level") p.emitter.kind = stats::EmitterKind::TwoLevel;
    else if (kind == "poissonian") p.emitter.kind = stats::EmitterKind::Poissonian;
    else em.error("kind", "must be two-level or poissonian");
    const auto bg = em.string("background", "pulse-synchronous");
    if (bg == "pulse-synchronous") p.emitter.background = stats::BackgroundKind::PulseSynchronous;
    else if (bg == "continuous") p.emitter.background = stats::BackgroundKind::Continuous;
    else em.error("background", "must be pulse-synchronous or continuous");
    try {
      p.emitter.validate();
    } catch (const std::exception& ex) {
      em.error("", ex.what());
    }
    em.finish();
    auto tr = r.child("train");
    p.train.period_ps = tr.number("period_ps", p.train.period_ps);
    p.train.pulses = tr.integer("pulses", p.train.pulses);
    p.train.jitter_ps = tr.number("jitter_ps", p.train.jitter_ps);
    try {
      p.train.validate();
    } catch (const std::exception& ex) {
      tr.error("", ex.what());
    }
    tr.finish();
    p.replicates = static_cast<int>(r.integer("replicates", p.replicates));
    auto hi = r.child("histogram");
    p.bin_ps = hi.integer("bin_ps", p.bin_ps);
    p.window_ps = hi.integer("window_ps", p.window_ps);
    const auto pairing = hi.string("pairing", "start-stop");
    if (pairing == "start-stop") p.pairing = stats::Pairing::StartStop;
    else if (pairing == "full") p.pairing = stats::Pairing::FullCorrelation;
    else hi.error("pairing", "must be start-stop or full");
    if (p.bin_ps <= 0 || p.window_ps <= 0 || p.window_ps % std::max<std::int64_t>(p.bin_ps, 1) != 0)
      hi.error("window_ps", "must be a positive multiple of bin_ps");
    hi.finish();
    auto g = r.child("g2");
    p.g2.window_decays = g.number("window_decays", p.g2.window_decays);
    p.g2.max_side_peaks = static_cast<int>(g.integer("max_side_peaks", p.g2.max_side_peaks));
    if (!(p.g2.window_decays > 0.0)) g.error("window_decays", "must be positive");
    if (p.g2.max_side_peaks < 3) g.error("max_side_peaks", "must be >= 3");
    g.finish();
    auto lt = r.child("lifetime");
    p.lifetime_bin_ps = lt.number("bin_ps", p.lifetime_bin_ps);
    p.irf_fwhm_ps = lt.number("irf_fwhm_ps", p.irf_fwhm_ps);
    p.fold_offset_ps = lt.number("fold_offset_ps", p.fold_offset_ps);
    if (!(p.fold_offset_ps >= 0.0 && p.fold_offset_ps < p.train.period_ps)) lt.error("fold_offset_ps", "must lie in [0, period_ps)");
    p.reference_tau_ps = lt.optional_number("reference_tau_ps");
    if (!(p.lifetime_bin_ps > 0.0)) lt.error("bin_ps", "must be positive");
    if (!(p.irf_fwhm_ps > 0.0)) lt.error("irf_fwhm_ps", "must be positive");
    if (p.reference_tau_ps && !(*p.reference_tau_ps > 0.0)) lt.error("reference_tau_ps", "must be positive");
    lt.finish();
    p.write_timestamps = r.boolean("write_timestamps", p.write_timestamps);
    auto in = r.child("inputs");
    p.timestamps_file = detail::resolve_file(in, "timestamps", base);
    p.histogram_file = detail::resolve_file(in, "histogram", base);
    p.decay_file = detail::resolve_file(in, "decay", base);
    p.spectrum_file = detail::resolve_file(in, "spectrum", base);
    in.finish();
    if (const json* w = r.raw("lorentzian_window")) {
      if (w->is_array() && w->size() == 2 && (*w)[0].is_number() && (*w)[1].is_number() && (*w)[0] < (*w)[1])
        p.lorentzian_window = std::array<double, 2>{(*w)[0].get<double>(), (*w)[1].get<double>()};
      else
        r.error("lorentzian_window", "expected [lambda_min, lambda_max]");
    }
    if (p.source != "simulate" && p.source != "analyze") r.error("source", "must be simulate or analyze");
    if (p.replicates < 1) r.error("replicates", "must be >= 1");
    if (p.source == "analyze" && p.timestamps_file.empty() && p.histogram_file.empty() && p.decay_file.empty() &&
        p.spectrum_file.empty())
      r.error("inputs", "analyze mode needs at least one input file");
    r.finish();
  }

  if (c.stochastic() && !c.seed) rd.error("seed", "required for stochastic experiments (or pass --seed)");
  rd.finish();
  return out;
}

/// Canonical form: every value resolved, keys sorted. Reading it back gives
/// the same form.
inline json canonical_json(const RunConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  if (c.output_dir) j["output_dir"] = *c.output_dir;
  j["units"] = {{"lambda_cav_nm", c.units.lambda_cav_nm}, {"a_over_lambda_cav", c.units.a_over_lambda_cav}};
  if (c.needs_geometry()) {
    const auto& d = c.solver.domain;
    j["geometry"] = geometry::to_json(c.geometry);
    j["solver"] = {{"dim", std::string(fdtd::to_string(d.dim))},
                   {"resolution", d.resolution},
                   {"courant", d.courant},
                   {"padding", d.padding},
                   {"air_z", d.air_z},
                   {"precision", c.solver.precision},
                   {"decay_threshold", c.solver.decay_threshold},
                   {"max_time", c.solver.max_time},
                   {"pml",
                    {{"thickness", d.pml.thickness},
                     {"order", d.pml.order},
                     {"reflection", d.pml.reflection},
                     {"kappa_max", d.pml.kappa_max},
                     {"alpha_max", d.pml.alpha_max}}}};
  }
  const std::string& e = c.experiment;
  if (e == "resonance") {
    auto r = detail::cavity_json(c.resonance.cavity);
    r["snapshots"] = c.resonance.snapshots;
    j["resonance"] = r;
  } else if (e == "purcell") {
    const auto& p = c.purcell;
    json r = detail::cavity_json(p.cavity);
    r.update({{"source", p.source}, {"polarization", p.polarization}, {"Q", p.Q}, {"V_mode_lambda_n", p.V_lambda_n},
              {"lambda_nm", p.lambda_nm}, {"n", p.n}, {"F_PC", p.F_PC}, {"eta_or", p.eta_or}, {"detunings", p.detunings}});
    r["coupling_g"] = p.coupling_g ? json(*p.coupling_g) : json(nullptr);
    j["purcell"] = r;
  } else if (e == "single-rate") {
    const auto& p = c.single_rate;
    j["single-rate"] = {{"position", p.position}, {"orientation", p.orientation}, {"frequency", p.frequency},
                        {"pulse_width", p.pulse_width}, {"flux_half_width", p.flux_half_width}};
  } else if (e == "ensemble") {
    const auto& p = c.ensemble;
    j["ensemble"] = {{"n_emitters", p.spec.n_emitters}, {"fmin", p.spec.fmin}, {"fmax", p.spec.fmax},
                     {"radius", p.spec.radius}, {"pulse_width", p.pulse_width}, {"flux_half_width", p.flux_half_width}};
  } else if (e == "rate-map") {
    const auto& p = c.rate_map;
    json offs = json::array();
    for (const auto& o : p.offsets) offs.push_back({o[0], o[1]});
    json r = detail::cavity_json(p.cavity);
    r.update({{"offsets", offs}, {"detunings", p.detunings}, {"polarization", p.polarization},
              {"pulse_width", p.pulse_width}, {"flux_half_width", p.flux_half_width}});
    r["mode_frequency"] = p.mode_frequency ? json(*p.mode_frequency) : json(nullptr);
    r["mode_Q"] = p.mode_Q ? json(*p.mode_Q) : json(nullptr);
    j["rate-map"] = r;
  } else if (e == "bandgap") {
    const auto& p = c.bandgap;
    j["bandgap"] = {{"fmin", p.fmin}, {"fmax", p.fmax}, {"df", p.df}, {"frequencies", p.frequencies},
                    {"n_probes", p.n_probes}, {"radius", p.radius}, {"threshold", p.threshold},
                    {"flux_half_width", p.flux_half_width}};
  } else if (e == "photon-stats") {
    const auto& p = c.photon;
    json r;
    r["source"] = p.source;
    r["emitter"] = {{"tau_ps", p.emitter.tau_ps},
                    {"p_exc", p.emitter.p_exc},
                    {"eta_det", p.emitter.eta_det},
                    {"background_rate", p.emitter.background_rate},
                    {"kind", p.emitter.kind == stats::EmitterKind::TwoLevel ? "two-level" : "poissonian"},
                    {"background", p.emitter.background == stats::BackgroundKind::PulseSynchronous ? "pulse-synchronous" : "continuous"}};
    r["train"] = {{"period_ps", p.train.period_ps}, {"pulses", p.train.pulses}, {"jitter_ps", p.train.jitter_ps}};
    r["replicates"] = p.replicates;
    r["histogram"] = {{"bin_ps", p.bin_ps}, {"window_ps", p.window_ps},
                      {"pairing", p.pairing == stats::Pairing::StartStop ? "start-stop" : "full"}};
    r["g2"] = {{"window_decays", p.g2.window_decays}, {"max_side_peaks", p.g2.max_side_peaks}};
    r["lifetime"] = {{"bin_ps", p.lifetime_bin_ps}, {"irf_fwhm_ps", p.irf_fwhm_ps}, {"fold_offset_ps", p.fold_offset_ps}};
    r["lifetime"]["reference_tau_ps"] = p.reference_tau_ps ? json(*p.reference_tau_ps) : json(nullptr);
    r["write_timestamps"] = p.write_timestamps;
    json in = json::object();
    auto put = [&](const char* k, const std::string& v) {
      if (!v.empty()) in[k] = v;
    };
    put("timestamps", p.timestamps_file);
    put("histogram", p.histogram_file);
    put("decay", p.decay_file);
    put("spectrum", p.spectrum_file);
    r["inputs"] = in;
    if (p.lorentzian_window) r["lorentzian_window"] = {(*p.lorentzian_window)[0], (*p.lorentzian_window)[1]};
    j["photon-stats"] = r;
  }
  return j;
}

inline std::string canonical_text(const RunConfig& c) { return canonical_json(c).dump(2) + "\n"; }

inline std::string config_hash(const RunConfig& c) { return io::sha256_hex(canonical_json(c).dump()); }

}  // namespace pcsim::cli
