#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcsim/cli/config.hpp"
#include "pcsim/cli/pool.hpp"
#include "pcsim/core/random.hpp"
#include "pcsim/ensemble/rates.hpp"
#include "pcsim/geometry/rasterize.hpp"
#include "pcsim/io/files.hpp"
#include "pcsim/modal/cavity.hpp"
#include "pcsim/modal/figures.hpp"
#include "pcsim/sources/spectrum.hpp"
#include "pcsim/stats/fits.hpp"
#include "pcsim/stats/formats.hpp"
#include "pcsim/version.hpp"

namespace pcsim::cli {

/// Problems with the request itself (exit code 2), as opposed to failures
/// while running it (exit code 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunContext {
  fs::path out_dir;
  unsigned threads = 1;
  std::ostream* log = nullptr;
  std::mutex log_mu;

  void say(const std::string& line) {
    if (!log) return;
    std::lock_guard<std::mutex> lk(log_mu);
    *log << line << '\n' << std::flush;
  }
};

/// Output file names for an experiment, known before anything runs.
inline std::vector<std::string> planned_outputs(const RunConfig& c) {
  std::vector<std::string> o{"config.json"};
  const auto& e = c.experiment;
  if (e == "resonance") {
    o.insert(o.end(), {"eps.raw", "eps.json", "modes.json", "ringdown_x-dipole.csv", "ringdown_y-dipole.csv",
                       "spectrum_x-dipole.csv", "spectrum_y-dipole.csv"});
    // One pair per mode found, so only the pattern is known up front.
    if (c.resonance.snapshots) o.insert(o.end(), {"mode_*.raw", "mode_*.json"});
  } else if (e == "purcell") {
    o.insert(o.end(), {"purcell.json", "enhancement.csv"});
  } else if (e == "single-rate") {
    o.insert(o.end(), {"rate.json", "power.csv", "power_bulk.csv"});
  } else if (e == "ensemble") {
    o.insert(o.end(), {"ensemble.csv", "summary.json"});
  } else if (e == "rate-map") {
    o.insert(o.end(), {"rate_map.csv", "map.json"});
  } else if (e == "bandgap") {
    o.insert(o.end(), {"bandgap.csv", "probes.csv", "gap.json"});
  } else if (e == "photon-stats") {
    const auto& p = c.photon;
    if (p.source == "simulate") {
      for (int r = 0; r < p.replicates; ++r) {
        const std::string s = p.replicates > 1 ? "_r" + std::to_string(r) : "";
        if (p.write_timestamps) o.push_back("timestamps" + s + ".csv");
        o.insert(o.end(), {"histogram" + s + ".csv", "g2" + s + ".json", "decay" + s + ".csv", "lifetime" + s + ".json"});
      }
      o.push_back("summary.json");
    } else {
      if (!p.timestamps_file.empty() || !p.histogram_file.empty()) o.insert(o.end(), {"histogram.csv", "g2.json"});
      if (!p.timestamps_file.empty() || !p.decay_file.empty()) o.insert(o.end(), {"decay.csv", "lifetime.json"});
      if (!p.spectrum_file.empty()) o.push_back("lorentzian.json");
    }
  }
  return o;
}

namespace detail {

inline geometry::MaterialMap material(const RunConfig& c, RunContext& ctx) {
  auto m = geometry::rasterize(c.geometry, c.solver.domain);
  const auto& g = m.grid;
  ctx.say("grid " + std::to_string(g.cells[0]) + "x" + std::to_string(g.cells[1]) + "x" + std::to_string(g.cells[2]) +
          " cells at resolution " + io::fmt(g.resolution));
  return m;
}

inline json vec_json(const std::array<double, 3>& v) { return json::array({v[0], v[1], v[2]}); }

inline json emitter_json(const ensemble::EmitterSpec& e, const UnitSystem& u) {
  return {{"position", vec_json(e.position)},
          {"orientation", vec_json(e.orientation)},
          {"frequency", e.frequency},
          {"lambda_norm", e.wavelength()},
          {"lambda_nm", u.frequency_to_nm(e.frequency)}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Seed of photon-statistics replicate r.
inline std::uint64_t replicate_seed(std::uint64_t seed, int r) {
  return r == 0 ? seed : Rng::stream(seed, static_cast<std::uint64_t>(r)).bits();
}

}  // namespace detail

template <class Real>
void run_resonance(const RunConfig& c, io::OutputSet& out, RunContext& ctx) {
  const auto m = detail::material(c, ctx);
  const auto& g = m.grid;
  io::SnapshotMeta em;
  em.components = {"eps"};
  em.shape = modal::detail::cell_shape(g);
  em.spacing = g.dx();
  out.add("eps.raw", io::raw_float32<double>({&m.eps_cell}));
  out.add("eps.json", io::snapshot_sidecar(em));

  auto opt = c.resonance.cavity;
  opt.profiles = c.resonance.snapshots;
  const auto a = modal::analyze_cavity<Real>(m, opt);
  ctx.say("found " + std::to_string(a.modes.size()) + " mode(s)");

  json modes = json::array();
  for (const auto& md : a.modes) modes.push_back(md.to_json(c.units));
  out.add("modes.json", detail::dump({{"modes", modes},
                                      {"diagnostic", a.diagnostic.empty() ? "ok" : a.diagnostic},
                                      {"resolution", g.resolution},
                                      {"mode_volume_available", opt.profiles}}));

  for (const auto& tr : a.traces) {
    io::Csv csv{"t", "value", "model", "residual"};
    for (std::size_t i = 0; i < tr.value.size(); ++i) {
      const double t = static_cast<double>(i) * tr.dt;
      const double f = modal::ringdown_model(tr.fit, t);
      csv.cell(t).cell(tr.value[i]).cell(f).cell(tr.value[i] - f).end_row();
    }
    out.add("ringdown_" + tr.label + ".csv", csv.str());
    if (tr.value.size() >= 64) {
      sources::SpectrumOptions so;
      so.units = c.units;
      const auto sp = sources::emission_spectrum(tr.value, tr.dt, tr.value.size() / 2, so);
      io::Csv sc{"frequency", "amplitude", "lambda_nm"};
      for (std::size_t k = 1; k < sp.frequency.size(); ++k) sc.cell(sp.frequency[k]).cell(sp.amplitude[k]).cell(sp.wavelength_nm[k]).end_row();
      out.add("spectrum_" + tr.label + ".csv", sc.str());
    }
  }

  if (opt.profiles) {
    for (std::size_t k = 0; k < a.modes.size(); ++k) {
      const auto& md = a.modes[k];
      std::vector<Array3<double>> parts;
      io::SnapshotMeta sm;
      for (int comp = 0; comp < md.dims && comp < 3; ++comp) {
        const auto& p = md.profile[static_cast<std::size_t>(comp)];
        if (p.size() == 0) continue;
        Array3<double> re(p.shape(), 0.0), im(p.shape(), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
          re.values()[i] = p.values()[i].real();
          im.values()[i] = p.values()[i].imag();
        }
        const std::string name = comp == 0 ? "Ex" : comp == 1 ? "Ey" : "Ez";
        sm.components.push_back(name + "_re");
        sm.components.push_back(name + "_im");
        parts.push_back(std::move(re));
        parts.push_back(std::move(im));
      }
      std::vector<const Array3<double>*> ptrs;
      for (const auto& p : parts) ptrs.push_back(&p);
      sm.shape = em.shape;
      sm.spacing = g.dx();
      sm.units = "normalized so that max(eps |E|^2) = 1";
      out.add("mode_" + std::to_string(k) + ".raw", io::raw_float32<double>(ptrs));
      out.add("mode_" + std::to_string(k) + ".json", io::snapshot_sidecar(sm));
    }
  }
}

/// 3 / (4 pi^2) Q / V with V already in units of (lambda/n)^d.
inline double purcell_from_reduced_volume(double Q, double V_lambda_n) {
  if (!(Q > 0.0) || !(V_lambda_n > 0.0)) throw std::invalid_argument("purcell: Q and V must be positive");
  return 3.0 / (4.0 * kPi * kPi) * Q / V_lambda_n;
}

template <class Real>
void run_purcell(const RunConfig& c, io::OutputSet& out, RunContext& ctx) {
  const auto& p = c.purcell;
  double Q = p.Q, V = p.V_lambda_n, lambda_nm = p.lambda_nm, n = p.n;
  int dims = 3;
  json mode_json = nullptr;
  if (p.source == "computed") {
    const auto m = detail::material(c, ctx);
    auto opt = p.cavity;
    opt.profiles = true;
    const auto a = modal::analyze_cavity<Real>(m, opt);
    const auto* md = modal::select_mode(a, p.polarization);
    if (!md) throw std::runtime_error("no cavity mode found" + (a.diagnostic.empty() ? "" : ": " + a.diagnostic));
    Q = md->Q;
    V = md->V_mode_lambda_n;
    lambda_nm = c.units.frequency_to_nm(md->frequency);
    n = md->n;
    dims = md->dims;
    mode_json = md->to_json(c.units);
  }
  const double F_cav = purcell_from_reduced_volume(Q, V);
  const double kappa = modal::cavity_decay_rate_si(lambda_nm, Q);
  json j{{"F_cav", F_cav},  {"Q", Q},           {"V_mode_lambda_over_n", V}, {"dims", dims}, {"lambda_cav_nm", lambda_nm},
         {"n", n},          {"F_PC", p.F_PC},   {"eta_or", p.eta_or},        {"kappa_si", kappa},
         {"source", p.source}, {"mode", mode_json}};
  if (p.coupling_g) {
    const auto chk = modal::weak_coupling_check(kappa, *p.coupling_g);
    j["coupling"] = {{"g", *p.coupling_g}, {"weak", chk.weak},
                     {"kappa_over_g", std::isinf(chk.margin) ? json(nullptr) : json(chk.margin)}};
    if (!chk.weak) ctx.say("warning: kappa <= |g|, the weak-coupling rate formula does not apply");
  }
  io::Csv csv{"detuning_linewidths", "lambda_nm", "lorentzian", "enhancement"};
  for (double d : p.detunings) {
    modal::EnhancementInput in;
    in.F_cav = F_cav;
    in.F_PC = p.F_PC;
    in.eta_or = p.eta_or;
    in.lambda_cav = lambda_nm;
    in.lambda = lambda_nm * (1.0 + d / Q);
    in.Q = Q;
    csv.cell(d).cell(in.lambda).cell(modal::lorentzian_factor(in.lambda, lambda_nm, Q)).cell(modal::rate_enhancement(in)).end_row();
  }
  out.add("purcell.json", detail::dump(j));
  out.add("enhancement.csv", csv.str());
}

template <class Real>
void run_single_rate(const RunConfig& c, io::OutputSet& out, RunContext& ctx) {
  const auto m = detail::material(c, ctx);
  ensemble::EmitterSpec e;
  e.position = c.single_rate.position;
  e.orientation = c.single_rate.orientation;
  e.frequency = c.single_rate.frequency;
  if (!ensemble::in_dielectric(m, e)) throw UsageError("single-rate.position: emitter sits in an air hole");
  ensemble::Provenance prov;
  prov.config_hash = config_hash(c);
  const auto r = ensemble::single_emitter_rate<Real>(
      m, e, c.rate_options(c.single_rate.pulse_width, c.single_rate.flux_half_width), prov);
  ctx.say("Gamma/Gamma0 = " + io::fmt(r.ratio) + " (" + r.flag + ")");
  out.add("rate.json", detail::dump({{"ratio", r.ratio},
                                     {"P_pc", r.P_pc},
                                     {"P_bulk", r.P_bulk},
                                     {"valid", r.valid},
                                     {"flag", r.flag},
                                     {"emitter", detail::emitter_json(e, c.units)},
                                     {"resolution", r.provenance.resolution},
                                     {"bulk_reference", r.provenance.bulk_reference}}));
  io::Csv pc{"P", "flag"}, bulk{"P", "flag"};
  pc.cell(r.P_pc).cell(r.flag).end_row();
  bulk.cell(r.P_bulk).cell(r.flag).end_row();
  out.add("power.csv", pc.str());
  out.add("power_bulk.csv", bulk.str());
}

template <class Real>
void run_ensemble(const RunConfig& c, io::OutputSet& out, RunContext& ctx) {
  const auto m = detail::material(c, ctx);
  auto spec = c.ensemble.spec;
  spec.seed = *c.seed;
  const auto emitters = ensemble::plan_ensemble(m, spec);
  const auto opt = c.rate_options(c.ensemble.pulse_width, c.ensemble.flux_half_width);
  ensemble::Provenance prov;
  prov.seed = spec.seed;
  prov.config_hash = config_hash(c);
  std::size_t done = 0;
  const auto results = run_indexed<ensemble::RateResult>(
      emitters.size(), ctx.threads,
      [&](std::size_t i) { return ensemble::single_emitter_rate<Real>(m, emitters[i], opt, prov); },
      [&](std::size_t) {
        ++done;
        if (done % 10 == 0 || done == emitters.size())
          ctx.say("emitters " + std::to_string(done) + "/" + std::to_string(emitters.size()));
      });
  // lambda in nm; 3D runs append the out-of-plane orientation.
  const bool three_d = m.grid.dim == fdtd::Dimensionality::Full3D;
  std::vector<std::string> header{"emitter_id", "x", "y", "ux", "uy", "lambda", "ratio", "flag"};
  if (three_d) header.push_back("uz");
  io::Csv csv(header);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& e = emitters[i];
    csv.cell(i).cell(e.position[0]).cell(e.position[1]).cell(e.orientation[0]).cell(e.orientation[1]);
    csv.cell(c.units.frequency_to_nm(e.frequency)).cell(results[i].ratio).cell(results[i].flag);
    if (three_d) csv.cell(e.orientation[2]);
    csv.end_row();
  }
  const auto s = ensemble::summarize(results);
  ctx.say("mean Gamma/Gamma0 = " + io::fmt(s.mean) + ", variance " + io::fmt(s.variance));
  out.add("ensemble.csv", csv.str());
  out.add("summary.json", detail::dump({{"mean", s.mean},
                                        {"variance", s.variance},
                                        {"n", s.n},
                                        {"n_invalid", s.n_invalid},
                                        {"flagged", s.flagged},
                                        {"band_frequency", {spec.fmin, spec.fmax}},
                                        {"band_nm", {c.units.frequency_to_nm(spec.fmax), c.units.frequency_to_nm(spec.fmin)}},
                                        {"seed", spec.seed},
                                        {"resolution", m.grid.resolution}}));
}

template <class Real>
void run_rate_map(const RunConfig& c, io::OutputSet& out, RunContext& ctx) {
  const auto m = detail::material(c, ctx);
  const auto& p = c.rate_map;
  modal::ResonanceMode mode;
  if (p.mode_frequency) {
    mode.frequency = *p.mode_frequency;
    mode.Q = *p.mode_Q;
    mode.polarization = p.polarization;
  } else {
    auto opt = p.cavity;
    opt.profiles = false;
    const auto a = modal::analyze_cavity<Real>(m, opt);
    const auto* md = modal::select_mode(a, p.polarization);
    if (!md) throw std::runtime_error("no " + p.polarization + " cavity mode found" + (a.diagnostic.empty() ? "" : ": " + a.diagnostic));
    mode = *md;
    ctx.say("cavity mode f = " + io::fmt(mode.frequency) + ", Q = " + io::fmt(mode.Q));
  }
  ensemble::RateMapSpec spec{p.offsets, p.detunings};
  auto map = ensemble::plan_rate_map(m, mode, spec);
  const auto opt = c.rate_options(p.pulse_width, p.flux_half_width);
  run_indexed<int>(map.offsets.size(), ctx.threads, [&](std::size_t i) {
    ensemble::run_rate_map_row<Real>(m, map, i, opt);
    return 0;
  });
  std::vector<std::string> header{"offset_x", "offset_y", "marker"};
  for (double d : map.detunings) header.push_back("d" + io::fmt(d));
  io::Csv csv(header);
  double best = -1.0;
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i < map.offsets.size(); ++i) {
    csv.cell(map.offsets[i][0]).cell(map.offsets[i][1]).cell(map.marker[i]);
    for (std::size_t j = 0; j < map.detunings.size(); ++j) {
      const double v = map.ratio[i][j];
      if (std::isnan(v)) csv.cell("nan");
      else csv.cell(v);
      if (!std::isnan(v) && v > best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
    csv.end_row();
  }
  json offs = json::array();
  for (const auto& o : map.offsets) offs.push_back({o[0], o[1]});
  json ratio = json::array();
  for (const auto& row : map.ratio) {
    json r = json::array();
    for (double v : row) r.push_back(std::isnan(v) ? json(nullptr) : json(v));
    ratio.push_back(r);
  }
  out.add("rate_map.csv", csv.str());
  out.add("map.json", detail::dump({{"lambda_cav_norm", map.lambda_cav},
                                    {"lambda_cav_nm", c.units.to_nm(map.lambda_cav)},
                                    {"Q", map.Q},
                                    {"polarization", map.polarization},
                                    {"offsets", offs},
                                    {"detunings", map.detunings},
                                    {"frequencies", map.frequencies},
                                    {"markers", map.marker},
                                    {"ratio", ratio},
                                    {"max", {{"ratio", best}, {"offset", offs.empty() ? json(nullptr) : offs[bi]}, {"detuning", map.detunings[bj]}}}}));
}

template <class Real>
void run_bandgap(const RunConfig& c, io::OutputSet& out, RunContext& ctx) {
  const auto m = detail::material(c, ctx);
  const auto& p = c.bandgap;
  ensemble::BandgapSpec spec;
  spec.frequencies = p.grid();
  spec.n_probes = p.n_probes;
  spec.radius = p.radius;
  spec.seed = *c.seed;
  spec.threshold = p.threshold;
  const auto probes = ensemble::plan_bandgap(m, spec);
  // One broadband pulse covers the scanned range.
  const double fw = spec.frequencies.back() - spec.frequencies.front();
  const auto opt = c.rate_options(fw, p.flux_half_width);
  std::size_t done = 0;
  const auto spectra = run_indexed<ensemble::RatioSpectrum>(
      probes.size(), ctx.threads,
      [&](std::size_t i) { return ensemble::ratio_spectrum<Real>(m, probes[i].position, probes[i].orientation, spec.frequencies, opt); },
      [&](std::size_t) { ctx.say("probes " + std::to_string(++done) + "/" + std::to_string(probes.size())); });
  const auto scan = ensemble::reduce_bandgap(spec, probes, spectra);

  io::Csv csv{"lambda_norm", "lambda_nm", "mean_ratio", "frequency"};
  for (std::size_t k = 0; k < scan.frequencies.size(); ++k) {
    const double f = scan.frequencies[k];
    csv.cell(1.0 / f).cell(c.units.frequency_to_nm(f)).cell(scan.mean_ratio[k]).cell(f).end_row();
  }
  std::vector<std::string> ph{"frequency"};
  for (std::size_t i = 0; i < probes.size(); ++i) ph.push_back("probe_" + std::to_string(i));
  io::Csv pcsv(ph);
  for (std::size_t k = 0; k < scan.frequencies.size(); ++k) {
    pcsv.cell(scan.frequencies[k]);
    for (const auto& row : scan.per_probe) pcsv.cell(row[k]);
    pcsv.end_row();
  }
  const auto& gp = scan.gap;
  json probes_json = json::array();
  for (std::size_t i = 0; i < probes.size(); ++i)
    probes_json.push_back({{"position", detail::vec_json(probes[i].position)},
                           {"orientation", detail::vec_json(probes[i].orientation)},
                           {"flag", scan.flags[i]}});
  json gap{{"found", gp.found}, {"threshold", spec.threshold}, {"diagnostic", gp.found ? "ok" : gp.diagnostic}, {"probes", probes_json}};
  if (gp.found) {
    gap["f_low"] = gp.f_low;
    gap["f_high"] = gp.f_high;
    gap["lambda_nm"] = {c.units.frequency_to_nm(gp.f_high), c.units.frequency_to_nm(gp.f_low)};
    gap["open_low"] = gp.open_low;
    gap["open_high"] = gp.open_high;
    ctx.say("gap a/lambda " + io::fmt(gp.f_low) + " .. " + io::fmt(gp.f_high));
  } else {
    ctx.say(gp.diagnostic);
  }
  out.add("bandgap.csv", csv.str());
  out.add("probes.csv", pcsv.str());
  out.add("gap.json", detail::dump(gap));
}

namespace detail {

struct PhotonProducts {
  std::string timestamps, histogram, g2, decay, lifetime;
  stats::G2Estimate g2_est;
  stats::LifetimeFit fit;
  bool has_g2 = false, has_fit = false;
};

inline void analyze_histogram(const stats::CoincidenceHistogram& h, const PhotonParams& p, PhotonProducts& o) {
  o.histogram = stats::histogram_csv(h);
  o.g2_est = stats::g2_zero(h, p.g2);
  auto j = stats::to_json(o.g2_est);
  j["pairing"] = h.pairing == stats::Pairing::StartStop ? "start-stop" : "full";
  j["bin_ps"] = h.bin_ps;
  j["window_ps"] = h.window_ps;
  o.g2 = dump(j);
  o.has_g2 = true;
}

inline void analyze_decay(const stats::DecayTrace& d, const PhotonParams& p, double period_ps, PhotonProducts& o) {
  o.decay = stats::decay_csv(d);
  stats::LifetimeOptions lo;
  lo.irf_fwhm_ps = p.irf_fwhm_ps;
  lo.period_ps = period_ps;
  o.fit = stats::fit_lifetime(d, lo);
  auto j = stats::to_json(o.fit);
  if (p.reference_tau_ps && o.fit.ok) {
    const auto rr = stats::rate_ratio(*p.reference_tau_ps, o.fit.tau_ps, 0.0, o.fit.tau_error);
    j["rate_ratio"] = {{"reference_tau_ps", *p.reference_tau_ps}, {"F", rr.F}, {"error", rr.error}};
  }
  o.lifetime = dump(j);
  o.has_fit = true;
}

inline void analyze_streams(const stats::PhotonStreams& s, const PhotonParams& p, PhotonProducts& o) {
  analyze_histogram(stats::hbt_histogram(s, p.bin_ps, p.window_ps, p.pairing), p, o);
  std::vector<stats::Timestamp> all(s.channel[0]);
  all.insert(all.end(), s.channel[1].begin(), s.channel[1].end());
  analyze_decay(stats::decay_from_timestamps(all, s.period_ps, p.lifetime_bin_ps, p.fold_offset_ps), p, s.period_ps, o);
}

}  // namespace detail

inline void run_photon_stats(const RunConfig& c, io::OutputSet& out, RunContext& ctx) {
  const auto& p = c.photon;
  if (p.source == "analyze") {
    detail::PhotonProducts o;
    if (!p.timestamps_file.empty()) {
      const auto s = stats::streams_from_csv(io::read_text(p.timestamps_file), p.train.period_ps);
      if (s.channel[0].empty() || s.channel[1].empty()) throw std::runtime_error("timestamps: both channels need events");
      detail::analyze_streams(s, p, o);
    }
    if (!p.histogram_file.empty())
      detail::analyze_histogram(stats::histogram_from_csv(io::read_text(p.histogram_file), p.train.period_ps), p, o);
    if (!p.decay_file.empty())
      detail::analyze_decay(stats::decay_from_csv(io::read_text(p.decay_file)), p, p.train.period_ps, o);
    if (o.has_g2) {
      out.add("histogram.csv", o.histogram);
      out.add("g2.json", o.g2);
      ctx.say("g2(0) = " + io::fmt(o.g2_est.g2) + " +- " + io::fmt(o.g2_est.error));
    }
    if (o.has_fit) {
      out.add("decay.csv", o.decay);
      out.add("lifetime.json", o.lifetime);
      ctx.say("lifetime: " + o.fit.diagnostic + ", tau = " + io::fmt(o.fit.tau_ps) + " ps");
    }
    if (!p.spectrum_file.empty()) {
      const auto t = io::parse_csv(io::read_text(p.spectrum_file));
      const auto cl = t.column("lambda_nm"), ci = t.column("intensity");
      std::vector<double> lam, inten;
      for (const auto& r : t.rows) {
        lam.push_back(io::to_double(r[cl]));
        inten.push_back(io::to_double(r[ci]));
      }
      std::optional<std::pair<double, double>> win;
      if (p.lorentzian_window) win = std::pair{(*p.lorentzian_window)[0], (*p.lorentzian_window)[1]};
      const auto lf = stats::fit_lorentzian(lam, inten, win);
      out.add("lorentzian.json", detail::dump(stats::to_json(lf)));
      ctx.say("lorentzian: " + lf.diagnostic + ", Q = " + io::fmt(lf.Q));
    }
    return;
  }

  const int R = p.replicates;
  const auto products = run_indexed<detail::PhotonProducts>(static_cast<std::size_t>(R), ctx.threads, [&](std::size_t r) {
    const auto s = stats::simulate_photon_stream(p.emitter, p.train, detail::replicate_seed(*c.seed, static_cast<int>(r)));
    if (s.channel[0].empty() || s.channel[1].empty()) throw std::runtime_error("simulation produced no detections on a channel");
    detail::PhotonProducts o;
    if (p.write_timestamps) o.timestamps = stats::streams_csv(s);
    detail::analyze_streams(s, p, o);
    return o;
  });
  json reps = json::array();
  double g_sum = 0.0, t_sum = 0.0;
  int t_n = 0;
  for (int r = 0; r < R; ++r) {
    const auto& o = products[static_cast<std::size_t>(r)];
    const std::string sfx = R > 1 ? "_r" + std::to_string(r) : "";
    if (p.write_timestamps) out.add("timestamps" + sfx + ".csv", o.timestamps);
    out.add("histogram" + sfx + ".csv", o.histogram);
    out.add("g2" + sfx + ".json", o.g2);
    out.add("decay" + sfx + ".csv", o.decay);
    out.add("lifetime" + sfx + ".json", o.lifetime);
    g_sum += o.g2_est.g2;
    if (o.fit.ok) {
      t_sum += o.fit.tau_ps;
      ++t_n;
    }
    reps.push_back({{"replicate", r},
                    {"seed", detail::replicate_seed(*c.seed, r)},
                    {"g2_zero", o.g2_est.g2},
                    {"g2_error", o.g2_est.error},
                    {"tau_ps", o.fit.ok ? json(o.fit.tau_ps) : json(nullptr)},
                    {"lifetime_diagnostic", o.fit.diagnostic}});
  }
  json summary{{"replicates", reps}, {"mean_g2_zero", g_sum / R}, {"mean_tau_ps", t_n ? json(t_sum / t_n) : json(nullptr)}};
  if (p.reference_tau_ps && t_n) {
    const auto rr = stats::rate_ratio(*p.reference_tau_ps, t_sum / t_n);
    summary["rate_ratio"] = rr.F;
  }
  ctx.say("mean g2(0) = " + io::fmt(g_sum / R) + (t_n ? ", mean tau = " + io::fmt(t_sum / t_n) + " ps" : ""));
  out.add("summary.json", detail::dump(summary));
}

template <class Real>
void dispatch(const RunConfig& c, io::OutputSet& out, RunContext& ctx) {
  const auto& e = c.experiment;
  if (e == "resonance") run_resonance<Real>(c, out, ctx);
  else if (e == "purcell") run_purcell<Real>(c, out, ctx);
  else if (e == "single-rate") run_single_rate<Real>(c, out, ctx);
  else if (e == "ensemble") run_ensemble<Real>(c, out, ctx);
  else if (e == "rate-map") run_rate_map<Real>(c, out, ctx);
  else if (e == "bandgap") run_bandgap<Real>(c, out, ctx);
  else if (e == "photon-stats") run_photon_stats(c, out, ctx);
  else throw UsageError("unknown experiment kind '" + e + "'");
}

inline json manifest_base(const RunConfig& c) {
  return {{"tool", kToolName},
          {"version", kVersion},
          {"experiment", c.experiment},
          {"config_hash", config_hash(c)},
          {"seed", c.seed ? json(*c.seed) : json(nullptr)}};
}

/// Runs one validated config into ctx.out_dir. Outputs appear only when the
/// whole run succeeds; manifest.json is written last.
inline json execute(const RunConfig& c, RunContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  io::OutputSet out(ctx.out_dir);
  out.add("config.json", canonical_text(c));
  if (c.solver.precision == "double") dispatch<double>(c, out, ctx);
  else dispatch<float>(c, out, ctx);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json m = manifest_base(c);
  m["dry_run"] = false;
  m["wall_time_s"] = wall;
  json files = json::array();
  for (const auto& e : out.entries()) files.push_back({{"name", e.name}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  m["outputs"] = files;
  out.commit("manifest.json", detail::dump(m));
  return m;
}

/// Manifest of what a run would write; nothing is simulated.
inline json dry_run(const RunConfig& c, RunContext& ctx) {
  json m = manifest_base(c);
  m["dry_run"] = true;
  json files = json::array();
  for (const auto& n : planned_outputs(c)) files.push_back({{"name", n}});
  m["outputs"] = files;
  m["config"] = canonical_json(c);
  io::write_atomic(ctx.out_dir / "manifest.json", detail::dump(m));
  return m;
}

}  // namespace pcsim::cli
