#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "pcsim/io/files.hpp"
#include "pcsim/stats/fits.hpp"
#include "pcsim/stats/g2.hpp"
#include "pcsim/stats/photon.hpp"

namespace pcsim::stats {

inline std::string streams_csv(const PhotonStreams& s) {
  io::Csv c{"channel", "t_ps"};
  for (int ch = 0; ch < 2; ++ch)
    for (auto t : s.channel[ch]) c.cell(ch + 1).cell(static_cast<long long>(t)).end_row();
  return c.str();
}

/// Reads `channel,t_ps` with channels 1 and 2 (0 and 1 also accepted).
inline PhotonStreams streams_from_csv(std::string_view text, double period_ps) {
  const auto t = io::parse_csv(text);
  const auto cc = t.column("channel"), ct = t.column("t_ps");
  PhotonStreams s;
  s.period_ps = period_ps;
  int lo = 1;
  for (const auto& r : t.rows)
    if (r[cc] == "0") lo = 0;
  for (const auto& r : t.rows) {
    const int ch = std::stoi(r[cc]) - lo;
    if (ch < 0 || ch > 1) throw std::runtime_error("channel must be 1 or 2, got " + r[cc]);
    const double v = io::to_double(r[ct]);
    s.channel[ch].push_back(std::llround(v));
  }
  for (auto& c : s.channel) std::sort(c.begin(), c.end());
  return s;
}

inline std::string histogram_csv(const CoincidenceHistogram& h) {
  io::Csv c{"delay_ps", "counts"};
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    c.cell(static_cast<long long>(std::llround(h.delay(b)))).cell(static_cast<unsigned long long>(h.counts[b])).end_row();
  return c.str();
}

/// Reads `delay_ps,counts` on a uniform symmetric delay grid.
inline CoincidenceHistogram histogram_from_csv(std::string_view text, double period_ps) {
  const auto t = io::parse_csv(text);
  const auto cd = t.column("delay_ps"), cn = t.column("counts");
  if (t.rows.size() < 3) throw std::runtime_error("histogram needs at least 3 bins");
  CoincidenceHistogram h;
  h.period_ps = period_ps;
  const auto d0 = std::llround(io::to_double(t.rows.front()[cd]));
  const auto d1 = std::llround(io::to_double(t.rows[1][cd]));
  h.bin_ps = d1 - d0;
  if (h.bin_ps <= 0) throw std::runtime_error("histogram delays must ascend");
  h.window_ps = -d0;
  if (h.window_ps % h.bin_ps != 0 || static_cast<std::size_t>(2 * h.window_ps / h.bin_ps + 1) != t.rows.size())
    throw std::runtime_error("histogram delays must be a symmetric uniform grid");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (std::llround(io::to_double(t.rows[i][cd])) != d0 + static_cast<long long>(i) * h.bin_ps)
      throw std::runtime_error("histogram delays are not uniform");
    const double n = io::to_double(t.rows[i][cn]);
    if (n < 0) throw std::runtime_error("negative histogram count");
    h.counts.push_back(static_cast<std::uint64_t>(std::llround(n)));
  }
  h.pairs = h.total();
  return h;
}

inline std::string decay_csv(const DecayTrace& d) {
  io::Csv c{"t_ps", "counts"};
  for (std::size_t i = 0; i < d.counts.size(); ++i) c.cell(d.t_ps[i]).cell(d.counts[i]).end_row();
  return c.str();
}

inline DecayTrace decay_from_csv(std::string_view text) {
  const auto t = io::parse_csv(text);
  const auto ct = t.column("t_ps"), cn = t.column("counts");
  DecayTrace d;
  for (const auto& r : t.rows) {
    d.t_ps.push_back(io::to_double(r[ct]));
    d.counts.push_back(io::to_double(r[cn]));
  }
  if (d.t_ps.size() < 2) throw std::runtime_error("decay trace needs at least 2 bins");
  d.bin_ps = d.t_ps[1] - d.t_ps[0];
  return d;
}

inline io::json to_json(const G2Estimate& g) {
  return {{"g2_zero", g.g2},        {"error", g.error},           {"g2_counts", g.g2_counts},
          {"g2_corrected", g.g2_corrected}, {"peak_decay_ps", g.tau_ps}, {"floor", g.floor},
          {"central_area", g.central_area}, {"side_mean", g.side_mean}, {"side_peaks", g.side_peaks},
          {"mode", g.mode},         {"warning", g.warning}};
}

inline io::json to_json(const LifetimeFit& f) {
  return {{"ok", f.ok},
          {"parameters", {{"tau_ps", f.tau_ps}, {"t0_ps", f.t0_ps}, {"amplitude", f.amplitude}, {"background", f.background}}},
          {"errors", {{"tau_ps", f.tau_error}}},
          {"residual_norm", f.residual_norm},
          {"diagnostic", f.diagnostic}};
}

inline io::json to_json(const LorentzianFit& f) {
  return {{"ok", f.ok},
          {"parameters", {{"lambda_c", f.lambda_c}, {"Q", f.Q}, {"amplitude", f.amplitude}, {"baseline", f.baseline}}},
          {"errors",
           {{"lambda_c", f.lambda_c_error}, {"Q", f.Q_error}, {"amplitude", f.amplitude_error}, {"baseline", f.baseline_error}}},
          {"residual_norm", f.residual_norm},
          {"diagnostic", f.diagnostic}};
}

}  // namespace pcsim::stats
