#pragma once

#include <string>
#include <vector>

#include "pcsim/geometry/crystal.hpp"
#include "pcsim/io/hash.hpp"
#include "pcsim/io/json_reader.hpp"

namespace pcsim::geometry {

using io::json;

/// Canonical structured form: lattice.{a,r,periods}, slab.{d,n,n_eff},
/// defect.overrides[].
inline json to_json(const PhotonicCrystalSpec& s) {
  json ov = json::array();
  for (const auto& o : s.overrides) {
    json e = {{"i", o.i}, {"j", o.j}, {"dx", o.dx}, {"dy", o.dy}, {"remove", o.remove}};
    e["radius"] = o.radius ? json(*o.radius) : json(nullptr);
    ov.push_back(std::move(e));
  }
  return json{{"lattice", {{"a", s.a}, {"r", s.r}, {"periods", {s.periods_x, s.periods_y}}}},
              {"slab", {{"d", s.d}, {"n", s.n}, {"n_eff", s.n_eff}}},
              {"defect", {{"overrides", ov}}}};
}

/// Reads a spec from the structured form. `defect.cavity = true` builds the
/// default single-defect cavity (with `defect.shift`) and appends any explicit
/// overrides. Errors are collected, not thrown.
inline PhotonicCrystalSpec read_crystal_spec(io::ObjectReader& rd) {
  PhotonicCrystalSpec s;
  auto lat = rd.child("lattice");
  s.a = lat.number("a", s.a);
  s.r = lat.number("r", s.r);
  if (const json* p = lat.raw("periods")) {
    if (p->is_array() && p->size() == 2 && (*p)[0].is_number_integer() && (*p)[1].is_number_integer()) {
      s.periods_x = (*p)[0].get<int>();
      s.periods_y = (*p)[1].get<int>();
    } else {
      lat.error("periods", "expected two integers");
    }
  }
  lat.finish();

  auto slab = rd.child("slab");
  s.d = slab.number("d", s.d);
  s.n = slab.number("n", s.n);
  s.n_eff = slab.number("n_eff", s.n_eff);
  slab.finish();

  auto def = rd.child("defect");
  const bool cavity = def.boolean("cavity", false);
  const double shift = def.number("shift", kDefaultCavityShift);
  std::vector<HoleOverride> explicit_ov;
  if (const json* ov = def.raw("overrides")) {
    if (!ov->is_array()) {
      def.error("overrides", "expected an array");
    } else {
      for (std::size_t k = 0; k < ov->size(); ++k) {
        io::ObjectReader o(&(*ov)[k], def.join("overrides[" + std::to_string(k) + "]"), rd.errors());
        HoleOverride h;
        h.i = static_cast<int>(o.integer("i", 0));
        h.j = static_cast<int>(o.integer("j", 0));
        h.dx = o.number("dx", 0.0);
        h.dy = o.number("dy", 0.0);
        h.radius = o.optional_number("radius");
        h.remove = o.boolean("remove", false);
        o.finish();
        explicit_ov.push_back(h);
      }
    }
  }
  def.finish();

  s.overrides = explicit_ov;
  if (cavity) {
    PhotonicCrystalSpec base = s;
    base.overrides.clear();
    if (!base.violations().empty()) return s;  // reported below by the caller's validation
    if (!(shift >= 0.0 && shift < 0.5)) {
      def.error("shift", "must lie in [0, 0.5)");
      return s;
    }
    s = make_single_defect_cavity(base, shift);
    s.overrides.insert(s.overrides.end(), explicit_ov.begin(), explicit_ov.end());
  }
  return s;
}

inline PhotonicCrystalSpec crystal_spec_from_json(const json& j) {
  std::vector<std::string> errors;
  io::ObjectReader rd(&j, "", errors);
  auto s = read_crystal_spec(rd);
  rd.finish();
  for (const auto& v : s.violations()) errors.push_back(v);
  if (!errors.empty()) {
    std::string msg = "invalid geometry:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  return s;
}

inline std::string spec_hash(const PhotonicCrystalSpec& s) { return io::sha256_hex(to_json(s).dump()); }

}  // namespace pcsim::geometry
