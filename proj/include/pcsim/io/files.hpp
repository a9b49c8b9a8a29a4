#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "pcsim/core/array.hpp"
#include "pcsim/io/hash.hpp"
#include "pcsim/io/json_reader.hpp"

namespace pcsim::io {

namespace fs = std::filesystem;

/// Shortest round-trip text for a double, independent of locale.
inline std::string fmt(double v) {
  char buf[32];
  for (int p = 6; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
inline void write_atomic(const fs::path& p, std::string_view bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for " + p.string());
    }
  }
  fs::rename(tmp, p);
}

/// Output files of one run. Content is staged under temporary names and only
/// renamed into place by commit(); uncommitted files are removed.
class OutputSet {
 public:
  struct Entry {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
  };

  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() { discard(); }

  const fs::path& dir() const { return dir_; }

  void add(const std::string& name, std::string_view bytes) {
    for (const auto& e : entries_)
      if (e.name == name) throw std::logic_error("duplicate output " + name);
    fs::create_directories(dir_);
    const fs::path tmp = staged(name);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
    entries_.push_back({name, sha256_hex(bytes), bytes.size()});
  }

  const std::vector<Entry>& entries() const { return entries_; }

  /// Renames every staged file into place, then writes `last` (the manifest)
  /// atomically so it only appears once everything it lists exists.
  void commit(const std::string& last_name = {}, std::string_view last = {}) {
    for (const auto& e : entries_) fs::rename(staged(e.name), dir_ / e.name);
    committed_ = true;
    if (!last_name.empty()) write_atomic(dir_ / last_name, last);
  }

  void discard() noexcept {
    if (committed_) return;
    for (const auto& e : entries_) {
      std::error_code ec;
      fs::remove(staged(e.name), ec);
    }
    entries_.clear();
  }

 private:
  fs::path staged(const std::string& name) const { return dir_ / ("." + name + ".partial." + std::to_string(::getpid())); }

  fs::path dir_;
  std::vector<Entry> entries_;
  bool committed_ = false;
};

/// Minimal CSV builder; values are written with fmt().
class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) text_ += ',';
      text_ += h;
      first = false;
    }
    text_ += '\n';
  }
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
    text_ += '\n';
  }

  Csv& cell(double v) { return raw(fmt(v)); }
  Csv& cell(long long v) { return raw(std::to_string(v)); }
  Csv& cell(unsigned long long v) { return raw(std::to_string(v)); }
  Csv& cell(int v) { return raw(std::to_string(v)); }
  Csv& cell(std::size_t v) { return raw(std::to_string(v)); }
  Csv& cell(const std::string& s) { return raw(s); }
  Csv& cell(const char* s) { return raw(s); }
  Csv& end_row() {
    text_ += '\n';
    fresh_ = true;
    return *this;
  }
  const std::string& str() const { return text_; }

 private:
  Csv& raw(std::string_view s) {
    if (!fresh_) text_ += ',';
    text_ += s;
    fresh_ = false;
    return *this;
  }
  std::string text_;
  bool fresh_ = true;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("CSV column '" + std::string(name) + "' missing");
  }
};

inline CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::size_t a = 0;
    while (true) {
      const std::size_t b = line.find(',', a);
      std::string_view c = line.substr(a, b == std::string_view::npos ? std::string_view::npos : b - a);
      while (!c.empty() && c.front() == ' ') c.remove_prefix(1);
      while (!c.empty() && c.back() == ' ') c.remove_suffix(1);
      cells.emplace_back(c);
      if (b == std::string_view::npos) break;
      a = b + 1;
    }
    if (line_no++ == 0) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size())
        throw std::runtime_error("CSV row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                 " fields, header has " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw std::runtime_error("CSV is empty");
  return t;
}

inline double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("not a number: '" + s + "'");
  return v;
}

/// Raw little-endian float32 arrays, component-major, C order within each.
template <class T>
std::string raw_float32(const std::vector<const Array3<T>*>& comps) {
  std::string out;
  for (const auto* a : comps) {
    for (const T v : a->values()) {
      const float f = static_cast<float>(v);
      auto u = std::bit_cast<std::uint32_t>(f);
      if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
      char b[4];
      std::memcpy(b, &u, 4);
      out.append(b, 4);
    }
  }
  return out;
}

struct SnapshotMeta {
  std::vector<std::string> components;
  std::array<std::size_t, 3> shape{};
  long time_index = 0;
  double time = 0.0;
  std::string units = "normalized (c = eps0 = mu0 = 1, length a)";
  double spacing = 0.0;
};

inline std::string snapshot_sidecar(const SnapshotMeta& m) {
  json j{{"dtype", "float32"},
         {"byte_order", "little"},
         {"layout", "component-major, C order (x slowest)"},
         {"components", m.components},
         {"shape", {m.shape[0], m.shape[1], m.shape[2]}},
         {"time_index", m.time_index},
         {"time", m.time},
         {"spacing", m.spacing},
         {"units", m.units}};
  return j.dump(2) + "\n";
}

inline std::vector<float> read_raw_float32(std::string_view bytes) {
  if (bytes.size() % 4) throw std::runtime_error("raw float32 data has a partial value");
  std::vector<float> v(bytes.size() / 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, bytes.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
    v[i] = std::bit_cast<float>(u);
  }
  return v;
}

/// Monitor series as `t,value`.
inline std::string series_csv(const std::vector<double>& t, const std::vector<double>& v) {
  Csv c{"t", "value"};
  for (std::size_t i = 0; i < t.size() && i < v.size(); ++i) c.cell(t[i]).cell(v[i]).end_row();
  return c.str();
}

}  // namespace pcsim::io
