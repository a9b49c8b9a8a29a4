#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pcsim::io {

using json = nlohmann::json;

/// Strict reader over one JSON object. Every problem is appended to the
/// shared error list instead of throwing, so a whole config can be checked
/// in one pass. Keys never queried are reported by finish().
class ObjectReader {
 public:
  ObjectReader(const json* obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(&errors) {
    if (obj_ && !obj_->is_object()) {
      error("", "expected an object");
      obj_ = nullptr;
    }
  }

  bool present(const std::string& key) {
    seen_.insert(key);
    return obj_ && obj_->contains(key);
  }

  const json* raw(const std::string& key) {
    if (!present(key)) return nullptr;
    return &obj_->at(key);
  }

  double number(const std::string& key, double def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number()) {
      error(key, "expected a number");
      return def;
    }
    return v->get<double>();
  }

  std::optional<double> optional_number(const std::string& key) {
    const json* v = raw(key);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_number()) {
      error(key, "expected a number");
      return std::nullopt;
    }
    return v->get<double>();
  }

  long long integer(const std::string& key, long long def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number_integer()) {
      error(key, "expected an integer");
      return def;
    }
    return v->get<long long>();
  }

  std::optional<unsigned long long> optional_unsigned(const std::string& key) {
    const json* v = raw(key);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      error(key, "expected a non-negative integer");
      return std::nullopt;
    }
    return v->get<unsigned long long>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_boolean()) {
      error(key, "expected true or false");
      return def;
    }
    return v->get<bool>();
  }

  std::string string(const std::string& key, std::string def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_string()) {
      error(key, "expected a string");
      return def;
    }
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_array()) {
      error(key, "expected an array of numbers");
      return def;
    }
    std::vector<double> out;
    for (const auto& x : *v) {
      if (!x.is_number()) {
        error(key, "expected an array of numbers");
        return def;
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  /// Child object reader; an absent key yields a reader over nothing, which
  /// returns defaults everywhere.
  ObjectReader child(const std::string& key) {
    const json* v = raw(key);
    return ObjectReader(v, join(key), *errors_);
  }

  void error(const std::string& key, const std::string& msg) {
    const std::string where = key.empty() ? path_ : join(key);
    errors_->push_back((where.empty() ? std::string("<root>") : where) + ": " + msg);
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Reports keys that were never read (strict mode).
  void finish() {
    if (!obj_) return;
    for (auto it = obj_->begin(); it != obj_->end(); ++it)
      if (!seen_.count(it.key())) errors_->push_back(join(it.key()) + ": unknown key");
  }

  const std::string& path() const { return path_; }
  std::vector<std::string>& errors() { return *errors_; }

 private:
  const json* obj_ = nullptr;
  std::string path_;
  std::vector<std::string>* errors_;
  std::set<std::string> seen_;
};

}  // namespace pcsim::io
