#ifndef DARKRING_CONFIG_HPP
#define DARKRING_CONFIG_HPP

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "darkring/error.hpp"

namespace darkring {

enum class Dimension { length, power, time, temperature, ratio, integer, text, list };

/// One accepted key: canonical unit (the unit a bare number is read in) and
/// default, if any. Values are stored in SI after conversion.
struct KeySpec {
  const char* name;
  Dimension dim;
  const char* unit;           // canonical unit for bare numbers
  const char* default_value;  // nullptr: required
};

namespace detail {

// clang-format off
inline const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema{
      {"beam.w0", Dimension::length, "m", nullptr},
      {"beam.power", Dimension::power, "W", nullptr},
      {"beam.wavelength", Dimension::length, "m", ""},
      {"beam.detuning_nm", Dimension::length, "nm", ""},
      {"beam.ell", Dimension::integer, "", nullptr},
      {"beam.rc_over_w0", Dimension::ratio, "", nullptr},
      {"optics.f", Dimension::length, "m", nullptr},
      {"optics.grid_n", Dimension::integer, "", "1024"},
      {"optics.grid_extent", Dimension::length, "m", "0.02"},
      {"optics.z_span", Dimension::length, "m", "0.01"},
      {"optics.n_planes", Dimension::integer, "", "201"},
      {"optics.focal_n", Dimension::integer, "", "512"},
      {"optics.focal_pitch", Dimension::length, "m", "2e-6"},
      {"optics.n_rho", Dimension::integer, "", "256"},
      {"optics.rho_max", Dimension::length, "m", "200e-6"},
      {"optics.propagator", Dimension::text, "", "angular-spectrum"},
      {"analysis.window_fraction", Dimension::ratio, "", "1.0"},
      {"analysis.local_window_fraction", Dimension::ratio, "", "0.25"},
      {"analysis.p_max", Dimension::integer, "", "1"},
      {"analysis.chirp_form", Dimension::text, "", "direct"},
      {"scan.ells", Dimension::list, "", ""},
      {"rc_search.ells", Dimension::list, "", "0,1,2"},
      {"rc_search.lo", Dimension::ratio, "", "0.5"},
      {"rc_search.hi", Dimension::ratio, "", "1.0"},
      {"rc_search.coarse_steps", Dimension::integer, "", "11"},
      {"rc_search.tolerance", Dimension::ratio, "", "1e-3"},
      {"rc_search.z_span", Dimension::length, "m", "0.015"},
      {"rc_search.n_planes", Dimension::integer, "", "61"},
      {"atoms.n", Dimension::integer, "", "4000"},
      {"atoms.sigma", Dimension::length, "m", "250e-6"},
      {"atoms.temperature_uK", Dimension::temperature, "uK", "5"},
      {"atoms.seed", Dimension::integer, "", "1"},
      {"schedule.ramp_ms", Dimension::time, "ms", "5"},
      {"schedule.duration_ms", Dimension::time, "ms", "1500"},
      {"schedule.dt_us", Dimension::time, "us", "10"},
      {"schedule.displacement_mm", Dimension::length, "mm", "0"},
      {"schedule.record_ms", Dimension::time, "ms", "10"},
      {"schedule.snapshot_ms", Dimension::list, "", ""},
      {"schedule.gravity", Dimension::integer, "", "1"},
      {"schedule.recoil_kicks", Dimension::integer, "", "0"},
      {"output.directory", Dimension::text, "", "out"},
      {"output.formats", Dimension::list, "", "csv,pgm,raw"},
  };
  return schema;
}
// clang-format on

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// SI factor of a unit suffix for a dimension; nullopt when the suffix does
/// not belong to it.
inline std::optional<double> unit_factor(Dimension d, const std::string& u) {
  static const std::map<std::string, double> length{{"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}, {"cm", 1e-2}};
  static const std::map<std::string, double> power{{"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}};
  static const std::map<std::string, double> time{{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}};
  static const std::map<std::string, double> temperature{{"K", 1.0}, {"mK", 1e-3}, {"uK", 1e-6}, {"nK", 1e-9}};
  const std::map<std::string, double>* table = nullptr;
  switch (d) {
    case Dimension::length: table = &length; break;
    case Dimension::power: table = &power; break;
    case Dimension::time: table = &time; break;
    case Dimension::temperature: table = &temperature; break;
    default: return u.empty() ? std::optional<double>(1.0) : std::nullopt;
  }
  const auto it = table->find(u);
  if (it == table->end()) return std::nullopt;
  return it->second;
}

}  // namespace detail

/// Flat INI configuration: [section] headers, key = value lines, '#' or ';'
/// comments. Numeric values take an optional unit suffix ("1.7 mm"); a bare
/// number is read in the key's canonical unit.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& origin = "config") {
    Config c;
    c.origin_ = origin;
    std::string line, section;
    std::size_t no = 0;
    while (std::getline(is, line)) {
      ++no;
      const auto hash = line.find_first_of("#;");
      const std::string text = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']') throw ConfigError(fmt::format("{}:{}: malformed section header '{}'", origin, no, text));
        section = detail::trim(text.substr(1, text.size() - 2));
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw ConfigError(fmt::format("{}:{}: expected key = value, got '{}'", origin, no, text));
      const std::string key = detail::trim(text.substr(0, eq));
      const std::string value = detail::trim(text.substr(eq + 1));
      if (section.empty()) throw ConfigError(fmt::format("{}:{}: key '{}' appears before any [section]", origin, no, key));
      const std::string full = section + "." + key;
      const KeySpec* spec = find_spec(full);
      if (!spec) throw ConfigError(fmt::format("{}:{}: unknown key '{}'", origin, no, full));
      if (c.values_.count(full)) throw ConfigError(fmt::format("{}:{}: key '{}' given twice", origin, no, full));
      c.values_[full] = convert(*spec, value, fmt::format("{}:{}", origin, no));
      c.lines_[full] = no;
    }
    c.fill_defaults();
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(fmt::format("cannot open config file '{}'", path));
    return parse(is, path);
  }

  [[nodiscard]] bool has(const std::string& key) const {
    const auto it = values_.find(key);
    return it != values_.end() && !it->second.empty();
  }

  [[nodiscard]] double number(const std::string& key) const {
    const std::string& v = raw(key);
    return std::stod(v);
  }

  [[nodiscard]] long long integer(const std::string& key) const {
    const double v = number(key);
    return static_cast<long long>(std::llround(v));
  }

  [[nodiscard]] std::string text(const std::string& key) const { return raw(key); }

  [[nodiscard]] std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  [[nodiscard]] std::vector<double> number_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : list(key)) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || used == 0) throw ConfigError(fmt::format("{}: '{}' in '{}' is not a number", where(key), s, key));
      out.push_back(v);
    }
    return out;
  }

  void set(const std::string& key, const std::string& value) {
    const KeySpec* spec = find_spec(key);
    if (!spec) throw ConfigError(fmt::format("unknown key '{}'", key));
    values_[key] = convert(*spec, value, "override");
  }

  /// "file:line" of a key, or the file when it came from a default.
  [[nodiscard]] std::string where(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? origin_ : fmt::format("{}:{}", origin_, it->second);
  }

  /// Resolved configuration in canonical units, every key listed.
  [[nodiscard]] std::string manifest() const {
    std::string out, section;
    for (const auto& spec : detail::config_schema()) {
      const std::string name = spec.name;
      const auto dot = name.find('.');
      const std::string sec = name.substr(0, dot);
      if (sec != section) {
        out += fmt::format("{}[{}]\n", out.empty() ? "" : "\n", sec);
        section = sec;
      }
      const auto it = values_.find(name);
      std::string v = it == values_.end() ? "" : it->second;
      if (!v.empty() && is_numeric(spec.dim)) {
        const double si = std::stod(v);
        const double f = *detail::unit_factor(spec.dim, spec.unit);
        v = fmt::format("{}", si / f);
        if (spec.unit[0]) v += std::string(" ") + spec.unit;
      }
      out += fmt::format("{} = {}\n", name.substr(dot + 1), v);
    }
    return out;
  }

 private:
  static bool is_numeric(Dimension d) {
    return d != Dimension::text && d != Dimension::list;
  }

  static const KeySpec* find_spec(const std::string& key) {
    for (const auto& s : detail::config_schema())
      if (key == s.name) return &s;
    return nullptr;
  }

  /// Validates and converts a value to its SI decimal string.
  static std::string convert(const KeySpec& spec, const std::string& value, const std::string& at) {
    if (spec.dim == Dimension::text || spec.dim == Dimension::list) return value;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}: value of '{}' is not a number: '{}'", at, spec.name, value));
    }
    const std::string unit = detail::trim(value.substr(used));
    const auto factor = detail::unit_factor(spec.dim, unit.empty() ? spec.unit : unit);
    if (!factor) throw ConfigError(fmt::format("{}: unit '{}' does not fit key '{}'", at, unit, spec.name));
    if (!std::isfinite(v) && !(spec.dim == Dimension::ratio && std::isinf(v) && v > 0))
      throw ConfigError(fmt::format("{}: value of '{}' must be finite", at, spec.name));
    if (spec.dim == Dimension::integer && v != std::floor(v))
      throw ConfigError(fmt::format("{}: value of '{}' must be an integer", at, spec.name));
    return fmt::format("{}", v * *factor);
  }

  void fill_defaults() {
    for (const auto& s : detail::config_schema()) {
      if (values_.count(s.name)) continue;
      if (!s.default_value) throw ConfigError(fmt::format("{}: missing required key '{}'", origin_, s.name));
      values_[s.name] = std::string(s.default_value).empty() ? "" : convert(s, s.default_value, "default");
    }
    if (has("beam.wavelength") == has("beam.detuning_nm"))
      throw ConfigError(fmt::format("{}: give exactly one of 'beam.wavelength' and 'beam.detuning_nm'", origin_));
  }

  [[nodiscard]] const std::string& raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) throw ConfigError(fmt::format("{}: key '{}' has no value", origin_, key));
    return it->second;
  }

  std::string origin_;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
};

}  // namespace darkring

#endif  // DARKRING_CONFIG_HPP
