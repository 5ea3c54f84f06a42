#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>
#include <string>
#include <vector>

#include "qicloak/engine.hpp"
#include "qicloak/errors.hpp"
#include "qicloak/params.hpp"

// Flat key=value scenario files. '#' starts a comment, blank lines are
// ignored. Keys: the physical parameters (N, n_th, eta, phi, G, chi),
// protocol, tolerance, dim_cap, oracle, and sweep.<param> = v1,v2,... for
// sweep axes (axis order in the file fixes the nesting order, first axis
// outermost).
namespace qicloak::config {

struct ConfigDocument {
  engine::ScenarioConfig base;
  std::vector<engine::SweepAxis> axes;
  bool has_G = false;        // whether the file pinned the mixer gain
  bool has_protocol = false;  // whether the file selected a protocol
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_number(const std::string& text, const std::string& key, int line) {
  if (text.empty())
    throw ConfigError("missing value for " + key, key, line);
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + text.size())
    throw ConfigError("value for " + key + " is not a number: '" + text + "'", key, line);
  if (!std::isfinite(v))
    throw ConfigError("value for " + key + " must be finite", key, line);
  return v;
}

inline bool parse_bool(const std::string& text, const std::string& key, int line) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw ConfigError("value for " + key + " must be on/off, true/false, or 1/0", key, line);
}

inline std::vector<double> parse_list(const std::string& text, const std::string& key,
                                      int line) {
  std::vector<double> values;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t comma = text.find(',', pos);
    const std::string piece =
        trim(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    values.push_back(parse_number(piece, key, line));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return values;
}

inline void check_param_value(const ProtocolParams& base, const std::string& param,
                              double value, const std::string& key, int line) {
  ProtocolParams probe = base;
  try {
    engine::set_param(probe, param, value);
    probe.validate();
  } catch (const InvalidParameterError& e) {
    throw ConfigError(e.what(), key, line);
  }
}

}  // namespace detail

inline ConfigDocument parse_config(std::istream& in) {
  ConfigDocument doc;
  std::string raw;
  std::set<std::string> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = detail::trim(raw);
    if (s.empty()) continue;
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key=value, got '" + s + "'", "", line);
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", "", line);
    if (!seen.insert(key).second)
      throw ConfigError("duplicate key " + key, key, line);

    if (key.rfind("sweep.", 0) == 0) {
      const std::string param = key.substr(6);
      const std::vector<double> values = detail::parse_list(value, key, line);
      for (double v : values)
        detail::check_param_value(doc.base.params, param, v, key, line);
      doc.axes.push_back({param, values});
      if (param == "G") doc.has_G = true;
    } else if (key == "protocol") {
      try {
        doc.base.protocol = engine::protocol_from_name(value);
        doc.has_protocol = true;
      } catch (const InvalidParameterError& e) {
        throw ConfigError(e.what(), key, line);
      }
    } else if (key == "tolerance") {
      const double v = detail::parse_number(value, key, line);
      if (!(v > 0.0)) throw ConfigError("tolerance must be > 0", key, line);
      doc.base.tolerance = v;
    } else if (key == "dim_cap") {
      const double v = detail::parse_number(value, key, line);
      if (!(v >= 16.0) || v != std::floor(v) || v > 9e15)
        throw ConfigError("dim_cap must be an integer >= 16", key, line);
      doc.base.side_cap = long(v);
    } else if (key == "oracle") {
      doc.base.oracle = detail::parse_bool(value, key, line);
    } else if (key == "N" || key == "n_th" || key == "eta" || key == "phi" ||
               key == "G" || key == "chi") {
      const double v = detail::parse_number(value, key, line);
      detail::check_param_value(doc.base.params, key, v, key, line);
      engine::set_param(doc.base.params, key, v);
      if (key == "G") doc.has_G = true;
    } else {
      throw ConfigError("unknown key " + key, key, line);
    }
  }
  return doc;
}

inline ConfigDocument load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path, "", 0);
  return parse_config(f);
}

// A mixer protocol with the gain left unset would throw on every evaluation
// (G = 1 carries no signal), so give it a small default above the brightness.
inline void apply_gain_default(ConfigDocument& doc) {
  if (engine::uses_mixer(doc.base.protocol) && !doc.has_G)
    doc.base.params.G = 1.0 + std::max(doc.base.params.N, 1e-3);
}

}  // namespace qicloak::config
