#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <string_view>

#include "chainsync/csv.hpp"
#include "chainsync/params.hpp"

namespace chainsync {

// Flat `key = value` configuration files. Keys match the parameter field
// names; omitted keys keep the built-in defaults. Values take optional unit
// suffixes: lengths `bit`/`kbit`, rates `bps`/`kbps`/`Mbps`, times `s`/`ms`.
// `#` starts a comment. Everything is normalized to bits and seconds.

namespace detail {

enum class Unit { Plain, Length, Rate, Time, Count, Protocol };

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline double unit_scale(Unit unit, const std::string& suffix, const std::string& key) {
  if (suffix.empty()) return 1.0;
  switch (unit) {
    case Unit::Length:
      if (suffix == "bit") return 1.0;
      if (suffix == "kbit") return 1e3;
      break;
    case Unit::Rate:
      if (suffix == "bps") return 1.0;
      if (suffix == "kbps") return 1e3;
      if (suffix == "Mbps") return 1e6;
      break;
    case Unit::Time:
      if (suffix == "s") return 1.0;
      if (suffix == "ms") return 1e-3;
      break;
    default:
      break;
  }
  throw config_error("invalid unit '" + suffix + "' for key '" + key + "'");
}

inline double parse_value(const std::string& text, Unit unit, const std::string& key) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double number = std::strtod(begin, &end);
  if (end == begin) throw config_error("malformed number for key '" + key + "'");
  return number * unit_scale(unit, trim(std::string_view(end)), key);
}

inline int parse_count(const std::string& text, const std::string& key) {
  const double v = parse_value(text, Unit::Count, key);
  const int n = static_cast<int>(v);
  if (static_cast<double>(n) != v)
    throw config_error("key '" + key + "' requires an integer value");
  return n;
}

}  // namespace detail

/// Parses a configuration document and validates the result.
inline ModelConfig parse_config(std::istream& in) {
  using detail::Unit;
  ModelConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(line_no) +
                         ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
    const std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty() || value.empty())
      throw config_error("config line " + std::to_string(line_no) +
                         ": expected 'key = value'");
    if (!seen.insert(key).second)
      throw config_error("config line " + std::to_string(line_no) +
                         ": duplicate key '" + key + "'");

    auto& bc = cfg.blockchain;
    auto& lk = cfg.link;
    auto& dev = cfg.device;
    if (key == "lambda_b") bc.lambda_b = detail::parse_value(value, Unit::Plain, key);
    else if (key == "l_b") bc.l_b = detail::parse_value(value, Unit::Length, key);
    else if (key == "l_h") bc.l_h = detail::parse_value(value, Unit::Length, key);
    else if (key == "l_n") bc.l_n = detail::parse_value(value, Unit::Length, key);
    else if (key == "l_r") bc.l_r = detail::parse_value(value, Unit::Length, key);
    else if (key == "l_i") bc.l_i = detail::parse_value(value, Unit::Length, key);
    else if (key == "l_poi") bc.l_poi = detail::parse_value(value, Unit::Length, key);
    else if (key == "p_m") bc.p_m = detail::parse_value(value, Unit::Plain, key);
    else if (key == "rate_ul_bps") lk.rate_ul_bps = detail::parse_value(value, Unit::Rate, key);
    else if (key == "rate_dl_bps") lk.rate_dl_bps = detail::parse_value(value, Unit::Rate, key);
    else if (key == "p_e_ul") lk.p_e_ul = detail::parse_value(value, Unit::Plain, key);
    else if (key == "p_e_dl") lk.p_e_dl = detail::parse_value(value, Unit::Plain, key);
    else if (key == "t_c") lk.t_c = detail::parse_value(value, Unit::Time, key);
    else if (key == "t_w") lk.t_w = detail::parse_value(value, Unit::Time, key);
    else if (key == "n_peers") lk.n_peers = detail::parse_count(value, key);
    else if (key == "p_s") dev.p_s = detail::parse_value(value, Unit::Plain, key);
    else if (key == "t_s") dev.t_s = detail::parse_value(value, Unit::Time, key);
    else if (key == "protocol") {
      if (value == "P1") dev.protocol = Protocol::P1;
      else if (value == "P2") dev.protocol = Protocol::P2;
      else throw config_error("config line " + std::to_string(line_no) +
                              ": protocol must be P1 or P2");
    } else if (key == "n_max") cfg.n_max = detail::parse_count(value, key);
    else if (key == "eps_trunc") cfg.eps_trunc = detail::parse_value(value, Unit::Plain, key);
    else throw config_error("config line " + std::to_string(line_no) +
                            ": unknown key '" + key + "'");
  }
  return validate_config(cfg);
}

inline ModelConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  return parse_config(in);
}

/// Writes a complete configuration in base units (bits, seconds, bps); the
/// output re-parses to a bit-identical config.
inline void write_config(std::ostream& os, const ModelConfig& cfg) {
  const auto& bc = cfg.blockchain;
  const auto& lk = cfg.link;
  const auto& dev = cfg.device;
  os << "# model configuration (bits, seconds)\n";
  os << "lambda_b = " << csv_double(bc.lambda_b) << '\n';
  os << "l_b = " << csv_double(bc.l_b) << '\n';
  os << "l_h = " << csv_double(bc.l_h) << '\n';
  os << "l_n = " << csv_double(bc.l_n) << '\n';
  os << "l_r = " << csv_double(bc.l_r) << '\n';
  os << "l_i = " << csv_double(bc.l_i) << '\n';
  os << "l_poi = " << csv_double(bc.l_poi) << '\n';
  os << "p_m = " << csv_double(bc.p_m) << '\n';
  os << "rate_ul_bps = " << csv_double(lk.rate_ul_bps) << '\n';
  os << "rate_dl_bps = " << csv_double(lk.rate_dl_bps) << '\n';
  os << "p_e_ul = " << csv_double(lk.p_e_ul) << '\n';
  os << "p_e_dl = " << csv_double(lk.p_e_dl) << '\n';
  os << "t_c = " << csv_double(lk.t_c) << '\n';
  os << "t_w = " << csv_double(lk.t_w) << '\n';
  os << "n_peers = " << lk.n_peers << '\n';
  os << "p_s = " << csv_double(dev.p_s) << '\n';
  os << "t_s = " << csv_double(dev.t_s) << '\n';
  os << "protocol = " << to_string(dev.protocol) << '\n';
  os << "n_max = " << cfg.n_max << '\n';
  os << "eps_trunc = " << csv_double(cfg.eps_trunc) << '\n';
}

}  // namespace chainsync
