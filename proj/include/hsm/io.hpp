#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsm/field.hpp"
#include "hsm/grid.hpp"
#include "hsm/params.hpp"

namespace hsm {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// CSV dump with columns r, z1..zm, value.
inline void write_field_csv(std::ostream& os, const Field& f) {
  const Grid& g = *f.grid;
  os << "r";
  for (int a = 0; a < g.params.m; ++a) os << ",z" << (a + 1);
  os << ",value\n";
  for (std::size_t q = 0; q < g.size(); ++q) {
    os << format_double(g.r_of(q));
    for (int a = 0; a < g.params.m; ++a) os << ',' << format_double(g.z_of(q, a));
    os << ',' << format_double(f.values[q]) << '\n';
  }
}

inline void write_field_csv(const std::string& path, const Field& f) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_field_csv: cannot open " + path);
  write_field_csv(os, f);
}

/// Read back only the value column of a field CSV (grid supplied separately).
inline std::vector<double> read_field_csv_values(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_field_csv_values: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_field_csv_values: empty file");
  std::vector<double> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto pos = line.rfind(',');
    out.push_back(std::stod(line.substr(pos + 1)));
  }
  return out;
}

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
inline void put_f64(std::ostream& os, double x) {
  std::uint64_t v;
  std::memcpy(&v, &x, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}
inline double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double x;
  std::memcpy(&x, &v, 8);
  return x;
}

}  // namespace detail

inline constexpr std::uint32_t kFieldDumpVersion = 1;

/// Compact binary field dump: magic "HSMF", version u32, axis count u32,
/// per-axis sizes u32, little-endian f64 payload.
inline void write_field_binary(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_field_binary: cannot open " + path);
  const Grid& g = *f.grid;
  os.write("HSMF", 4);
  detail::put_u32(os, kFieldDumpVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(g.axis_count()));
  detail::put_u32(os, static_cast<std::uint32_t>(g.nr));
  for (int a = 0; a < g.params.m; ++a) detail::put_u32(os, static_cast<std::uint32_t>(g.nz));
  for (double v : f.values) detail::put_f64(os, v);
}

inline std::vector<double> read_field_binary(const std::string& path,
                                             std::vector<std::uint32_t>* dims = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_field_binary: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "HSMF", 4) != 0)
    throw std::runtime_error("read_field_binary: bad magic");
  const std::uint32_t version = detail::get_u32(is);
  if (version != kFieldDumpVersion)
    throw std::runtime_error("read_field_binary: unsupported version " + std::to_string(version));
  const std::uint32_t axes = detail::get_u32(is);
  std::size_t total = 1;
  std::vector<std::uint32_t> sizes;
  for (std::uint32_t a = 0; a < axes; ++a) {
    sizes.push_back(detail::get_u32(is));
    total *= sizes.back();
  }
  if (dims) *dims = sizes;
  std::vector<double> vals(total);
  for (std::size_t i = 0; i < total; ++i) vals[i] = detail::get_f64(is);
  if (!is) throw std::runtime_error("read_field_binary: truncated payload");
  return vals;
}

/// Flat key-value configuration with optional [section] headers; keys are
/// stored as section.key (keys before any header are unqualified).
struct Config {
  std::map<std::string, std::string> kv;

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  const std::string& get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("config: missing key '" + key + "'");
    return it->second;
  }
  std::string get_or(const std::string& key, const std::string& dflt) const {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
  }
  double get_double(const std::string& key) const { return std::stod(get(key)); }
  int get_int(const std::string& key) const { return std::stoi(get(key)); }
};

inline Config parse_config(std::istream& is) {
  Config cfg;
  std::string line, section;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("config: bad line '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    cfg.kv[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

inline Config parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  return parse_config(is);
}

inline std::string serialize_config(const Config& cfg) {
  // keys are emitted sorted and fully qualified; parse(serialize(c)) == c
  std::ostringstream os;
  for (const auto& [k, v] : cfg.kv) os << k << " = " << v << '\n';
  return os.str();
}

/// Grid specification from config keys n, p, k, nodes_r, nodes_z, L_r, L_z
/// (optionally under a [grid] section).
inline Grid grid_from_config(const Config& cfg) {
  auto key = [&](const std::string& name) {
    return cfg.has("grid." + name) ? "grid." + name : name;
  };
  Params P(cfg.get_int(key("n")), cfg.get_double(key("p")), cfg.get_int(key("k")));
  const int nr = cfg.get_int(key("nodes_r"));
  const int nz = P.m > 0 ? cfg.get_int(key("nodes_z")) : 0;
  const double Lr = cfg.has(key("L_r")) ? cfg.get_double(key("L_r")) : 4.0;
  const double Lz = cfg.has(key("L_z")) ? cfg.get_double(key("L_z")) : 4.0;
  return make_grid(P, nr, nz, Lr, Lz);
}

}  // namespace hsm
