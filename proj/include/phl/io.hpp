#ifndef PHL_IO_HPP
#define PHL_IO_HPP

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "phl/lattice.hpp"
#include "phl/target.hpp"

namespace phl {

// ---------------------------------------------------------------------------
// Field files: a short text header followed by raw float64 node values in
// row-major node order. A CSV twin exists for interop with plotting tools.
// ---------------------------------------------------------------------------

inline constexpr const char* kFieldMagic = "PHFIELD1";

namespace detail {

inline bool machine_is_little_endian() {
  const uint16_t probe = 1;
  unsigned char b;
  std::memcpy(&b, &probe, 1);
  return b == 1;
}

inline std::string hexdouble(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace detail

inline void write_field(const std::string& path, const DiscreteMap& map) {
  if (!detail::machine_is_little_endian())
    throw Error("write_field: only little-endian hosts are supported");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_field: cannot open " + path);
  const Lattice& L = map.lattice();
  out << kFieldMagic << "\n"
      << "m " << L.m << "\n"
      << "h " << detail::hexdouble(L.h) << "\n"
      << "target " << map.target.name() << "\n"
      << "ncomp " << map.f.ncomp << "\n"
      << "nodes " << L.node_count() << "\n"
      << "endian little\n"
      << "data\n";
  out.write(reinterpret_cast<const char*>(map.f.v.data()),
            std::streamsize(map.f.v.size() * sizeof(double)));
  if (!out) throw Error("write_field: short write to " + path);
}

inline DiscreteMap read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_field: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kFieldMagic)
    throw Error("read_field: bad magic in " + path);
  int m = 0, ncomp = 0;
  int64_t nodes = 0;
  double h = 0.0;
  std::string target_name, endian;
  while (std::getline(in, line) && line != "data") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "m") ls >> m;
    else if (key == "h") { std::string hx; ls >> hx; h = std::strtod(hx.c_str(), nullptr); }
    else if (key == "target") ls >> target_name;
    else if (key == "ncomp") ls >> ncomp;
    else if (key == "nodes") ls >> nodes;
    else if (key == "endian") ls >> endian;
    else throw Error("read_field: unknown header key '" + key + "'");
  }
  if (line != "data") throw Error("read_field: truncated header in " + path);
  if (endian != "little") throw Error("read_field: unsupported endianness " + endian);
  if (m < 2 || m > 3 || h <= 0 || ncomp <= 0) throw Error("read_field: malformed header");
  if (!detail::machine_is_little_endian())
    throw Error("read_field: only little-endian hosts are supported");

  DiscreteMap map(Lattice(m, h), Target::parse(target_name));
  if (int64_t(map.lattice().node_count()) != nodes || map.f.ncomp != ncomp)
    throw Error("read_field: header inconsistent with lattice shape");
  in.read(reinterpret_cast<char*>(map.f.v.data()),
          std::streamsize(map.f.v.size() * sizeof(double)));
  if (size_t(in.gcount()) != map.f.v.size() * sizeof(double))
    throw Error("read_field: truncated data in " + path);
  return map;
}

inline void write_field_csv(const std::string& path, const DiscreteMap& map) {
  std::ofstream out(path);
  if (!out) throw Error("write_field_csv: cannot open " + path);
  const Lattice& L = map.lattice();
  out << "index";
  for (int d = 0; d < L.m; ++d) out << ",x" << d + 1;
  for (int c = 0; c < map.f.ncomp; ++c) out << ",v" << c + 1;
  out << "\n";
  char buf[32];
  const int64_t n = L.node_count();
  for (int64_t i = 0; i < n; ++i) {
    out << i;
    Vec x = L.coord(i);
    for (int d = 0; d < L.m; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", x[d]);
      out << ',' << buf;
    }
    for (int c = 0; c < map.f.ncomp; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", map.f.v[size_t(i) * size_t(map.f.ncomp) + size_t(c)]);
      out << ',' << buf;
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Experiment configuration: flat key/value text files, lossless round-trip
// (doubles serialized as hexfloats), canonical serialization hashed into
// every report.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  int m = 3;
  double h = 1.0 / 32.0;
  double p = 2.0;
  std::string target = "sphere:3";
  std::string boundary = "radial";
  uint64_t seed = 0;
  int max_iters = 2000;
  double gamma = 0.5;
  double eps = 0.02;      // homogeneity threshold for strata tuples
  double eta = 0.05;      // symmetry-failure threshold for strata membership
  double delta = 0.1;     // energy-drop threshold for bad scales
  int A = 2;              // bad-scale window shift
  int j_max = 4;
  double alpha = 0.25;    // Hoelder exponent of the regularity norm
  double r_cut = 0.08;    // census regularity-scale cutoff
  double eps_sigma = 0.05;  // concentration-detection threshold
  std::string out_dir = ".";
  bool strict = false;

  /// Canonical text form; also the on-disk config format. `with_plumbing`
  /// controls whether output-routing keys (out_dir, strict) are included;
  /// the experiment hash excludes them so reports from the same experiment
  /// agree regardless of where they are written.
  std::string serialize(bool with_plumbing = true) const {
    std::ostringstream s;
    s << "m " << m << "\n"
      << "h " << detail::hexdouble(h) << "\n"
      << "p " << detail::hexdouble(p) << "\n"
      << "target " << target << "\n"
      << "boundary " << boundary << "\n"
      << "seed " << seed << "\n"
      << "max_iters " << max_iters << "\n"
      << "gamma " << detail::hexdouble(gamma) << "\n"
      << "eps " << detail::hexdouble(eps) << "\n"
      << "eta " << detail::hexdouble(eta) << "\n"
      << "delta " << detail::hexdouble(delta) << "\n"
      << "A " << A << "\n"
      << "j_max " << j_max << "\n"
      << "alpha " << detail::hexdouble(alpha) << "\n"
      << "r_cut " << detail::hexdouble(r_cut) << "\n"
      << "eps_sigma " << detail::hexdouble(eps_sigma) << "\n";
    if (with_plumbing)
      s << "out_dir " << out_dir << "\n"
        << "strict " << (strict ? 1 : 0) << "\n";
    return s.str();
  }

  uint64_t hash() const { return fnv1a(serialize(false)); }

  void set(const std::string& key, const std::string& value) {
    auto d = [&] { return std::strtod(value.c_str(), nullptr); };
    if (key == "m") m = std::stoi(value);
    else if (key == "h") h = d();
    else if (key == "p") p = d();
    else if (key == "target") target = value;
    else if (key == "boundary") boundary = value;
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "max_iters") max_iters = std::stoi(value);
    else if (key == "gamma") gamma = d();
    else if (key == "eps") eps = d();
    else if (key == "eta") eta = d();
    else if (key == "delta") delta = d();
    else if (key == "A") A = std::stoi(value);
    else if (key == "j_max") j_max = std::stoi(value);
    else if (key == "alpha") alpha = d();
    else if (key == "r_cut") r_cut = d();
    else if (key == "eps_sigma") eps_sigma = d();
    else if (key == "out_dir") out_dir = value;
    else if (key == "strict") strict = value == "1" || value == "true";
    else throw Error("config: unknown key '" + key + "'");
  }

  static ExperimentConfig parse(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string key, value;
      ls >> key;
      std::getline(ls, value);
      size_t b = value.find_first_not_of(" \t");
      value = b == std::string::npos ? "" : value.substr(b);
      cfg.set(key, value);
    }
    return cfg;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open " + path);
    return parse(in);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("config: cannot open " + path);
    out << serialize();
  }
};

}  // namespace phl

#endif  // PHL_IO_HPP
