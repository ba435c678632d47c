// field_io.hpp
// Field snapshot format: header `NCHNS1 scalar|vector nx ny Lx Ly`, optional
// `# key value` comment lines, then row-major ASCII reals. Round-trips to
// <= 1 ulp per entry (shortest exact decimal via %.17g).

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nchns/grid.hpp"

namespace nchns {

namespace detail {
inline std::string fmt_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}
}  // namespace detail

struct SnapshotMeta {
  std::map<std::string, std::string> kv;
};

inline void write_snapshot(const std::string& path, const ScalarField& f,
                           const SnapshotMeta& meta = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
  out << "NCHNS1 scalar " << f.grid.nx << " " << f.grid.ny << " "
      << detail::fmt_real(f.grid.Lx) << " " << detail::fmt_real(f.grid.Ly) << "\n";
  for (const auto& [k, v] : meta.kv) out << "# " << k << " " << v << "\n";
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) {
      if (i) out << " ";
      out << detail::fmt_real(f(i, j));
    }
    out << "\n";
  }
}

inline void write_snapshot(const std::string& path, const VectorField& w,
                           const SnapshotMeta& meta = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
  out << "NCHNS1 vector " << w.grid.nx << " " << w.grid.ny << " "
      << detail::fmt_real(w.grid.Lx) << " " << detail::fmt_real(w.grid.Ly) << "\n";
  for (const auto& [k, v] : meta.kv) out << "# " << k << " " << v << "\n";
  for (int j = 0; j < w.grid.ny; ++j) {
    for (int i = 0; i <= w.grid.nx; ++i) {
      if (i) out << " ";
      out << detail::fmt_real(w.U(i, j));
    }
    out << "\n";
  }
  for (int j = 0; j <= w.grid.ny; ++j) {
    for (int i = 0; i < w.grid.nx; ++i) {
      if (i) out << " ";
      out << detail::fmt_real(w.V(i, j));
    }
    out << "\n";
  }
}

namespace detail {
struct SnapshotHeader {
  std::string kind;
  GridSpec grid;
  SnapshotMeta meta;
};

inline SnapshotHeader read_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("snapshot: empty file " + path);
  std::istringstream hs(line);
  std::string magic, kind;
  int nx, ny;
  double Lx, Ly;
  if (!(hs >> magic >> kind >> nx >> ny >> Lx >> Ly) || magic != "NCHNS1" ||
      (kind != "scalar" && kind != "vector"))
    throw std::runtime_error("snapshot: bad header in " + path);
  SnapshotHeader h;
  h.kind = kind;
  h.grid = make_grid(Lx, Ly, nx, ny);
  while (in.peek() == '#') {
    std::getline(in, line);
    std::istringstream cs(line);
    std::string hash, key, val;
    cs >> hash >> key;
    std::getline(cs, val);
    if (!val.empty() && val.front() == ' ') val.erase(0, 1);
    h.meta.kv[key] = val;
  }
  return h;
}
}  // namespace detail

inline ScalarField read_scalar_snapshot(const std::string& path,
                                        SnapshotMeta* meta = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
  auto h = detail::read_header(in, path);
  if (h.kind != "scalar") throw std::runtime_error("snapshot: expected scalar in " + path);
  ScalarField f(h.grid);
  for (double& v : f.values)
    if (!(in >> v)) throw std::runtime_error("snapshot: truncated data in " + path);
  if (meta) *meta = h.meta;
  return f;
}

inline VectorField read_vector_snapshot(const std::string& path,
                                        SnapshotMeta* meta = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
  auto h = detail::read_header(in, path);
  if (h.kind != "vector") throw std::runtime_error("snapshot: expected vector in " + path);
  VectorField w(h.grid);
  for (double& x : w.u)
    if (!(in >> x)) throw std::runtime_error("snapshot: truncated data in " + path);
  for (double& x : w.v)
    if (!(in >> x)) throw std::runtime_error("snapshot: truncated data in " + path);
  if (meta) *meta = h.meta;
  return w;
}

}  // namespace nchns
