// Triangle-style mesh files:
//   <name>.node  "N 2 0 flag"   then  "i x y [marker]"
//   <name>.ele   "M 3 0"        then  "i a b c"
//   <name>.edge  "K 1"          then  "i a b marker"   (marker 0 = interior)
// Indices are 1-based, fields whitespace-separated, '#' starts a comment.
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specflow/core.hpp"
#include "specflow/domain.hpp"

namespace specflow {

namespace detail {

// Strips comments and empty lines, yields whitespace-separated tokens.
inline std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream ss(line);
    std::vector<std::string> row;
    for (std::string tok; ss >> tok;) row.push_back(tok);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

inline long to_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad integer '" + s + "' in " + where);
  }
}

inline double to_real(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "' in " + where);
  }
}

inline std::string strip_mesh_ext(const std::string& path) {
  for (const char* ext : {".node", ".ele", ".edge"}) {
    const std::string e(ext);
    if (path.size() > e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0)
      return path.substr(0, path.size() - e.size());
  }
  return path;
}

}  // namespace detail

// `path` is the base name or any of the three file names.
inline TriMesh load_mesh(const std::string& path) {
  const std::string base = detail::strip_mesh_ext(path);
  TriMesh mesh;

  {
    auto rows = detail::read_rows(base + ".node");
    if (rows.empty() || rows[0].size() < 4) throw ParseError(base + ".node: bad header");
    const long n = detail::to_int(rows[0][0], "node header");
    if (detail::to_int(rows[0][1], "node header") != 2)
      throw ParseError(base + ".node: dimension must be 2");
    if (long(rows.size()) - 1 != n) throw ParseError(base + ".node: row count mismatch");
    mesh.nodes.resize(std::size_t(n));
    std::vector<char> seen(std::size_t(n), 0);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() < 3) throw ParseError(base + ".node: short row");
      const long idx = detail::to_int(rows[r][0], "node row");
      if (idx < 1 || idx > n || seen[std::size_t(idx - 1)])
        throw ParseError(base + ".node: bad node index");
      seen[std::size_t(idx - 1)] = 1;
      mesh.nodes[std::size_t(idx - 1)] = {detail::to_real(rows[r][1], "node x"),
                                          detail::to_real(rows[r][2], "node y")};
    }
  }

  {
    auto rows = detail::read_rows(base + ".ele");
    if (rows.empty() || rows[0].size() < 2) throw ParseError(base + ".ele: bad header");
    const long n = detail::to_int(rows[0][0], "ele header");
    if (detail::to_int(rows[0][1], "ele header") != 3)
      throw ParseError(base + ".ele: nodes per element must be 3");
    if (long(rows.size()) - 1 != n) throw ParseError(base + ".ele: row count mismatch");
    mesh.triangles.resize(std::size_t(n));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() < 4) throw ParseError(base + ".ele: short row");
      const long idx = detail::to_int(rows[r][0], "ele row");
      if (idx < 1 || idx > n) throw ParseError(base + ".ele: bad element index");
      for (int k = 0; k < 3; ++k) {
        const long v = detail::to_int(rows[r][std::size_t(k + 1)], "ele vertex");
        if (v < 1 || v > long(mesh.nodes.size())) throw ParseError(base + ".ele: vertex out of range");
        mesh.triangles[std::size_t(idx - 1)][k] = int(v - 1);
      }
    }
  }

  {
    auto rows = detail::read_rows(base + ".edge");
    if (rows.empty() || rows[0].size() < 2) throw ParseError(base + ".edge: bad header");
    const long n = detail::to_int(rows[0][0], "edge header");
    if (detail::to_int(rows[0][1], "edge header") != 1)
      throw UnlabeledBoundary(base + ".edge: boundary marker flag must be 1");
    if (long(rows.size()) - 1 != n) throw ParseError(base + ".edge: row count mismatch");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() < 4) throw UnlabeledBoundary(base + ".edge: edge row without marker");
      const long a = detail::to_int(rows[r][1], "edge a");
      const long b = detail::to_int(rows[r][2], "edge b");
      const long marker = detail::to_int(rows[r][3], "edge marker");
      if (a < 1 || a > long(mesh.nodes.size()) || b < 1 || b > long(mesh.nodes.size()))
        throw ParseError(base + ".edge: node out of range");
      if (marker == 0) continue;  // interior edge row
      mesh.boundary_edges.push_back({int(a - 1), int(b - 1), int(marker)});
    }
  }

  mesh.finalize();
  return mesh;
}

// Writes <base>.node/.ele/.edge; only boundary edges are emitted, carrying
// their component labels. Coordinates use %.17g so a reload is bit-exact.
inline void save_mesh(const TriMesh& mesh, const std::string& path) {
  const std::string base = detail::strip_mesh_ext(path);
  {
    std::ofstream out(base + ".node");
    if (!out) throw ParseError("cannot write " + base + ".node");
    out << mesh.n_nodes() << " 2 0 1\n";
    char buf[80];
    for (int i = 0; i < mesh.n_nodes(); ++i) {
      std::snprintf(buf, sizeof buf, "%d %.17g %.17g %d\n", i + 1, mesh.nodes[std::size_t(i)].x,
                    mesh.nodes[std::size_t(i)].y, mesh.is_boundary[std::size_t(i)] ? 1 : 0);
      out << buf;
    }
  }
  {
    std::ofstream out(base + ".ele");
    if (!out) throw ParseError("cannot write " + base + ".ele");
    out << mesh.n_triangles() << " 3 0\n";
    for (int i = 0; i < mesh.n_triangles(); ++i) {
      const auto& t = mesh.triangles[std::size_t(i)];
      out << (i + 1) << ' ' << (t[0] + 1) << ' ' << (t[1] + 1) << ' ' << (t[2] + 1) << '\n';
    }
  }
  {
    std::ofstream out(base + ".edge");
    if (!out) throw ParseError("cannot write " + base + ".edge");
    out << mesh.boundary_edges.size() << " 1\n";
    int i = 1;
    for (const auto& be : mesh.boundary_edges)
      out << i++ << ' ' << (be.a + 1) << ' ' << (be.b + 1) << ' ' << be.label << '\n';
  }
}

}  // namespace specflow
