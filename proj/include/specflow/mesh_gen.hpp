// Structured mesh generators: polar annulus grids, the two-hole dumbbell
// family used for the multi-component runs, and disjoint unions.
#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <tuple>
#include <vector>

#include "specflow/core.hpp"
#include "specflow/domain.hpp"

namespace specflow {

// Polar product grid on an annulus, split into triangles with alternating
// diagonals. n_r radial intervals, n_phi angular intervals.
// Nodes: (n_r + 1) * n_phi; triangles: 2 * n_r * n_phi.
inline TriMesh mesh_annulus(const DomainSpec& spec, int n_r, int n_phi) {
  if (spec.kind != DomainSpec::Kind::Annulus)
    throw NotRotationallySymmetric("mesh_annulus needs an annulus domain");
  if (n_r < 2 || n_phi < 8) throw TooCoarse("need n_r >= 2 and n_phi >= 8");

  TriMesh mesh;
  const double dr = (spec.r_out - spec.r_in) / n_r;
  auto id = [&](int i, int j) { return i * n_phi + ((j % n_phi + n_phi) % n_phi); };
  for (int i = 0; i <= n_r; ++i) {
    const double r = spec.r_in + i * dr;
    for (int j = 0; j < n_phi; ++j) {
      const double phi = 2.0 * kPi * j / n_phi;
      mesh.nodes.push_back({r * std::cos(phi), r * std::sin(phi)});
    }
  }
  for (int i = 0; i < n_r; ++i) {
    for (int j = 0; j < n_phi; ++j) {
      const int a = id(i, j), b = id(i, j + 1), c = id(i + 1, j + 1), d = id(i + 1, j);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({b, c, d});
      }
    }
  }
  for (int j = 0; j < n_phi; ++j) {
    mesh.boundary_edges.push_back({id(0, j), id(0, j + 1), 1});
    mesh.boundary_edges.push_back({id(n_r, j), id(n_r, j + 1), 2});
  }
  mesh.finalize();
  // Exact radial normals (the bisector construction is already second order;
  // the exact direction keeps the polar benchmark clean).
  for (int j = 0; j < n_phi; ++j) {
    const double phi = 2.0 * kPi * j / n_phi;
    mesh.node_normals[std::size_t(id(0, j))] = {-std::cos(phi), -std::sin(phi)};
    mesh.node_normals[std::size_t(id(n_r, j))] = {std::cos(phi), std::sin(phi)};
  }
  return mesh;
}

namespace detail {

// Grid-cell triangulator shared by the rectilinear domain builders. `inside`
// decides cell membership on the integer cell lattice.
template <typename InsideFn>
TriMesh mesh_cells(double x0, double y0, double step, int nx, int ny, InsideFn inside) {
  TriMesh mesh;
  std::map<std::pair<int, int>, int> node_id;
  auto get_node = [&](int i, int j) {
    auto it = node_id.find({i, j});
    if (it != node_id.end()) return it->second;
    const int id = int(mesh.nodes.size());
    node_id.emplace(std::make_pair(i, j), id);
    mesh.nodes.push_back({x0 + step * i, y0 + step * j});
    return id;
  };
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      if (!inside(i, j)) continue;
      const int a = get_node(i, j), b = get_node(i + 1, j);
      const int c = get_node(i + 1, j + 1), d = get_node(i, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({b, c, d});
      }
    }
  }
  return mesh;
}

// Derives boundary edges from triangle adjacency and labels each loop with
// `classify(loop centroid, signed area, is_outer)`.
template <typename ClassifyFn>
void label_boundary(TriMesh& mesh, ClassifyFn classify) {
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) directed[{t[e], t[(e + 1) % 3]}]++;
  std::map<int, int> next_of;
  for (const auto& [e, cnt] : directed) {
    (void)cnt;
    if (!directed.count({e.second, e.first})) next_of[e.first] = e.second;
  }
  std::map<int, char> visited;
  struct Loop {
    std::vector<int> nodes;
    double area = 0.0;
    Vec2 centroid;
  };
  std::vector<Loop> loop_list;
  for (const auto& [start, nxt] : next_of) {
    (void)nxt;
    if (visited.count(start)) continue;
    Loop loop;
    int cur = start;
    do {
      loop.nodes.push_back(cur);
      visited[cur] = 1;
      cur = next_of.at(cur);
    } while (cur != start);
    Vec2 c{0, 0};
    for (std::size_t i = 0; i < loop.nodes.size(); ++i) {
      const Vec2& p = mesh.nodes[std::size_t(loop.nodes[i])];
      const Vec2& q = mesh.nodes[std::size_t(loop.nodes[(i + 1) % loop.nodes.size()])];
      loop.area += 0.5 * cross2(p, q);
      c = c + p;
    }
    loop.centroid = c * (1.0 / double(loop.nodes.size()));
    loop_list.push_back(std::move(loop));
  }
  for (const auto& loop : loop_list) {
    const int label = classify(loop.centroid, loop.area, loop.area > 0);
    for (std::size_t i = 0; i < loop.nodes.size(); ++i)
      mesh.boundary_edges.push_back(
          {loop.nodes[i], loop.nodes[(i + 1) % loop.nodes.size()], label});
  }
}

}  // namespace detail

// Two square pads with square holes joined by a band of width h (m = 3).
// Pads [0,3]x[0,3] and [5,8]x[0,3], holes [1,2]^2 and [6,7]x[1,2], band
// [3,5] x [(3-h)/2, (3+h)/2]. `divisions` is the number of cells per unit
// length; h and (3-h)/2 must land on the grid.
// Labels: 1 = left hole, 2 = right hole, 3 = outer (outer last).
inline TriMesh mesh_dumbbell_m3(double h, int divisions = 8) {
  const double step = 1.0 / divisions;
  const double y_lo = (3.0 - h) / 2.0, y_hi = (3.0 + h) / 2.0;
  auto on_grid = [&](double v) { return std::abs(v / step - std::round(v / step)) < 1e-9; };
  if (h <= 0 || h > 3 || !on_grid(h) || !on_grid(y_lo))
    throw ConfigError("band width must be positive and grid-aligned");

  const int nx = 8 * divisions, ny = 3 * divisions;
  auto inside = [&](int i, int j) {
    const double cx = (i + 0.5) * step, cy = (j + 0.5) * step;
    const bool pad1 = cx < 3.0 && !(cx > 1.0 && cx < 2.0 && cy > 1.0 && cy < 2.0);
    const bool pad2 = cx > 5.0 && !(cx > 6.0 && cx < 7.0 && cy > 1.0 && cy < 2.0);
    const bool band = cx > 3.0 && cx < 5.0 && cy > y_lo && cy < y_hi;
    return pad1 || pad2 || band;
  };
  TriMesh mesh = detail::mesh_cells(0.0, 0.0, step, nx, ny, inside);
  detail::label_boundary(mesh, [&](const Vec2& centroid, double /*area*/, bool is_outer) {
    if (is_outer) return 3;
    return centroid.x < 4.0 ? 1 : 2;
  });
  mesh.finalize();
  return mesh;
}

// Merge part meshes into one, translating part k by offsets[k]; component
// labels are concatenated in part order.
inline TriMesh merge_meshes(const std::vector<TriMesh>& parts, const std::vector<Vec2>& offsets) {
  if (parts.size() != offsets.size()) throw ConfigError("merge_meshes: parts/offsets mismatch");
  TriMesh out;
  int node_base = 0, label_base = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const TriMesh& m = parts[p];
    for (const auto& v : m.nodes) out.nodes.push_back(v + offsets[p]);
    for (const auto& t : m.triangles)
      out.triangles.push_back({t[0] + node_base, t[1] + node_base, t[2] + node_base});
    for (const auto& be : m.boundary_edges)
      out.boundary_edges.push_back({be.a + node_base, be.b + node_base, be.label + label_base});
    node_base += m.n_nodes();
    label_base += m.n_components;
  }
  out.finalize();
  return out;
}

inline double min_interior_angle(const TriMesh& mesh) {
  double best = kPi;
  for (const auto& t : mesh.triangles) {
    for (int v = 0; v < 3; ++v) {
      const Vec2& p = mesh.nodes[std::size_t(t[v])];
      const Vec2 u = mesh.nodes[std::size_t(t[(v + 1) % 3])] - p;
      const Vec2 w = mesh.nodes[std::size_t(t[(v + 2) % 3])] - p;
      best = std::min(best, std::acos(u.dot(w) / (u.norm() * w.norm())));
    }
  }
  return best;
}

}  // namespace specflow
