// Compact planar domains with m oriented boundary components: the annulus,
// disjoint unions, and triangulated domains. Boundary orientation follows the
// convention that (outward normal, positive tangent) is positively oriented,
// so outer components run counterclockwise and hole components clockwise.
#pragma once

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "specflow/core.hpp"

namespace specflow {

// One sample of a boundary parametrization. `conormal` is the Euclidean unit
// outward conormal; solvers lower it through their metric and Phi.
struct BoundaryPoint {
  int component = 0;        // 1..m
  double s = 0.0;           // arclength along positive tangent
  Vec2 position;
  Vec2 conormal;
  int tangent_orientation = +1;
};

// Conforming triangle mesh. Triangles are counterclockwise; boundary edges
// carry the component label of the loop they belong to.
struct TriMesh {
  struct BEdge {
    int a = 0, b = 0;   // node ids, directed so the domain lies on the left
    int label = 0;      // 1..m
  };

  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BEdge> boundary_edges;
  std::vector<Vec2> node_normals;   // unit outward normal at boundary nodes, zero inside
  std::vector<char> is_boundary;
  std::vector<std::vector<int>> loops;  // loops[l-1]: node cycle of component l, positive tangent order
  int n_components = 0;
  std::vector<std::string> warnings;

  int n_nodes() const { return int(nodes.size()); }
  int n_triangles() const { return int(triangles.size()); }

  static double tri_signed_area(const Vec2& p, const Vec2& q, const Vec2& r) {
    return 0.5 * cross2(q - p, r - p);
  }

  // Orients triangles counterclockwise (logging flips), derives the boundary
  // from triangle adjacency, checks conformity against `boundary_edges`
  // labels, orders the loops and computes bisector node normals.
  void finalize() {
    int flips = 0;
    for (auto& t : triangles) {
      if (tri_signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) < 0) {
        std::swap(t[1], t[2]);
        ++flips;
      }
      if (tri_signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) == 0)
        throw NonConformingMesh("degenerate (zero-area) triangle");
    }
    if (flips > 0) warnings.push_back("flipped " + std::to_string(flips) + " clockwise triangles");

    // Directed-edge census. A conforming mesh uses each undirected edge once
    // (boundary) or twice with opposite directions (interior).
    std::map<std::pair<int, int>, int> directed;  // (a,b) -> count
    for (const auto& t : triangles) {
      for (int e = 0; e < 3; ++e) {
        const int a = t[e], b = t[(e + 1) % 3];
        if (a == b) throw NonConformingMesh("triangle with repeated vertex");
        if (++directed[{a, b}] > 1)
          throw InconsistentOrientation("two triangles induce the same edge direction");
      }
    }
    std::map<std::pair<int, int>, int> derived_boundary;  // directed edge -> seen
    for (const auto& [e, cnt] : directed) {
      auto rev = directed.find({e.second, e.first});
      const int total = cnt + (rev == directed.end() ? 0 : rev->second);
      if (total > 2) throw NonConformingMesh("edge shared by more than two triangles");
      if (total == 1) derived_boundary[e] = 0;
    }

    // Match the labeled boundary edges against the derived boundary.
    std::map<std::pair<int, int>, int> label_of;  // undirected key (min,max) -> label
    for (const auto& be : boundary_edges) {
      if (be.label <= 0) throw UnlabeledBoundary("boundary edge with marker 0");
      auto key = std::minmax(be.a, be.b);
      if (!label_of.emplace(std::make_pair(key.first, key.second), be.label).second)
        throw NonConformingMesh("duplicate boundary edge");
    }
    if (label_of.size() < derived_boundary.size())
      throw UnlabeledBoundary("boundary edge missing a component label");
    if (label_of.size() > derived_boundary.size())
      throw NonConformingMesh("labeled edge is not a boundary edge");
    boundary_edges.clear();
    int max_label = 0;
    for (auto& [e, seen] : derived_boundary) {
      (void)seen;
      auto key = std::minmax(e.first, e.second);
      auto it = label_of.find({key.first, key.second});
      if (it == label_of.end()) throw UnlabeledBoundary("boundary edge missing a component label");
      boundary_edges.push_back({e.first, e.second, it->second});
      max_label = std::max(max_label, it->second);
    }
    n_components = max_label;

    // Walk each labeled loop in induced (positive tangent) order.
    std::map<int, std::pair<int, int>> next_of;  // node -> (next node, label)
    for (const auto& be : boundary_edges) {
      if (!next_of.emplace(be.a, std::make_pair(be.b, be.label)).second)
        throw NonConformingMesh("boundary node with two outgoing boundary edges");
    }
    loops.assign(std::size_t(n_components), {});
    std::map<int, char> visited;
    for (const auto& be : boundary_edges) {
      if (visited.count(be.a)) continue;
      std::vector<int> loop;
      int cur = be.a;
      const int label = be.label;
      do {
        auto it = next_of.find(cur);
        if (it == next_of.end()) throw NonConformingMesh("open boundary polyline");
        if (it->second.second != label)
          throw NonConformingMesh("boundary loop mixes component labels");
        loop.push_back(cur);
        visited[cur] = 1;
        cur = it->second.first;
      } while (cur != be.a);
      if (!loops[std::size_t(label - 1)].empty())
        throw NonConformingMesh("component label used by two disjoint loops");
      loops[std::size_t(label - 1)] = std::move(loop);
    }
    for (int l = 0; l < n_components; ++l)
      if (loops[std::size_t(l)].empty())
        throw UnlabeledBoundary("component label " + std::to_string(l + 1) + " empty");

    // Bisector normals at boundary nodes. The outward normal of a directed
    // edge (domain on the left) is the tangent rotated by -90 degrees.
    is_boundary.assign(nodes.size(), 0);
    node_normals.assign(nodes.size(), Vec2{0, 0});
    for (const auto& loop : loops) {
      const int n = int(loop.size());
      for (int i = 0; i < n; ++i) {
        const int prev = loop[std::size_t((i + n - 1) % n)];
        const int curn = loop[std::size_t(i)];
        const int next = loop[std::size_t((i + 1) % n)];
        auto edge_normal = [&](int u, int v) {
          Vec2 t = nodes[v] - nodes[u];
          const double len = t.norm();
          return Vec2{t.y / len, -t.x / len};
        };
        Vec2 nsum = edge_normal(prev, curn) + edge_normal(curn, next);
        const double len = nsum.norm();
        if (len < 1e-12) throw NonConformingMesh("degenerate corner (reversing boundary)");
        is_boundary[std::size_t(curn)] = 1;
        node_normals[std::size_t(curn)] = nsum * (1.0 / len);
      }
    }
  }
};

struct DomainSpec {
  enum class Kind { Annulus, DisjointUnion, Meshed };

  Kind kind = Kind::Annulus;
  double r_in = 1.0, r_out = 2.0;            // Annulus
  std::vector<DomainSpec> parts;             // DisjointUnion
  std::shared_ptr<const TriMesh> mesh;       // Meshed
  int m = 2;

  static DomainSpec meshed(std::shared_ptr<const TriMesh> mesh) {
    DomainSpec d;
    d.kind = Kind::Meshed;
    d.m = mesh->n_components;
    d.mesh = std::move(mesh);
    return d;
  }
  static DomainSpec disjoint_union(std::vector<DomainSpec> ps) {
    DomainSpec d;
    d.kind = Kind::DisjointUnion;
    d.m = 0;
    for (const auto& p : ps) d.m += p.m;
    d.parts = std::move(ps);
    return d;
  }
};

// Labels: 1 = inner circle, 2 = outer circle.
inline DomainSpec make_annulus(double r_in, double r_out) {
  if (r_in <= 0 || r_out <= 0) throw NonPositiveRadius();
  if (r_in >= r_out) throw RadiiOutOfOrder();
  DomainSpec d;
  d.kind = DomainSpec::Kind::Annulus;
  d.r_in = r_in;
  d.r_out = r_out;
  d.m = 2;
  return d;
}

// For a DisjointUnion, maps a global component label to (part, local label).
inline std::pair<int, int> locate_component(const DomainSpec& d, int component) {
  if (component < 1 || component > d.m) throw UnknownComponent();
  int base = 0;
  for (std::size_t p = 0; p < d.parts.size(); ++p) {
    if (component <= base + d.parts[p].m) return {int(p), component - base};
    base += d.parts[p].m;
  }
  throw UnknownComponent();
}

inline std::vector<BoundaryPoint> boundary_trace(const DomainSpec& domain, int component,
                                                 int n_samples) {
  if (component < 1 || component > domain.m) throw UnknownComponent();
  std::vector<BoundaryPoint> out;
  switch (domain.kind) {
    case DomainSpec::Kind::Annulus: {
      const bool inner = (component == 1);
      const double r = inner ? domain.r_in : domain.r_out;
      out.reserve(std::size_t(n_samples));
      for (int k = 0; k < n_samples; ++k) {
        // Outer loop counterclockwise, inner loop clockwise.
        const double phi = (inner ? -1.0 : 1.0) * 2.0 * kPi * k / n_samples;
        BoundaryPoint bp;
        bp.component = component;
        bp.s = r * 2.0 * kPi * k / n_samples;
        bp.position = {r * std::cos(phi), r * std::sin(phi)};
        const double sign = inner ? -1.0 : 1.0;
        bp.conormal = {sign * std::cos(phi), sign * std::sin(phi)};
        out.push_back(bp);
      }
      return out;
    }
    case DomainSpec::Kind::DisjointUnion: {
      auto [p, local] = locate_component(domain, component);
      out = boundary_trace(domain.parts[std::size_t(p)], local, n_samples);
      for (auto& bp : out) bp.component = component;
      return out;
    }
    case DomainSpec::Kind::Meshed: {
      const auto& mesh = *domain.mesh;
      const auto& loop = mesh.loops[std::size_t(component - 1)];
      double s = 0.0;
      out.reserve(loop.size());
      for (std::size_t i = 0; i < loop.size(); ++i) {
        const int node = loop[i];
        BoundaryPoint bp;
        bp.component = component;
        bp.s = s;
        bp.position = mesh.nodes[std::size_t(node)];
        bp.conormal = mesh.node_normals[std::size_t(node)];
        out.push_back(bp);
        const int next = loop[(i + 1) % loop.size()];
        s += (mesh.nodes[std::size_t(next)] - mesh.nodes[std::size_t(node)]).norm();
      }
      return out;
    }
  }
  throw UnknownComponent();
}

// Shoelace area of a trace loop; positive for outer components, negative for
// holes under the orientation convention.
inline double trace_signed_area(const std::vector<BoundaryPoint>& loop) {
  double a = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec2& p = loop[i].position;
    const Vec2& q = loop[(i + 1) % loop.size()].position;
    a += cross2(p, q);
  }
  return 0.5 * a;
}

// Point-in-domain test (used to validate gauge centers).
inline bool domain_contains(const DomainSpec& d, const Vec2& p) {
  switch (d.kind) {
    case DomainSpec::Kind::Annulus: {
      const double r = p.norm();
      return r >= d.r_in && r <= d.r_out;
    }
    case DomainSpec::Kind::DisjointUnion: {
      for (const auto& part : d.parts)
        if (domain_contains(part, p)) return true;
      return false;
    }
    case DomainSpec::Kind::Meshed: {
      for (const auto& t : d.mesh->triangles) {
        const Vec2 &a = d.mesh->nodes[std::size_t(t[0])], &b = d.mesh->nodes[std::size_t(t[1])],
                   &c = d.mesh->nodes[std::size_t(t[2])];
        const double s0 = cross2(b - a, p - a), s1 = cross2(c - b, p - b),
                     s2 = cross2(a - c, p - c);
        if (s0 >= 0 && s1 >= 0 && s2 >= 0) return true;
      }
      return false;
    }
  }
  return false;
}

}  // namespace specflow
