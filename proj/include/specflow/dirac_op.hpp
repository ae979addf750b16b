// Dirac-type operators D = -i(rho_1 d_1 + rho_2 d_2) + i R_Phi + Q acting on
// 2N-component spinor functions, with rho = Phi (sigma_1; sigma_2), the
// self-adjointness correction R_Phi, scalar U(1) gauge fields and their
// boundary winding degrees.
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specflow/core.hpp"
#include "specflow/domain.hpp"
#include "specflow/fields.hpp"

namespace specflow {

inline Eigen::MatrixXcd sigma1(int N) {
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2 * N, 2 * N);
  s.topRightCorner(N, N) = Eigen::MatrixXcd::Identity(N, N);
  s.bottomLeftCorner(N, N) = Eigen::MatrixXcd::Identity(N, N);
  return s;
}

inline Eigen::MatrixXcd sigma2(int N) {
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2 * N, 2 * N);
  s.topRightCorner(N, N) = Complex(0, -1) * Eigen::MatrixXcd::Identity(N, N);
  s.bottomLeftCorner(N, N) = Complex(0, 1) * Eigen::MatrixXcd::Identity(N, N);
  return s;
}

// Symbol in the direction of a covector: xi_1 rho_1(x) + xi_2 rho_2(x).
inline Eigen::MatrixXcd symbol(const PhiField& phi, Vec2 x, Vec2 xi, int N = 1) {
  const Eigen::Matrix2d f = phi.value(x.x, x.y);
  const Eigen::MatrixXcd s1 = sigma1(N), s2 = sigma2(N);
  const double c1 = xi.x * f(0, 0) + xi.y * f(1, 0);
  const double c2 = xi.x * f(0, 1) + xi.y * f(1, 1);
  return c1 * s1 + c2 * s2;
}

// Zeroth-order Hermitian correction making the operator formally
// self-adjoint against the volume element sqrt(g) dx dy:
//   R_Phi = -(1 / 2 sqrt(g)) [ d_1 (sqrt(g) rho_1) + d_2 (sqrt(g) rho_2) ].
// Vanishes whenever sqrt(g) * Phi is constant.
inline Eigen::MatrixXcd r_phi(const PhiField& phi, const MetricSpec& metric, Vec2 x, int N = 1) {
  if (metric.kind == MetricSpec::Kind::PerTriangleConstant &&
      phi.kind != PhiField::Kind::CartesianPoly && phi.kind != PhiField::Kind::PolarFrame)
    return Eigen::MatrixXcd::Zero(2 * N, 2 * N);

  const Eigen::Matrix2d f = phi.value(x.x, x.y);
  const Eigen::Matrix2d fx = phi.dx(x.x, x.y);
  const Eigen::Matrix2d fy = phi.dy(x.x, x.y);
  const double sg = metric.sqrt_g(x.x, x.y);
  const Vec2 dsg = metric.grad_sqrt_g(x.x, x.y);

  // coefficient of sigma_j in d_1(sqrt(g) rho_1) + d_2(sqrt(g) rho_2)
  double c1 = dsg.x * f(0, 0) + sg * fx(0, 0) + dsg.y * f(1, 0) + sg * fy(1, 0);
  double c2 = dsg.x * f(0, 1) + sg * fx(0, 1) + dsg.y * f(1, 1) + sg * fy(1, 1);
  return (-0.5 / sg) * (c1 * sigma1(N) + c2 * sigma2(N));
}

// Scalar gauge transformation mu: X -> U(1), represented canonically as
//   mu(z) = e^{i theta0} * prod_j ((z - z_j) / |z - z_j|)^{w_j}.
// The angular power e^{i w phi} about the origin is the single-factor case.
// The phase gradient is analytic (branch cuts never differentiated).
struct GaugeField {
  double theta0 = 0.0;
  std::vector<std::pair<Vec2, int>> windings;  // (center, exponent)

  static GaugeField constant(double theta = 0.0) { return {theta, {}}; }
  static GaugeField angular_power(int w) {
    GaugeField g;
    if (w != 0) g.windings.push_back({{0.0, 0.0}, w});
    return g;
  }
  static GaugeField winding_product(std::vector<std::pair<Vec2, int>> ws) {
    GaugeField g;
    g.windings = std::move(ws);
    return g;
  }

  bool is_angular_power() const {
    if (windings.empty()) return true;
    return windings.size() == 1 && windings[0].first.x == 0.0 && windings[0].first.y == 0.0;
  }
  int angular_w() const {
    return windings.empty() ? 0 : windings[0].second;
  }

  Complex value(Vec2 p) const {
    double theta = theta0;
    for (const auto& [c, w] : windings) theta += w * std::atan2(p.y - c.y, p.x - c.x);
    return std::polar(1.0, theta);
  }

  // a = grad theta where mu = e^{i theta}; closed away from the centers.
  Vec2 phase_gradient(Vec2 p) const {
    Vec2 a{0.0, 0.0};
    for (const auto& [c, w] : windings) {
      const double dx = p.x - c.x, dy = p.y - c.y;
      const double r2 = dx * dx + dy * dy;
      a.x += w * (-dy / r2);
      a.y += w * (dx / r2);
    }
    return a;
  }
};

inline GaugeField gauge_product(const GaugeField& a, const GaugeField& b) {
  GaugeField g;
  g.theta0 = a.theta0 + b.theta0;
  g.windings = a.windings;
  g.windings.insert(g.windings.end(), b.windings.begin(), b.windings.end());
  return g;
}

// Phase-gradient singularities must sit strictly inside holes or outside X.
inline void validate_gauge_centers(const GaugeField& mu, const DomainSpec& domain) {
  for (const auto& [c, w] : mu.windings) {
    (void)w;
    if (domain_contains(domain, c))
      throw CenterInsideDomain("gauge center (" + std::to_string(c.x) + ", " +
                               std::to_string(c.y) + ") lies inside the domain");
  }
}

// Induced potential of the conjugation difference: with mu = e^{i theta},
//   Q_1(x) = -( a_1(x) rho_1(x) + a_2(x) rho_2(x) ),   a = grad theta,
// which satisfies D + Q_1 = mu D mu^{-1}. Hermitian since a is real.
inline Eigen::MatrixXcd gauge_q1_at(const GaugeField& mu, const PhiField& phi, Vec2 x, int N = 1) {
  const Vec2 a = mu.phase_gradient(x);
  const Eigen::Matrix2d f = phi.value(x.x, x.y);
  const double c1 = a.x * f(0, 0) + a.y * f(1, 0);
  const double c2 = a.x * f(0, 1) + a.y * f(1, 1);
  return -(c1 * sigma1(N) + c2 * sigma2(N));
}

// Degree of mu restricted to one boundary component, positively oriented.
// Principal-branch phase increments are summed along the sampled loop; the
// sampling is doubled until every increment has magnitude below pi/2.
inline int winding_degree(const GaugeField& mu, const DomainSpec& domain, int component) {
  std::vector<Vec2> pts;
  {
    const int n0 = domain.kind == DomainSpec::Kind::Meshed ? 0 : 64;
    auto trace = boundary_trace(domain, component, n0 == 0 ? 4 : n0);
    pts.reserve(trace.size());
    for (const auto& bp : trace) pts.push_back(bp.position);
  }
  constexpr std::size_t kCap = std::size_t(1) << 20;
  for (;;) {
    double total = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Complex ratio = mu.value(pts[(i + 1) % pts.size()]) / mu.value(pts[i]);
      const double inc = std::arg(ratio);
      if (std::abs(inc) >= kPi / 2) {
        ok = false;
        break;
      }
      total += inc;
    }
    if (ok) return int(std::lround(total / (2.0 * kPi)));
    if (pts.size() * 2 > kCap) throw NonConvergentWinding();
    std::vector<Vec2> refined;
    refined.reserve(pts.size() * 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec2& p = pts[i];
      const Vec2& q = pts[(i + 1) % pts.size()];
      refined.push_back(p);
      refined.push_back((p + q) * 0.5);
    }
    pts = std::move(refined);
  }
}

// Ordered winding degrees (mu_1, ..., mu_m); they sum to zero when all gauge
// centers are legally placed.
inline std::vector<int> degrees_vector(const GaugeField& mu, const DomainSpec& domain) {
  std::vector<int> degs;
  degs.reserve(std::size_t(domain.m));
  int sum = 0;
  for (int j = 1; j <= domain.m; ++j) {
    degs.push_back(winding_degree(mu, domain, j));
    sum += degs.back();
  }
  if (sum != 0)
    throw CenterInsideDomain("winding degrees sum to " + std::to_string(sum) +
                             "; some gauge center lies inside the domain");
  return degs;
}

// Base potential: per-spinor-block closed-form radial Hermitian data, plus an
// optional per-triangle constant table for meshed runs. Block i couples the
// spinor pair (u+_i, u-_i); blocks never mix, which is exactly the family the
// radial solver decomposes.
struct PotentialSpec {
  struct Block {
    RadialFn q11 = RadialFn::constant(0.0);
    RadialFn q22 = RadialFn::constant(0.0);
    RadialFn q12_re = RadialFn::constant(0.0);
    RadialFn q12_im = RadialFn::constant(0.0);
  };
  std::vector<Block> blocks;                // size N, or empty for zero
  std::vector<Eigen::MatrixXcd> tri_table;  // optional per-triangle override

  bool is_zero() const { return blocks.empty() && tri_table.empty(); }

  Eigen::MatrixXcd eval(Vec2 x, int N, int tri = -1) const {
    if (!tri_table.empty()) {
      if (tri < 0 || std::size_t(tri) >= tri_table.size())
        throw MeshInvariantViolation("per-triangle potential lookup without triangle id");
      return tri_table[std::size_t(tri)];
    }
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(2 * N, 2 * N);
    if (blocks.empty()) return q;
    if (int(blocks.size()) != N) throw ConfigError("potential blocks must match N");
    const double r = x.norm();
    for (int i = 0; i < N; ++i) {
      const Block& b = blocks[std::size_t(i)];
      q(i, i) = b.q11(r);
      q(N + i, N + i) = b.q22(r);
      const Complex off(b.q12_re(r), b.q12_im(r));
      q(i, N + i) = off;
      q(N + i, i) = std::conj(off);
    }
    return q;
  }
};

// A Dirac-type operator is determined by (Phi, metric, Q); N is the spinor
// half-dimension.
struct OperatorSpec {
  int N = 1;
  MetricSpec metric;
  PhiField phi;
  PotentialSpec q_base;
};

// Time dependence of the potential: Q_t = Q_base + ramp(t) * Q_1(mu), with
// ramp(0) = 0 and ramp(1) = 1 so that the endpoints are conjugate by mu.
struct PotentialPath {
  Poly1 ramp{{0.0, 1.0}};

  double at(double t) const { return ramp(t); }
  static PotentialPath linear() { return {}; }
  static PotentialPath smoothstep() { return {Poly1{{0.0, 0.0, 3.0, -2.0}}}; }
};

// The unit-annulus benchmark operator: cylinder metric ds^2 = dr^2 + dphi^2
// written in Cartesian coordinates, polar-frame symbol diag(1, 1).
inline OperatorSpec reference_annulus_operator() {
  OperatorSpec op;
  op.N = 1;
  op.metric = MetricSpec::cylinder();
  op.phi = PhiField::polar_frame(RadialFn::constant(1.0), RadialFn::constant(1.0));
  return op;
}

}  // namespace specflow
