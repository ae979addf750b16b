// Closed-form coefficient fields: radial functions (constant / polynomial /
// cubic-spline table), bivariate polynomials, metric specifications and the
// symbol field Phi. Everything here has analytic derivatives so the
// self-adjointness correction can be evaluated exactly.
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "specflow/core.hpp"

namespace specflow {

// Polynomial in one variable, c[k] * r^k.
struct Poly1 {
  std::vector<double> c;

  double operator()(double r) const {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * r + c[k];
    return v;
  }
  double deriv(double r) const {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) v = v * r + c[k] * double(k);
    return v;
  }
  bool is_constant() const {
    for (std::size_t k = 1; k < c.size(); ++k)
      if (c[k] != 0.0) return false;
    return true;
  }
};

// Natural cubic spline through (knots, values); evaluation clamps to the
// knot range so boundary lookups stay finite.
struct CubicSpline {
  std::vector<double> xs, ys, m;  // m = second derivatives at knots

  static CubicSpline fit(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() != values.size() || knots.size() < 2)
      throw ConfigError("spline table needs >= 2 matching knots/values");
    const std::size_t n = knots.size();
    CubicSpline s;
    s.xs = std::move(knots);
    s.ys = std::move(values);
    s.m.assign(n, 0.0);
    if (n == 2) return s;
    // Thomas solve of the natural-spline tridiagonal system.
    std::vector<double> a(n, 0.0), b(n, 0.0), cc(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = s.xs[i] - s.xs[i - 1];
      const double h1 = s.xs[i + 1] - s.xs[i];
      a[i] = h0;
      b[i] = 2.0 * (h0 + h1);
      cc[i] = h1;
      d[i] = 6.0 * ((s.ys[i + 1] - s.ys[i]) / h1 - (s.ys[i] - s.ys[i - 1]) / h0);
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * cc[i - 1];
      d[i] -= w * d[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      s.m[i] = (d[i] - cc[i] * (i + 2 < n ? s.m[i + 1] : 0.0)) / b[i];
      if (i == 1) break;
    }
    return s;
  }

  std::size_t seg(double x) const {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = (it == xs.begin()) ? 1 : std::size_t(it - xs.begin());
    return std::min(std::max<std::size_t>(i, 1), xs.size() - 1) - 1;
  }
  double operator()(double x) const {
    x = std::clamp(x, xs.front(), xs.back());
    const std::size_t i = seg(x);
    const double h = xs[i + 1] - xs[i], t = x - xs[i];
    return ys[i] + t * ((ys[i + 1] - ys[i]) / h - h / 6.0 * (2.0 * m[i] + m[i + 1])) +
           t * t * m[i] / 2.0 + t * t * t * (m[i + 1] - m[i]) / (6.0 * h);
  }
  double deriv(double x) const {
    x = std::clamp(x, xs.front(), xs.back());
    const std::size_t i = seg(x);
    const double h = xs[i + 1] - xs[i], t = x - xs[i];
    return (ys[i + 1] - ys[i]) / h - h / 6.0 * (2.0 * m[i] + m[i + 1]) + t * m[i] +
           t * t * (m[i + 1] - m[i]) / (2.0 * h);
  }
};

// Scalar function of r with an exact derivative.
class RadialFn {
 public:
  RadialFn() : impl_(Poly1{{0.0}}) {}

  static RadialFn constant(double v) { return RadialFn(Poly1{{v}}); }
  static RadialFn poly(std::vector<double> coeffs) { return RadialFn(Poly1{std::move(coeffs)}); }
  static RadialFn spline(std::vector<double> knots, std::vector<double> values) {
    return RadialFn(CubicSpline::fit(std::move(knots), std::move(values)));
  }

  double operator()(double r) const {
    return std::visit([&](const auto& f) { return f(r); }, impl_);
  }
  double deriv(double r) const {
    return std::visit([&](const auto& f) { return f.deriv(r); }, impl_);
  }
  bool is_constant() const {
    if (const auto* p = std::get_if<Poly1>(&impl_)) return p->is_constant();
    return false;
  }
  const Poly1* as_poly() const { return std::get_if<Poly1>(&impl_); }

 private:
  explicit RadialFn(Poly1 p) : impl_(std::move(p)) {}
  explicit RadialFn(CubicSpline s) : impl_(std::move(s)) {}
  std::variant<Poly1, CubicSpline> impl_;
};

// Bivariate polynomial, sum of coeff * x^ix * y^iy.
struct Poly2 {
  struct Term {
    int ix = 0, iy = 0;
    double coeff = 0.0;
  };
  std::vector<Term> terms;

  static Poly2 constant(double v) { return Poly2{{{0, 0, v}}}; }

  double operator()(double x, double y) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.coeff * std::pow(x, t.ix) * std::pow(y, t.iy);
    return v;
  }
  double dx(double x, double y) const {
    double v = 0.0;
    for (const auto& t : terms)
      if (t.ix > 0) v += t.coeff * t.ix * std::pow(x, t.ix - 1) * std::pow(y, t.iy);
    return v;
  }
  double dy(double x, double y) const {
    double v = 0.0;
    for (const auto& t : terms)
      if (t.iy > 0) v += t.coeff * t.iy * std::pow(x, t.ix) * std::pow(y, t.iy - 1);
    return v;
  }
};

// Riemannian metric on the domain. Radial kinds (cylinder, radial-conformal)
// are diagonal in polar coordinates, g = g_rr dr^2 + g_pp dphi^2, and are
// evaluated in Cartesian coordinates through the pullback. sqrt_g is the
// density of the volume element against dx dy.
struct MetricSpec {
  enum class Kind { EuclideanCartesian, CylinderPolar, RadialConformal, PerTriangleConstant };

  Kind kind = Kind::EuclideanCartesian;
  RadialFn g_rr_fn = RadialFn::constant(1.0);
  RadialFn g_pp_fn = RadialFn::constant(1.0);
  std::vector<Eigen::Matrix2d> tri_metric;  // PerTriangleConstant only

  static MetricSpec euclidean() { return {}; }
  static MetricSpec cylinder() {
    MetricSpec m;
    m.kind = Kind::CylinderPolar;
    return m;
  }
  static MetricSpec radial_conformal(RadialFn g_rr, RadialFn g_pp) {
    MetricSpec m;
    m.kind = Kind::RadialConformal;
    m.g_rr_fn = std::move(g_rr);
    m.g_pp_fn = std::move(g_pp);
    return m;
  }
  static MetricSpec per_triangle(std::vector<Eigen::Matrix2d> table) {
    MetricSpec m;
    m.kind = Kind::PerTriangleConstant;
    m.tri_metric = std::move(table);
    return m;
  }

  bool is_radial() const {
    return kind == Kind::CylinderPolar || kind == Kind::RadialConformal;
  }

  double g_rr_at(double r) const {
    return kind == Kind::CylinderPolar ? 1.0 : g_rr_fn(r);
  }
  double g_pp_at(double r) const {
    return kind == Kind::CylinderPolar ? 1.0 : g_pp_fn(r);
  }
  // Polar-coordinate volume density sqrt(g_rr * g_pp) and its r-derivative.
  double sqrt_g_polar(double r) const { return std::sqrt(g_rr_at(r) * g_pp_at(r)); }
  double sqrt_g_polar_deriv(double r) const {
    if (kind == Kind::CylinderPolar) return 0.0;
    const double grr = g_rr_fn(r), gpp = g_pp_fn(r);
    return (g_rr_fn.deriv(r) * gpp + grr * g_pp_fn.deriv(r)) / (2.0 * std::sqrt(grr * gpp));
  }

  Eigen::Matrix2d cart(double x, double y, int tri = -1) const {
    switch (kind) {
      case Kind::EuclideanCartesian:
        return Eigen::Matrix2d::Identity();
      case Kind::PerTriangleConstant: {
        if (tri < 0 || std::size_t(tri) >= tri_metric.size())
          throw MeshInvariantViolation("per-triangle metric lookup without triangle id");
        return tri_metric[std::size_t(tri)];
      }
      default: {
        const double r2 = x * x + y * y, r = std::sqrt(r2);
        Eigen::Vector2d dr(x / r, y / r), dp(-y / r2, x / r2);
        return g_rr_at(r) * dr * dr.transpose() + g_pp_at(r) * dp * dp.transpose();
      }
    }
  }

  double sqrt_g(double x, double y, int tri = -1) const {
    switch (kind) {
      case Kind::EuclideanCartesian:
        return 1.0;
      case Kind::PerTriangleConstant:
        return std::sqrt(cart(x, y, tri).determinant());
      default: {
        const double r = std::hypot(x, y);
        return sqrt_g_polar(r) / r;
      }
    }
  }

  Vec2 grad_sqrt_g(double x, double y) const {
    switch (kind) {
      case Kind::EuclideanCartesian:
      case Kind::PerTriangleConstant:
        return {0.0, 0.0};
      default: {
        const double r = std::hypot(x, y);
        // d/dr [ s(r)/r ] with s = sqrt(g_rr g_pp)
        const double ds = (sqrt_g_polar_deriv(r) * r - sqrt_g_polar(r)) / (r * r);
        return {ds * x / r, ds * y / r};
      }
    }
  }
};

// The symbol field Phi: a smooth GL+(2,R)-valued map. rho_i = Phi_i1 sigma_1
// + Phi_i2 sigma_2. PolarFrame carries the rotationally reducible family
// whose polar representation is diag(alpha(r), beta(r)):
//   rho_1 = alpha x/r sigma_1 - beta y sigma_2
//   rho_2 = alpha y/r sigma_1 + beta x sigma_2
struct PhiField {
  enum class Kind { Identity, PolarFrame, CartesianPoly };

  Kind kind = Kind::Identity;
  RadialFn alpha = RadialFn::constant(1.0);
  RadialFn beta = RadialFn::constant(1.0);
  Poly2 p11 = Poly2::constant(1.0), p12 = Poly2::constant(0.0);
  Poly2 p21 = Poly2::constant(0.0), p22 = Poly2::constant(1.0);

  static PhiField identity() { return {}; }
  static PhiField polar_frame(RadialFn a, RadialFn b) {
    PhiField f;
    f.kind = Kind::PolarFrame;
    f.alpha = std::move(a);
    f.beta = std::move(b);
    return f;
  }
  static PhiField cartesian_poly(Poly2 a11, Poly2 a12, Poly2 a21, Poly2 a22) {
    PhiField f;
    f.kind = Kind::CartesianPoly;
    f.p11 = std::move(a11);
    f.p12 = std::move(a12);
    f.p21 = std::move(a21);
    f.p22 = std::move(a22);
    return f;
  }

  Eigen::Matrix2d value(double x, double y) const {
    switch (kind) {
      case Kind::Identity:
        return Eigen::Matrix2d::Identity();
      case Kind::PolarFrame: {
        const double r = std::hypot(x, y), a = alpha(r), b = beta(r);
        Eigen::Matrix2d phi;
        phi << a * x / r, -b * y, a * y / r, b * x;
        return phi;
      }
      case Kind::CartesianPoly: {
        Eigen::Matrix2d phi;
        phi << p11(x, y), p12(x, y), p21(x, y), p22(x, y);
        return phi;
      }
    }
    return Eigen::Matrix2d::Identity();
  }

  Eigen::Matrix2d dx(double x, double y) const { return partial(x, y, true); }
  Eigen::Matrix2d dy(double x, double y) const { return partial(x, y, false); }

 private:
  Eigen::Matrix2d partial(double x, double y, bool wrt_x) const {
    switch (kind) {
      case Kind::Identity:
        return Eigen::Matrix2d::Zero();
      case Kind::PolarFrame: {
        const double r = std::hypot(x, y);
        const double a = alpha(r), da = alpha.deriv(r);
        const double b = beta(r), db = beta.deriv(r);
        const double rx = x / r, ry = y / r;  // dr/dx, dr/dy
        Eigen::Matrix2d d;
        if (wrt_x) {
          d(0, 0) = da * rx * (x / r) + a * (1.0 / r - x * x / (r * r * r));
          d(0, 1) = -db * rx * y;
          d(1, 0) = da * rx * (y / r) + a * (-x * y / (r * r * r));
          d(1, 1) = db * rx * x + b;
        } else {
          d(0, 0) = da * ry * (x / r) + a * (-x * y / (r * r * r));
          d(0, 1) = -db * ry * y - b;
          d(1, 0) = da * ry * (y / r) + a * (1.0 / r - y * y / (r * r * r));
          d(1, 1) = db * ry * x;
        }
        return d;
      }
      case Kind::CartesianPoly: {
        Eigen::Matrix2d d;
        if (wrt_x)
          d << p11.dx(x, y), p12.dx(x, y), p21.dx(x, y), p22.dx(x, y);
        else
          d << p11.dy(x, y), p12.dy(x, y), p21.dy(x, y), p22.dy(x, y);
        return d;
      }
    }
    return Eigen::Matrix2d::Zero();
  }
};

}  // namespace specflow
