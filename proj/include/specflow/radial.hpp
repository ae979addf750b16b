// Semi-analytic spectra for rotationally symmetric annulus problems.
//
// For the polar-frame family (Phi with polar representation diag(alpha(r),
// beta(r)), diagonal radial metric, radial block potentials, angular-power
// gauge) the Fourier substitution u_k(r) e^{i k phi} decouples the modes.
// Each scalar mode problem reduces, after the substitution u+ = e^{i chi} f,
// u- = i e^{i chi} h (chi absorbs the pure-gauge real off-diagonal of Q),
// to a real first-order system whose Pruefer angle psi = atan2(h, f) obeys
//   psi'(r) = [ lambda - q11 cos^2 psi - q22 sin^2 psi - kappa sin 2 psi ] / alpha,
//   kappa(r) = k beta(r) - ramp(t) w beta(r) - Im q12(r),
// with boundary lines n' f = b h at both radii. The endpoint angle is
// strictly increasing in lambda, so eigenvalues are the level crossings
// psi(r_out; lambda) = psi_out + j pi; this is validated per run and
// cross-checked by a staggered-grid Sturm count.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "specflow/boundary.hpp"
#include "specflow/core.hpp"
#include "specflow/dirac_op.hpp"
#include "specflow/domain.hpp"
#include "specflow/fields.hpp"
#include "specflow/spectrum.hpp"

namespace specflow {

struct RadialOpts {
  double eig_tol = 1e-8;
  double scan_step = 0.05;
  int staggered_points = 256;  // intervals of the certification grid
  int kmax_override = -1;
  double window_pad_factor = 100.0;  // inclusion pad = factor * eig_tol
};

// One scalar (N_eff = 1) radial block of a rotationally symmetric problem.
struct ScalarRadialProblem {
  double r_in = 1.0, r_out = 2.0;
  RadialFn alpha = RadialFn::constant(1.0);
  RadialFn beta = RadialFn::constant(1.0);
  MetricSpec metric;  // for sqrt_g weight, the c-term and boundary conormals
  RadialFn q11 = RadialFn::constant(0.0);
  RadialFn q22 = RadialFn::constant(0.0);
  RadialFn q12_im = RadialFn::constant(0.0);
  int w = 0;           // gauge angular power
  double gauge_amp = 0.0;  // ramp(t); kappa subtracts gauge_amp * w * beta(r)

  // Polar volume density sqrt(g_rr g_pp); Euclidean in polar form is (1, r^2).
  double sqrt_g_pol(double r) const {
    if (metric.kind == MetricSpec::Kind::EuclideanCartesian) return r;
    return metric.sqrt_g_polar(r);
  }
  double sqrt_g_pol_deriv(double r) const {
    if (metric.kind == MetricSpec::Kind::EuclideanCartesian) return 1.0;
    return metric.sqrt_g_polar_deriv(r);
  }
  double g_rr(double r) const {
    if (metric.kind == MetricSpec::Kind::EuclideanCartesian) return 1.0;
    return metric.g_rr_at(r);
  }
  // c(r) = (sqrt_g alpha)' / (2 sqrt_g); drops out of the angle equation but
  // enters the staggered certification operator.
  double c_term(double r) const {
    const double sg = sqrt_g_pol(r);
    return (sqrt_g_pol_deriv(r) * alpha(r) + sg * alpha.deriv(r)) / (2.0 * sg);
  }
  double nprime_in() const { return -std::sqrt(g_rr(r_in)) * alpha(r_in); }
  double nprime_out() const { return std::sqrt(g_rr(r_out)) * alpha(r_out); }
};

// Mode-k problem of one scalar block.
struct ModeProblem {
  int k = 0;
  int n_eff = 1;
  ScalarRadialProblem base;
  double b_in = 1.0, b_out = -1.0;

  double kappa(double r) const {
    return (double(k) - base.gauge_amp * base.w) * base.beta(r) - base.q12_im(r);
  }
  double psi_in() const { return std::atan2(base.nprime_in(), b_in); }
  double psi_out_target() const { return std::atan2(base.nprime_out(), b_out); }
};

namespace detail {

// Dormand-Prince 5(4) for a scalar ODE.
template <typename Rhs>
double integrate_scalar_ode(Rhs rhs, double x0, double x1, double y0, double rel_tol = 1e-11,
                            double abs_tol = 1e-12) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  double x = x0, y = y0;
  double h = (x1 - x0) / 16.0;
  const double hmin = (x1 - x0) * 1e-14;
  double k1 = rhs(x, y);
  int guard = 0;
  while (x < x1) {
    if (++guard > 1000000) throw ScanResolutionExhausted("ODE step limit hit");
    if (x + h > x1) h = x1 - x;
    const double k2 = rhs(x + c2 * h, y + h * a21 * k1);
    const double k3 = rhs(x + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const double k4 = rhs(x + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 = rhs(x + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double k6 =
        rhs(x + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double k7 = rhs(x + h, ynew);
    const double err =
        std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
    const double tol = abs_tol + rel_tol * std::max(std::abs(y), std::abs(ynew));
    if (err <= tol || h <= hmin) {
      x += h;
      y = ynew;
      k1 = k7;  // FSAL
    }
    const double factor = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 4.0;
    h *= std::clamp(factor, 0.2, 4.0);
    h = std::max(h, hmin);
  }
  return y;
}

// Banded (pentadiagonal) symmetric LDL^T inertia: number of eigenvalues of
// the interleaved staggered operator below sigma. Tiny pivots are nudged,
// which cannot change a count away from exact coincidences.
class StaggeredCounter {
 public:
  StaggeredCounter(const ModeProblem& mp, int intervals) {
    const int M = intervals;
    const double dr = (mp.base.r_out - mp.base.r_in) / M;
    n_ = 2 * M + 1;
    diag_.assign(std::size_t(n_), 0.0);
    sub1_.assign(std::size_t(n_), 0.0);  // sub1_[i] = A[i, i-1]
    sub2_.assign(std::size_t(n_), 0.0);  // sub2_[i] = A[i, i-2]
    std::vector<double> weight(std::size_t(n_), 0.0);

    auto fidx = [](int j) { return 2 * j; };
    auto hidx = [](int j) { return 2 * j + 1; };
    const auto& b = mp.base;
    auto r_at = [&](int j) { return b.r_in + j * dr; };
    auto m_at = [&](int j) { return b.r_in + (j + 0.5) * dr; };

    // Row-weighted unsymmetrized entries; the pencil is symmetrized after.
    std::vector<double> L_diag(std::size_t(n_), 0.0);
    // store both off-diagonal triangles to average
    std::vector<double> L_lo1(std::size_t(n_), 0.0), L_up1(std::size_t(n_), 0.0);
    std::vector<double> L_lo2(std::size_t(n_), 0.0), L_up2(std::size_t(n_), 0.0);

    for (int j = 0; j <= M; ++j) {
      const double r = r_at(j);
      weight[std::size_t(fidx(j))] = b.sqrt_g_pol(r) * dr * ((j == 0 || j == M) ? 0.5 : 1.0);
    }
    for (int j = 0; j < M; ++j) {
      const double m = m_at(j);
      weight[std::size_t(hidx(j))] = b.sqrt_g_pol(m) * dr;
    }

    // h rows: -alpha f' + (kappa - c) f + q22 h = lambda h at midpoints
    for (int j = 0; j < M; ++j) {
      const double m = m_at(j);
      const double al = b.alpha(m), kp = mp.kappa(m), c = b.c_term(m);
      const double w = weight[std::size_t(hidx(j))];
      L_diag[std::size_t(hidx(j))] = w * b.q22(m);
      // coupling to f_j (index hidx(j)-1) and f_{j+1} (index hidx(j)+1)
      L_lo1[std::size_t(hidx(j))] = w * ((kp - c) / 2.0 + al / dr);    // A[h_j, f_j]
      L_up1[std::size_t(hidx(j))] = w * ((kp - c) / 2.0 - al / dr);    // A[h_j, f_{j+1}]
    }
    // interior f rows: q11 f + alpha h' + (kappa + c) h = lambda f at nodes
    for (int j = 1; j < M; ++j) {
      const double r = r_at(j);
      const double al = b.alpha(r), kp = mp.kappa(r), c = b.c_term(r);
      const double w = weight[std::size_t(fidx(j))];
      L_diag[std::size_t(fidx(j))] = w * b.q11(r);
      L_lo1[std::size_t(fidx(j))] = w * (-al / dr + (kp + c) / 2.0);   // A[f_j, h_{j-1}]
      L_up1[std::size_t(fidx(j))] = w * (al / dr + (kp + c) / 2.0);    // A[f_j, h_j]
    }
    // boundary f rows with the ghost midpoint eliminated through the
    // boundary line n' f = b h (h extrapolated as the midpoint average)
    {
      const double r = r_at(0);
      const double al = b.alpha(r), kp = mp.kappa(r), c = b.c_term(r);
      const double gamma = 2.0 * b.nprime_in() / mp.b_in;
      const double w = weight[std::size_t(fidx(0))];
      L_diag[std::size_t(fidx(0))] = w * (b.q11(r) - al * gamma / dr + (kp + c) * gamma / 2.0);
      L_up1[std::size_t(fidx(0))] = w * (2.0 * al / dr);               // A[f_0, h_0]
    }
    {
      const double r = r_at(M);
      const double al = b.alpha(r), kp = mp.kappa(r), c = b.c_term(r);
      const double gamma = 2.0 * b.nprime_out() / mp.b_out;
      const double w = weight[std::size_t(fidx(M))];
      L_diag[std::size_t(fidx(M))] = w * (b.q11(r) + al * gamma / dr + (kp + c) * gamma / 2.0);
      L_lo1[std::size_t(fidx(M))] = w * (-2.0 * al / dr);              // A[f_M, h_{M-1}]
    }

    // Symmetrize and reduce the pencil (S, W) to standard form
    // W^{-1/2} S W^{-1/2} (bandwidth preserved).
    std::vector<double> wi(std::size_t(n_), 0.0);
    for (int i = 0; i < n_; ++i) wi[std::size_t(i)] = 1.0 / std::sqrt(weight[std::size_t(i)]);
    for (int i = 0; i < n_; ++i) {
      diag_[std::size_t(i)] = L_diag[std::size_t(i)] * wi[std::size_t(i)] * wi[std::size_t(i)];
      if (i >= 1)
        sub1_[std::size_t(i)] = 0.5 * (L_lo1[std::size_t(i)] + L_up1[std::size_t(i - 1)]) *
                                wi[std::size_t(i)] * wi[std::size_t(i - 1)];
      if (i >= 2)
        sub2_[std::size_t(i)] = 0.5 * (L_lo2[std::size_t(i)] + L_up2[std::size_t(i - 2)]) *
                                wi[std::size_t(i)] * wi[std::size_t(i - 2)];
    }
  }

  // eigenvalues strictly below sigma
  int count_below(double sigma) const {
    for (int attempt = 0; attempt < 8; ++attempt) {
      int negatives = 0;
      bool ok = true;
      // LDL^T with bandwidth 2: track the two previous factor columns.
      std::vector<double> d(std::size_t(n_), 0.0);
      std::vector<double> l1(std::size_t(n_), 0.0), l2(std::size_t(n_), 0.0);
      const double tiny = 1e-280;
      for (int i = 0; i < n_ && ok; ++i) {
        double lik2 = 0.0, lik1 = 0.0;
        if (i >= 2) lik2 = sub2_[std::size_t(i)] / d[std::size_t(i - 2)];
        if (i >= 1) {
          double aij = sub1_[std::size_t(i)];
          if (i >= 2) aij -= lik2 * d[std::size_t(i - 2)] * l1[std::size_t(i - 1)];
          lik1 = aij / d[std::size_t(i - 1)];
        }
        double dii = diag_[std::size_t(i)] - sigma;
        if (i >= 2) dii -= lik2 * lik2 * d[std::size_t(i - 2)];
        if (i >= 1) dii -= lik1 * lik1 * d[std::size_t(i - 1)];
        if (std::abs(dii) < tiny) {
          ok = false;
          break;
        }
        d[std::size_t(i)] = dii;
        l1[std::size_t(i)] = lik1;
        l2[std::size_t(i)] = lik2;
        if (dii < 0) ++negatives;
      }
      if (ok) return negatives;
      sigma += (std::abs(sigma) + 1.0) * 1e-11;  // nudge off the exact pivot
    }
    throw EigensolveFailure("staggered Sturm count failed to factor");
  }

  int count_in(double a, double b) const { return count_below(b) - count_below(a); }

 private:
  int n_ = 0;
  std::vector<double> diag_, sub1_, sub2_;
};

}  // namespace detail

// Endpoint Pruefer angle psi(r_out; lambda).
inline double pruefer_miss(const ModeProblem& mp, double lambda) {
  const auto& b = mp.base;
  auto rhs = [&](double r, double psi) {
    const double cpsi = std::cos(psi), spsi = std::sin(psi);
    return (lambda - b.q11(r) * cpsi * cpsi - b.q22(r) * spsi * spsi -
            mp.kappa(r) * 2.0 * spsi * cpsi) /
           b.alpha(r);
  };
  return detail::integrate_scalar_ode(rhs, b.r_in, b.r_out, mp.psi_in());
}

// All eigenvalues of the mode problem inside the window (plus a pad of
// 100 * eig_tol used to flag boundary-of-window values). Returns sorted
// values; `certified` reports the staggered count cross-check.
inline std::vector<double> mode_eigenvalues(const ModeProblem& mp, Window window,
                                            const RadialOpts& opts = {},
                                            bool* certified = nullptr,
                                            std::vector<std::string>* notes = nullptr) {
  const double pad = opts.window_pad_factor * opts.eig_tol;
  const double lo = window.lo - pad, hi = window.hi + pad;
  const double target = mp.psi_out_target();

  double step = opts.scan_step;
  std::vector<double> found;
  bool monotone_ok = true;
  for (int attempt = 0;; ++attempt) {
    found.clear();
    monotone_ok = true;
    const int npts = std::max(2, int(std::ceil((hi - lo) / step)) + 1);
    std::vector<double> lam(std::size_t(npts), 0.0), miss(std::size_t(npts), 0.0);
    for (int i = 0; i < npts; ++i) {
      lam[std::size_t(i)] = lo + (hi - lo) * i / (npts - 1);
      miss[std::size_t(i)] = pruefer_miss(mp, lam[std::size_t(i)]);
    }
    for (int i = 0; i + 1 < npts; ++i)
      if (miss[std::size_t(i + 1)] < miss[std::size_t(i)] - 1e-7) monotone_ok = false;

    for (int i = 0; i + 1 < npts; ++i) {
      const double m0 = miss[std::size_t(i)], m1 = miss[std::size_t(i + 1)];
      const double jlo = std::ceil((std::min(m0, m1) - target) / kPi - 1e-12);
      const double jhi = std::floor((std::max(m0, m1) - target) / kPi + 1e-12);
      for (double j = jlo; j <= jhi; j += 1.0) {
        const double level = target + j * kPi;
        if (level <= std::min(m0, m1) || level > std::max(m0, m1)) continue;
        // Illinois refinement of miss(lambda) = level on [lam_i, lam_i+1].
        double a = lam[std::size_t(i)], fa = m0 - level;
        double bb = lam[std::size_t(i + 1)], fb = m1 - level;
        for (int it = 0; it < 80 && bb - a > opts.eig_tol; ++it) {
          double c = (std::abs(fb - fa) > 1e-300) ? bb - fb * (bb - a) / (fb - fa)
                                                  : 0.5 * (a + bb);
          if (c <= a || c >= bb) c = 0.5 * (a + bb);
          const double fc = pruefer_miss(mp, c) - level;
          if ((fa < 0) == (fc < 0)) {
            a = c;
            fa = fc;
          } else {
            bb = c;
            fb = fc;
          }
        }
        found.push_back(0.5 * (a + bb));
      }
    }
    std::sort(found.begin(), found.end());

    // Certification: staggered-grid Sturm counts over a trimmed window must
    // bracket the scan count.
    const double delta = std::max(0.01 * window.half(), 1e-4);
    detail::StaggeredCounter counter(mp, opts.staggered_points);
    const int n_lower = counter.count_in(lo + delta, hi - delta);
    const int n_upper = counter.count_in(lo - delta, hi + delta);
    const int n_scan = int(found.size());
    const bool count_ok = n_lower <= n_scan && n_scan <= n_upper;
    if (count_ok) {
      if (certified) *certified = monotone_ok && count_ok;
      if (notes && !monotone_ok)
        notes->push_back("mode " + std::to_string(mp.k) + ": endpoint angle not monotone");
      break;
    }
    if (attempt >= 3)
      throw ScanResolutionExhausted("mode " + std::to_string(mp.k) + ": scan found " +
                                    std::to_string(n_scan) + ", staggered count in [" +
                                    std::to_string(n_lower) + ", " + std::to_string(n_upper) +
                                    "]");
    step *= 0.5;
    if (notes)
      notes->push_back("mode " + std::to_string(mp.k) + ": scan step halved to " +
                       std::to_string(step));
  }
  return found;
}

// --- Rotational reduction of (OperatorSpec, BoundaryCondition, GaugeField) --

struct RadialDecomposition {
  double r_in = 1.0, r_out = 2.0;
  std::vector<ScalarRadialProblem> blocks;      // one per spinor block
  std::vector<std::pair<double, double>> bcs;   // (b_in, b_out) per block
  int w = 0;
};

// Checks the rotational-symmetry preconditions and splits an N-block problem
// into scalar radial problems. The Euclidean metric is treated as the radial
// pair (g_rr, g_pp) = (1, r^2); Phi must be a polar-frame field (an identity
// Phi reduces with a rotating spinor frame outside this family).
inline RadialDecomposition reduce_radial(const DomainSpec& domain, const OperatorSpec& op,
                                         const BoundaryCondition& bc, const GaugeField& mu) {
  if (domain.kind != DomainSpec::Kind::Annulus)
    throw NotRotationallySymmetric("radial solver needs an annulus domain");
  if (op.phi.kind != PhiField::Kind::PolarFrame)
    throw NotRotationallySymmetric("radial solver needs a polar-frame symbol field");
  if (op.metric.kind == MetricSpec::Kind::PerTriangleConstant)
    throw NotRotationallySymmetric("per-triangle metric is not rotationally symmetric");
  if (!mu.is_angular_power())
    throw NotRotationallySymmetric("radial solver needs an angular-power gauge");
  if (int(bc.comps.size()) != 2) throw LengthMismatch("annulus needs 2 boundary components");
  if (!bc.is_block_diagonal())
    throw NotRotationallySymmetric("radial solver needs constant diagonal boundary matrices");
  if (!op.q_base.tri_table.empty())
    throw NotRotationallySymmetric("per-triangle potential is not rotationally symmetric");
  if (!op.q_base.blocks.empty() && int(op.q_base.blocks.size()) != op.N)
    throw ConfigError("potential blocks must match N");

  RadialDecomposition dec;
  dec.r_in = domain.r_in;
  dec.r_out = domain.r_out;
  dec.w = mu.angular_w();
  for (int i = 0; i < op.N; ++i) {
    ScalarRadialProblem sp;
    sp.r_in = domain.r_in;
    sp.r_out = domain.r_out;
    sp.alpha = op.phi.alpha;
    sp.beta = op.phi.beta;
    sp.metric = op.metric;
    sp.w = dec.w;
    if (!op.q_base.blocks.empty()) {
      sp.q11 = op.q_base.blocks[std::size_t(i)].q11;
      sp.q22 = op.q_base.blocks[std::size_t(i)].q22;
      sp.q12_im = op.q_base.blocks[std::size_t(i)].q12_im;
      // q12_re is a radial pure-gauge vector potential: absorbed exactly by
      // the phase substitution, no spectral effect.
    }
    dec.blocks.push_back(std::move(sp));
    const double b_in = bc.comps[0].B0(i, i).real();
    const double b_out = bc.comps[1].B0(i, i).real();
    dec.bcs.push_back({b_in, b_out});
  }
  return dec;
}

inline ModeProblem reduce_to_modes(const DomainSpec& domain, const OperatorSpec& op,
                                   const BoundaryCondition& bc, const GaugeField& mu, double t,
                                   int k, int block = 0,
                                   const PotentialPath& path = PotentialPath::linear()) {
  RadialDecomposition dec = reduce_radial(domain, op, bc, mu);
  ModeProblem mp;
  mp.k = k;
  mp.base = dec.blocks.at(std::size_t(block));
  mp.base.gauge_amp = path.at(t);
  mp.b_in = dec.bcs.at(std::size_t(block)).first;
  mp.b_out = dec.bcs.at(std::size_t(block)).second;
  return mp;
}

// Union of mode spectra over k in [-K, K]; the sentinel modes +-K must not
// contribute inside the window (retried with a larger K a few times, then
// reported as ModeWindowTooSmall).
inline SpectrumSlice spectrum_at(const DomainSpec& domain, const OperatorSpec& op,
                                 const BoundaryCondition& bc, const GaugeField& mu, double t,
                                 Window window, const PotentialPath& path = PotentialPath::linear(),
                                 const RadialOpts& opts = {}) {
  RadialDecomposition dec = reduce_radial(domain, op, bc, mu);

  SpectrumSlice slice;
  slice.t = t;
  slice.window = window;
  slice.zero_snap = opts.eig_tol;

  int K = opts.kmax_override > 0
              ? opts.kmax_override
              : int(std::ceil(window.half() + std::abs(dec.w) + 2.0));
  bool all_certified = true;

  for (int attempt = 0;; ++attempt) {
    slice.eigs.clear();
    all_certified = true;
    bool sentinel_clean = true;
    struct Raw {
      double lambda;
      int k;
      int local;
    };
    std::vector<Raw> raw;
    for (std::size_t blk = 0; blk < dec.blocks.size(); ++blk) {
      for (int k = -K; k <= K; ++k) {
        ModeProblem mp;
        mp.k = k;
        mp.base = dec.blocks[blk];
        mp.base.gauge_amp = path.at(t);
        mp.b_in = dec.bcs[blk].first;
        mp.b_out = dec.bcs[blk].second;
        bool cert = false;
        auto eigs = mode_eigenvalues(mp, window, opts, &cert, &slice.notes);
        all_certified = all_certified && cert;
        if ((k == -K || k == K) && !eigs.empty()) sentinel_clean = false;
        for (std::size_t i = 0; i < eigs.size(); ++i)
          raw.push_back({eigs[i], k, int(i)});
      }
    }
    if (sentinel_clean) {
      std::sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.lambda < b.lambda; });
      const double merge_tol = 25.0 * opts.eig_tol;
      for (const auto& r : raw) {
        if (!slice.eigs.empty() && std::abs(slice.eigs.back().lambda - r.lambda) < merge_tol) {
          slice.eigs.back().multiplicity += 1;
          slice.eigs.back().provenance.push_back({r.k, r.local});
        } else {
          EigEntry e;
          e.lambda = r.lambda;
          e.mode_k = r.k;
          e.provenance = {{r.k, r.local}};
          slice.eigs.push_back(std::move(e));
        }
      }
      break;
    }
    if (attempt >= 3)
      throw ModeWindowTooSmall("sentinel modes +-" + std::to_string(K) +
                               " still contribute window eigenvalues");
    K += 4;
    slice.notes.push_back("sentinel hit; mode cutoff raised to " + std::to_string(K));
  }

  const double pad = opts.window_pad_factor * opts.eig_tol;
  for (auto& e : slice.eigs)
    e.at_window_edge =
        std::abs(e.lambda - window.lo) <= pad || std::abs(e.lambda - window.hi) <= pad;
  slice.completeness_certificate = all_certified;
  slice.sort_and_snap();
  return slice;
}

// --- Closed-form benchmark spectrum ------------------------------------------

// The unit annulus r in [1,2], cylinder metric, N = 1, B = +1 inner / -1
// outer, mu = e^{i phi}. The spectrum is
//   { lambda : lambda - t integer }  (multiplicity 1, mode k = t - lambda)
//   union { +-sqrt((k-t)^2 + (pi l)^2) : k integer, l >= 1 }.
inline bool is_reference_annulus_config(const DomainSpec& domain, const OperatorSpec& op,
                                        const BoundaryCondition& bc, const GaugeField& mu) {
  if (domain.kind != DomainSpec::Kind::Annulus || domain.r_in != 1.0 || domain.r_out != 2.0)
    return false;
  if (op.N != 1 || op.metric.kind != MetricSpec::Kind::CylinderPolar) return false;
  if (op.phi.kind != PhiField::Kind::PolarFrame || !op.phi.alpha.is_constant() ||
      !op.phi.beta.is_constant() || op.phi.alpha(1.0) != 1.0 || op.phi.beta(1.0) != 1.0)
    return false;
  if (!op.q_base.is_zero()) return false;
  if (!mu.is_angular_power() || mu.angular_w() != 1) return false;
  if (bc.comps.size() != 2 || bc.N != 1) return false;
  return bc.comps[0].B0(0, 0) == Complex(1, 0) && bc.comps[1].B0(0, 0) == Complex(-1, 0);
}

inline SpectrumSlice analytic_annulus_spectrum(double t, Window window) {
  SpectrumSlice slice;
  slice.t = t;
  slice.window = window;
  slice.zero_snap = 1e-15;
  struct Raw {
    double lambda;
    int k;
  };
  std::vector<Raw> raw;
  // lambda = t - k
  for (int k = int(std::floor(t - window.hi)) - 1; k <= int(std::ceil(t - window.lo)) + 1; ++k) {
    const double lam = t - k;
    if (lam >= window.lo && lam <= window.hi) raw.push_back({lam, k});
  }
  // lambda^2 = (k - t)^2 + (pi l)^2
  const double top = std::max(std::abs(window.lo), std::abs(window.hi));
  if (top >= kPi) {
    const int kmax = int(std::ceil(std::abs(t) + std::sqrt(std::max(0.0, top * top - kPi * kPi)))) + 1;
    for (int k = -kmax; k <= kmax; ++k) {
      for (int l = 1; kPi * l <= top; ++l) {
        const double lam = std::sqrt((k - t) * (k - t) + kPi * kPi * l * l);
        for (double s : {+1.0, -1.0})
          if (s * lam >= window.lo && s * lam <= window.hi) raw.push_back({s * lam, k});
      }
    }
  }
  std::sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.lambda < b.lambda; });
  for (const auto& r : raw) {
    if (!slice.eigs.empty() && std::abs(slice.eigs.back().lambda - r.lambda) < 1e-12) {
      slice.eigs.back().multiplicity += 1;
      slice.eigs.back().provenance.push_back({r.k, -1});
    } else {
      EigEntry e;
      e.lambda = r.lambda;
      e.mode_k = r.k;
      e.provenance = {{r.k, -1}};
      slice.eigs.push_back(std::move(e));
    }
  }
  slice.completeness_certificate = true;
  return slice;
}

}  // namespace specflow
