// Boundary-condition algebra for i n'(x) u+ = B(x) u-: negative-eigenvalue
// counts b_j, the equivalent reflection-matrix form M, and the translator
// from the valley-isotropic (Lambda, phi, nu) boundary parametrization of
// four-component graphene spinors to B, its eigenvalues beta_+-, and the
// ellipticity / time-reversal classification.
#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specflow/core.hpp"
#include "specflow/dirac_op.hpp"
#include "specflow/domain.hpp"

namespace specflow {

inline Eigen::Matrix2cd pauli(int i) {
  Eigen::Matrix2cd m;
  switch (i) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, Complex(0, -1), Complex(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

// Per-component boundary matrix field B(s), Hermitian and invertible. The
// smooth non-constant family is an eigenvalue-preserving conjugation
// B(s) = U(s) B0 U(s)^* with U(s) = exp(i 2 pi turns (s/L) H).
struct BoundaryCondition {
  struct Component {
    Eigen::MatrixXcd B0;
    Eigen::MatrixXcd H;  // Hermitian rotation generator; empty = constant field
    int turns = 0;

    Eigen::MatrixXcd at(double s_over_len) const {
      if (H.size() == 0 || turns == 0) return B0;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
      const double theta = 2.0 * kPi * turns * s_over_len;
      Eigen::VectorXcd phase(H.rows());
      for (int i = 0; i < H.rows(); ++i)
        phase(i) = std::polar(1.0, theta * es.eigenvalues()(i));
      const Eigen::MatrixXcd u = es.eigenvectors() * phase.asDiagonal() *
                                 es.eigenvectors().adjoint();
      return u * B0 * u.adjoint();
    }
  };

  int N = 1;
  std::vector<Component> comps;  // one per boundary component, label order
  double inv_tol = 1e-8;

  static BoundaryCondition scalars(const std::vector<double>& values) {
    BoundaryCondition bc;
    bc.N = 1;
    for (double v : values) {
      Component c;
      c.B0 = Eigen::MatrixXcd::Constant(1, 1, v);
      bc.comps.push_back(std::move(c));
    }
    bc.validate();
    return bc;
  }

  // Diagonal N x N constants, one eigenvalue vector per component.
  static BoundaryCondition diagonal(const std::vector<std::vector<double>>& diag_per_comp) {
    BoundaryCondition bc;
    bc.N = int(diag_per_comp.at(0).size());
    for (const auto& d : diag_per_comp) {
      Component c;
      Eigen::VectorXcd v(int(d.size()));
      for (std::size_t i = 0; i < d.size(); ++i) v(int(i)) = d[i];
      c.B0 = v.asDiagonal();
      bc.comps.push_back(std::move(c));
    }
    bc.validate();
    return bc;
  }

  static BoundaryCondition matrices(std::vector<Eigen::MatrixXcd> per_comp) {
    BoundaryCondition bc;
    bc.N = int(per_comp.at(0).rows());
    for (auto& m : per_comp) {
      Component c;
      c.B0 = std::move(m);
      bc.comps.push_back(std::move(c));
    }
    bc.validate();
    return bc;
  }

  // Symmetrize (rejecting drift beyond 1e-12) and check invertibility.
  void validate() {
    for (auto& c : comps) {
      const Eigen::MatrixXcd sym = 0.5 * (c.B0 + c.B0.adjoint());
      if ((c.B0 - sym).norm() > 1e-12 * std::max(1.0, c.B0.norm()))
        throw NotHermitian("boundary matrix is not Hermitian");
      c.B0 = sym;
      if (c.H.size() != 0) {
        const Eigen::MatrixXcd hs = 0.5 * (c.H + c.H.adjoint());
        if ((c.H - hs).norm() > 1e-12 * std::max(1.0, c.H.norm()))
          throw NotHermitian("rotation generator is not Hermitian");
        c.H = hs;
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c.B0);
      if (es.eigenvalues().cwiseAbs().minCoeff() < inv_tol)
        throw NotInvertible("boundary matrix nearly singular");
    }
  }

  bool is_scalar() const { return N == 1; }
  // True when every component is a constant diagonal matrix (the family the
  // radial solver decomposes into scalar problems).
  bool is_block_diagonal() const {
    for (const auto& c : comps) {
      if (c.H.size() != 0 && c.turns != 0) return false;
      if (!c.B0.isDiagonal(1e-14)) return false;
    }
    return true;
  }
};

// Number of negative eigenvalues of B along a component; constant along the
// component by invertibility + continuity, sampled to confirm.
inline int negative_count(const BoundaryCondition& bc, int component, int samples = 32) {
  const auto& c = bc.comps.at(std::size_t(component - 1));
  int count = -1;
  const int ns = (c.H.size() == 0 || c.turns == 0) ? 1 : samples;
  for (int k = 0; k < ns; ++k) {
    const Eigen::MatrixXcd b = c.at(double(k) / ns);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(b);
    if (es.eigenvalues().cwiseAbs().minCoeff() < bc.inv_tol)
      throw NotInvertible("boundary matrix nearly singular along component");
    int neg = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i) < 0) ++neg;
    if (count < 0) count = neg;
    if (neg != count)
      throw SignChangeOnComponent("negative eigenvalue count varies along component " +
                                  std::to_string(component));
  }
  return count;
}

inline std::vector<int> b_vector(const BoundaryCondition& bc, const DomainSpec& domain) {
  if (int(bc.comps.size()) != domain.m)
    throw LengthMismatch("boundary condition has " + std::to_string(bc.comps.size()) +
                         " components, domain has " + std::to_string(domain.m));
  std::vector<int> b;
  b.reserve(bc.comps.size());
  for (int j = 1; j <= domain.m; ++j) b.push_back(negative_count(bc, j));
  return b;
}

// The reflection matrix whose +1-eigenspace is {(u+, u-) : i n u+ = B u-}:
//   M = I - 2 diag((I+B^2)^-1, (I+B^2)^-1) [ I     i conj(n) B ]
//                                          [ -i n B         B^2 ]
// Hermitian, involutive, anticommutes with n_1 sigma_1 + n_2 sigma_2.
inline Eigen::MatrixXcd m_from_b(const Eigen::MatrixXcd& B, Complex n) {
  const int N = int(B.rows());
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N, N);
  const Eigen::MatrixXcd inv = (I + B * B).inverse();
  Eigen::MatrixXcd block(2 * N, 2 * N);
  block.topLeftCorner(N, N) = I;
  block.topRightCorner(N, N) = Complex(0, 1) * std::conj(n) * B;
  block.bottomLeftCorner(N, N) = Complex(0, -1) * n * B;
  block.bottomRightCorner(N, N) = B * B;
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2 * N, 2 * N);
  d.topLeftCorner(N, N) = inv;
  d.bottomRightCorner(N, N) = inv;
  return Eigen::MatrixXcd::Identity(2 * N, 2 * N) - 2.0 * d * block;
}

// Orthogonal projector onto {(u+, u-) : i n u+ = B u-}.
inline Eigen::MatrixXcd bc_subspace_projector(const Eigen::MatrixXcd& B, Complex n) {
  const int N = int(B.rows());
  Eigen::MatrixXcd W(2 * N, N);
  W.topRows(N) = Complex(0, -1) * std::conj(n) * B;
  W.bottomRows(N) = Eigen::MatrixXcd::Identity(N, N);
  return W * (W.adjoint() * W).inverse() * W.adjoint();
}

// --- Valley-isotropic boundary parametrization ------------------------------

struct ABComponent {
  double Lambda = 0.0;  // mixing angle
  double phi = 0.0;     // tilt of n_2 in the (tangent, e_3) plane
  Eigen::Vector3d nu = Eigen::Vector3d(0, 0, 1);
};

struct ABBoundaryData {
  std::vector<ABComponent> comps;
  double ell_tol = 1e-6;
};

// Ellipticity: both Lambda+phi and Lambda-phi stay away from 0 mod pi.
inline bool ab_is_elliptic(double Lambda, double phi, double ell_tol = 1e-6) {
  return angle_dist_mod(Lambda + phi, kPi) >= ell_tol &&
         angle_dist_mod(Lambda - phi, kPi) >= ell_tol;
}

inline double ab_ellipticity_margin(double Lambda, double phi) {
  return std::min(angle_dist_mod(Lambda + phi, kPi), angle_dist_mod(Lambda - phi, kPi));
}

struct ABTranslation {
  Eigen::Matrix2cd B;
  double beta_plus = 0.0;
  double beta_minus = 0.0;
};

// B = beta_+ P_+ + beta_- P_- with P_+- = (tau_0 +- nu.tau)/2,
// beta_+ = cot((Lambda+phi)/2), beta_- = tan((Lambda-phi)/2).
inline ABTranslation ab_to_b(double Lambda, double phi, Eigen::Vector3d nu,
                             double ell_tol = 1e-6) {
  if (!ab_is_elliptic(Lambda, phi, ell_tol))
    throw NotElliptic("(Lambda, phi) within tolerance of the non-elliptic set");
  const double nn = nu.norm();
  if (std::abs(nn - 1.0) > 1e-9) throw ConfigError("nu must be a unit vector");
  nu /= nn;
  ABTranslation tr;
  tr.beta_plus = 1.0 / std::tan(0.5 * (Lambda + phi));
  tr.beta_minus = std::tan(0.5 * (Lambda - phi));
  const Eigen::Matrix2cd S = nu(0) * pauli(1) + nu(1) * pauli(2) + nu(2) * pauli(3);
  const Eigen::Matrix2cd Pp = 0.5 * (pauli(0) + S);
  const Eigen::Matrix2cd Pm = 0.5 * (pauli(0) - S);
  tr.B = tr.beta_plus * Pp + tr.beta_minus * Pm;
  return tr;
}

// Negative-eigenvalue count from the angle classification: reduce both
// Lambda+-phi mod 2 pi into (0, 2 pi); each angle in (pi, 2 pi) contributes
// one negative eigenvalue.
inline int ab_b_count(double Lambda, double phi, double ell_tol = 1e-6) {
  if (!ab_is_elliptic(Lambda, phi, ell_tol))
    throw NotElliptic("(Lambda, phi) within tolerance of the non-elliptic set");
  int count = 0;
  if (reduce_into(Lambda + phi, 2.0 * kPi) > kPi) ++count;
  if (reduce_into(Lambda - phi, 2.0 * kPi) > kPi) ++count;
  return count;
}

struct TimeReversalReport {
  int predicted = 0;
  std::vector<int> b_hat;
  std::vector<int> mu_hat;
};

// Lambda == 0 (time-reversal symmetric data): every b_j = 1, and since the
// winding degrees sum to zero the predicted flow vanishes for any gauge.
inline TimeReversalReport ab_time_reversal_predict(const DomainSpec& domain, const GaugeField& mu,
                                                   const std::vector<double>& phi_per_comp,
                                                   double ell_tol = 1e-6) {
  if (int(phi_per_comp.size()) != domain.m)
    throw LengthMismatch("phi list must have one entry per boundary component");
  TimeReversalReport rep;
  for (double phi : phi_per_comp) {
    if (!ab_is_elliptic(0.0, phi, ell_tol))
      throw NotElliptic("time-reversal condition not elliptic: n_2 vertical somewhere");
    rep.b_hat.push_back(ab_b_count(0.0, phi, ell_tol));
  }
  rep.mu_hat = degrees_vector(mu, domain);
  rep.predicted = 0;
  return rep;
}

// Builds the full boundary condition (N = 2) from per-component AB data.
inline BoundaryCondition ab_boundary_condition(const ABBoundaryData& data) {
  std::vector<Eigen::MatrixXcd> mats;
  mats.reserve(data.comps.size());
  for (const auto& c : data.comps) mats.push_back(ab_to_b(c.Lambda, c.phi, c.nu, data.ell_tol).B);
  return BoundaryCondition::matrices(std::move(mats));
}

}  // namespace specflow
