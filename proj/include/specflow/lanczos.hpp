// Windowed eigensolver for sparse Hermitian pencils (A, M), M positive
// definite: dense solve below a size threshold, otherwise shift-invert block
// Lanczos with full reorthogonalization. Convergence is monitored cheaply in
// the projected shift-invert operator; one exact Rayleigh-Ritz pass on the
// original pencil produces the returned pairs and their true residuals.
// Random deflation probes guard against eigenvalue clusters wider than the
// block.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "specflow/core.hpp"
#include "specflow/spectrum.hpp"

namespace specflow {

struct EigenPair {
  double lambda = 0.0;
  Eigen::VectorXcd vec;     // reduced coordinates
  double residual = 0.0;    // ||A x - lambda M x|| / ||M x||
};

struct WindowSolveOpts {
  int dense_threshold = 400;
  int block = 4;
  int max_subspace = 380;
  int extra_rounds = 2;      // deflation probes hunting for wide clusters
  double conv_tol = 1e-8;    // exact residual declaring convergence
  double theta_tol = 1e-9;   // projected-space residual for the cheap monitor
  unsigned seed = 20240901;
};

using SpMatC = Eigen::SparseMatrix<Complex>;

inline double pencil_residual(const SpMatC& A, const SpMatC& M, double lambda,
                              const Eigen::VectorXcd& x) {
  const Eigen::VectorXcd mx = M * x;
  return (A * x - lambda * mx).norm() / mx.norm();
}

namespace detail {

// Block Lanczos state for Op = (A - sigma M)^{-1} M in the M-inner product.
class ShiftInvertKrylov {
 public:
  ShiftInvertKrylov(const SpMatC& A, const SpMatC& M, Window window,
                    const WindowSolveOpts& opts)
      : A_(A), M_(M), window_(window), opts_(opts), rng_(opts.seed) {
    n_ = int(A.rows());
    // The window center is very often an exact eigenvalue (kernels at the
    // path endpoints), so probe a ladder of nearby shifts until the
    // factorization is trustworthy.
    const double center = 0.5 * (window.lo + window.hi);
    bool factored = false;
    for (double off : {0.0123, -0.0371, 0.0917, -0.1531, 0.2443}) {
      sigma_ = center + off * window.width();
      SpMatC K = A_ - sigma_ * M_;
      K.makeCompressed();
      lu_.compute(K);
      if (lu_.info() != Eigen::Success) continue;
      Eigen::VectorXcd probe = Eigen::VectorXcd::Ones(n_);
      probe(0) = Complex(0.5, 0.5);
      const Eigen::VectorXcd b = M_ * probe;
      const Eigen::VectorXcd x = lu_.solve(b);
      if (!x.allFinite()) continue;
      if ((K * x - b).norm() > 1e-6 * b.norm()) continue;
      factored = true;
      break;
    }
    if (!factored) throw EigensolveFailure("no usable shift factorization near window center");
    V_.resize(n_, 0);
    MV_.resize(n_, 0);
    Hop_ = Eigen::MatrixXcd::Zero(0, 0);
  }

  int dim() const { return int(V_.cols()); }
  int size() const { return n_; }
  double sigma() const { return sigma_; }
  const Eigen::MatrixXcd& basis() const { return V_; }
  const Eigen::MatrixXcd& mbasis() const { return MV_; }

  // Appends an M-orthonormalized random block; returns kept columns.
  int seed_random_block() {
    Eigen::MatrixXcd W(n_, opts_.block);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < opts_.block; ++j)
      for (int i = 0; i < n_; ++i) W(i, j) = Complex(gauss(rng_), gauss(rng_));
    return append_orthonormalized(W);
  }

  // One block step: applies Op to the newest block and extends the basis,
  // the projected operator, and the leakage coupling used for the cheap
  // residual estimate.
  int step() {
    const int b = last_block_;
    if (b == 0) return 0;
    const Eigen::MatrixXcd Y = solve_block(MV_.rightCols(b));
    // projected columns before reorthogonalization
    const Eigen::MatrixXcd T = MV_.adjoint() * Y;  // dim x b
    grow_hop(T);
    Eigen::MatrixXcd Z = Y - V_ * T;
    Z -= V_ * (MV_.adjoint() * Z);
    const int prev = b;
    const int added = append_orthonormalized(Z);
    if (added > 0)
      beta_ = MV_.rightCols(added).adjoint() * Y;  // H[new block, prev block]
    else
      beta_.resize(0, prev);
    return added;
  }

  // Cheap convergence check: Ritz values of the projected operator whose
  // |theta| reaches into the window region must have a small Lanczos leakage
  // residual ||beta y_tail||, and a converged value must exist beyond each
  // window edge.
  bool cheap_converged() {
    const int d = int(Hop_.rows());
    if (d == 0) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (Hop_ + Hop_.adjoint()));
    const auto& theta = es.eigenvalues();
    const int tail = int(beta_.cols());
    const double d_lo = std::abs(window_.lo - sigma_);
    const double d_hi = std::abs(window_.hi - sigma_);
    const double theta_window = 1.0 / std::max(d_lo, d_hi);
    bool below = false, above = false;
    for (int i = 0; i < d; ++i) {
      const double th = theta(i);
      double res = 0.0;
      if (tail > 0 && beta_.rows() > 0)
        res = (beta_ * es.eigenvectors().col(i).tail(tail)).norm();
      const bool conv = res <= opts_.theta_tol * std::max(1.0, std::abs(th));
      if (std::abs(th) >= 0.9 * theta_window && !conv) return false;
      if (conv && std::abs(th) > 1e-14) {
        const double lam = sigma_ + 1.0 / th;
        if (lam < window_.lo) below = true;
        if (lam > window_.hi) above = true;
      }
    }
    return below && above;
  }

 private:
  Eigen::MatrixXcd solve_block(const Eigen::MatrixXcd& B) {
    Eigen::MatrixXcd Y(n_, B.cols());
    for (int j = 0; j < B.cols(); ++j) Y.col(j) = lu_.solve(B.col(j));
    return Y;
  }

  void grow_hop(const Eigen::MatrixXcd& T) {
    // T has dim() rows and last_block_ cols; columns belong to the slots of
    // the newest block inside the projected operator.
    const int d = dim();
    const int b = int(T.cols());
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(d, d);
    H.topLeftCorner(Hop_.rows(), Hop_.cols()) = Hop_;
    H.rightCols(b).topRows(d) = T;
    H.bottomRows(b).leftCols(d) = T.adjoint();
    // diagonal block appears in both; T's bottom b x b block is the one to keep
    H.bottomRightCorner(b, b) = 0.5 * (T.bottomRows(b) + T.bottomRows(b).adjoint());
    Hop_ = std::move(H);
  }

  int append_orthonormalized(Eigen::MatrixXcd W) {
    for (int round = 0; round < 2; ++round)
      if (dim() > 0) W -= V_ * (MV_.adjoint() * W);
    Eigen::MatrixXcd kept(n_, W.cols());
    Eigen::MatrixXcd mkept(n_, W.cols());
    int nk = 0;
    for (int j = 0; j < W.cols(); ++j) {
      Eigen::VectorXcd w = W.col(j);
      for (int i = 0; i < nk; ++i)
        w -= kept.col(i) * (mkept.col(i).adjoint() * w)(0);
      const Eigen::VectorXcd mw = M_ * w;
      const double nrm = std::sqrt(std::abs((w.adjoint() * mw)(0).real()));
      if (!std::isfinite(nrm) || nrm < 1e-10) continue;
      kept.col(nk) = w / nrm;
      mkept.col(nk) = mw / nrm;
      ++nk;
    }
    if (nk == 0) {
      last_block_ = 0;
      return 0;
    }
    Eigen::MatrixXcd V2(n_, dim() + nk), MV2(n_, dim() + nk);
    V2 << V_, kept.leftCols(nk);
    MV2 << MV_, mkept.leftCols(nk);
    V_ = std::move(V2);
    MV_ = std::move(MV2);
    last_block_ = nk;
    return nk;
  }

  const SpMatC& A_;
  const SpMatC& M_;
  Window window_;
  WindowSolveOpts opts_;
  std::mt19937 rng_;
  Eigen::SparseLU<SpMatC> lu_;
  int n_ = 0;
  double sigma_ = 0.0;
  Eigen::MatrixXcd V_, MV_;
  Eigen::MatrixXcd Hop_;
  Eigen::MatrixXcd beta_;
  int last_block_ = 0;
};

}  // namespace detail

// All eigenpairs of (A, M) with lambda in [window.lo, window.hi].
inline std::vector<EigenPair> hermitian_window_eigs(const SpMatC& A, const SpMatC& M,
                                                    Window window,
                                                    const WindowSolveOpts& opts = {}) {
  const int n = int(A.rows());
  std::vector<EigenPair> out;
  if (n == 0) return out;

  if (n <= opts.dense_threshold) {
    Eigen::MatrixXcd Ad = Eigen::MatrixXcd(A);
    Eigen::MatrixXcd Md = Eigen::MatrixXcd(M);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(Ad, Md);
    if (es.info() != Eigen::Success) throw EigensolveFailure("dense generalized eigensolve failed");
    for (int i = 0; i < n; ++i) {
      const double lam = es.eigenvalues()(i);
      if (!window.contains(lam)) continue;
      EigenPair p;
      p.lambda = lam;
      p.vec = es.eigenvectors().col(i);
      p.residual = pencil_residual(A, M, lam, p.vec);
      out.push_back(std::move(p));
    }
    return out;
  }

  detail::ShiftInvertKrylov kry(A, M, window, opts);
  kry.seed_random_block();

  auto grow_until_converged = [&]() {
    int since_check = 0;
    while (kry.dim() < opts.max_subspace) {
      if (kry.step() == 0) return;  // Krylov space exhausted
      if (++since_check >= 2) {
        since_check = 0;
        if (kry.cheap_converged()) return;
      }
    }
  };

  // Grow the main recursion to theta convergence, run the deflation probes
  // (each must re-converge), then extract eigenpairs by one exact
  // Rayleigh-Ritz pass. Probe directions leave noise Ritz values with O(1)
  // residuals anywhere in the spectrum; those are dropped. Residuals in the
  // ambiguous middle ground mean a still-converging true pair, so iteration
  // resumes.
  grow_until_converged();
  for (int probe = 0; probe < opts.extra_rounds && kry.dim() + opts.block <= opts.max_subspace;
       ++probe) {
    if (kry.seed_random_block() == 0) break;
    grow_until_converged();
  }

  const double ghost_floor = std::max(1e-3, 1e-6 * window.width());
  for (;;) {
    out.clear();
    const Eigen::MatrixXcd& V = kry.basis();
    const Eigen::MatrixXcd HA = V.adjoint() * (A * V);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (HA + HA.adjoint()));
    double worst_ambiguous = 0.0;
    bool covered_below = false, covered_above = false;
    const double reach = 0.35 * window.width();
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      const double lam = es.eigenvalues()(i);
      if (lam < window.lo - reach || lam > window.hi + reach) continue;
      EigenPair p;
      p.lambda = lam;
      p.vec = V * es.eigenvectors().col(i);
      p.residual = pencil_residual(A, M, lam, p.vec);
      // coverage beyond the edges only needs a rough exterior eigenvalue
      if (p.residual <= 1e-4) {
        if (lam < window.lo) covered_below = true;
        if (lam > window.hi) covered_above = true;
      }
      if (window.contains(lam)) {
        if (p.residual <= opts.conv_tol)
          out.push_back(std::move(p));
        else if (p.residual < ghost_floor)
          worst_ambiguous = std::max(worst_ambiguous, p.residual);
      }
    }
    if (std::getenv("SPECFLOW_EIG_DEBUG")) {
      std::fprintf(stderr, "[eig] dim=%d kept=%zu ambiguous=%.3g cover=%d%d\n", kry.dim(),
                   out.size(), worst_ambiguous, int(covered_below), int(covered_above));
    }
    const bool exhausted = kry.dim() >= opts.max_subspace;
    if (worst_ambiguous == 0.0 && (covered_below || exhausted) && (covered_above || exhausted))
      break;
    if (exhausted) {
      if (worst_ambiguous > 0.0)
        throw EigensolveFailure("window eigenpair not converged (dim " +
                                std::to_string(kry.dim()) + ", residual " +
                                std::to_string(worst_ambiguous) + ")");
      break;
    }
    bool advanced = false;
    for (int s = 0; s < 4 && kry.dim() < opts.max_subspace; ++s) {
      if (kry.step() == 0) break;
      advanced = true;
    }
    if (!advanced) break;  // Krylov space exhausted: pencil smaller than window demand
  }
  std::sort(out.begin(), out.end(),
            [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
  return out;
}

}  // namespace specflow
