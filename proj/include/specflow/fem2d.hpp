// Linear-element discretization of (D_{Phi,Q}, B) on triangulated domains.
//
// The assembled A is the symmetrized weak form 0.5[<Du, v> + <u, Dv>] with
// per-triangle centroid sampling of metric, symbol and potential; the
// antisymmetrized derivative term makes A Hermitian cellwise and absorbs the
// R_Phi correction, so R is never evaluated here. The boundary condition
// i n' u+ = B u- is eliminated strongly: boundary nodes keep u- as the free
// unknown and u+ = -i (n')^{-1} B u-.
//
// First-order operators on equal-order elements pollute: near-zero
// checkerboard modes appear alongside the physical spectrum. Candidates are
// filtered by their residual on the uniformly refined nested mesh, where
// physical pairs have small residual and checkerboard pairs do not.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "specflow/boundary.hpp"
#include "specflow/core.hpp"
#include "specflow/dirac_op.hpp"
#include "specflow/domain.hpp"
#include "specflow/lanczos.hpp"
#include "specflow/mesh_gen.hpp"
#include "specflow/spectrum.hpp"

namespace specflow {

struct DiscreteOperator {
  SpMatC A;      // Hermitian symmetrized form, full dof space
  SpMatC Mmass;  // Hermitian positive-definite mass
  SpMatC C;      // constraint basis: full dofs x free dofs
  SpMatC Ared;   // C* A C
  SpMatC Mred;   // C* M C
  int N = 1;
  int n_nodes = 0;

  int full_dim() const { return int(A.rows()); }
  int reduced_dim() const { return int(Ared.rows()); }
};

namespace detail {

struct BoundaryNodeInfo {
  int label = 0;
  double s_over_len = 0.0;
};

inline std::vector<BoundaryNodeInfo> boundary_node_info(const TriMesh& mesh) {
  std::vector<BoundaryNodeInfo> info(std::size_t(mesh.n_nodes()));
  for (std::size_t l = 0; l < mesh.loops.size(); ++l) {
    const auto& loop = mesh.loops[l];
    double total = 0.0;
    std::vector<double> s(loop.size(), 0.0);
    for (std::size_t i = 0; i < loop.size(); ++i) {
      s[i] = total;
      const Vec2 d = mesh.nodes[std::size_t(loop[(i + 1) % loop.size()])] -
                     mesh.nodes[std::size_t(loop[i])];
      total += d.norm();
    }
    for (std::size_t i = 0; i < loop.size(); ++i)
      info[std::size_t(loop[i])] = {int(l) + 1, s[i] / total};
  }
  return info;
}

// Metric tensor at a node; per-triangle metrics are averaged over the
// adjacent triangles.
inline Eigen::Matrix2d node_metric(const TriMesh& mesh, const MetricSpec& metric, int node,
                                   const std::vector<std::vector<int>>& node_tris) {
  if (metric.kind != MetricSpec::Kind::PerTriangleConstant) {
    const Vec2 p = mesh.nodes[std::size_t(node)];
    return metric.cart(p.x, p.y);
  }
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  const auto& tris = node_tris[std::size_t(node)];
  for (int t : tris) g += metric.tri_metric[std::size_t(t)];
  return g / double(tris.size());
}

}  // namespace detail

inline DiscreteOperator assemble(const TriMesh& mesh, const OperatorSpec& op,
                                 const BoundaryCondition& bc, const GaugeField& mu, double t,
                                 const PotentialPath& path = PotentialPath::linear()) {
  const int N = op.N;
  const int nd = 2 * N;
  const int n_nodes = mesh.n_nodes();
  const int full = nd * n_nodes;
  if (int(bc.comps.size()) != mesh.n_components)
    throw LengthMismatch("boundary condition components != mesh components");

  const Eigen::MatrixXcd s1 = sigma1(N), s2 = sigma2(N);
  const double ramp = path.at(t);

  std::vector<Eigen::Triplet<Complex>> ta, tm;
  ta.reserve(std::size_t(mesh.n_triangles()) * std::size_t(9 * nd * nd));
  tm.reserve(std::size_t(mesh.n_triangles()) * std::size_t(9 * nd));

  for (int tri = 0; tri < mesh.n_triangles(); ++tri) {
    const auto& tv = mesh.triangles[std::size_t(tri)];
    const Vec2 p0 = mesh.nodes[std::size_t(tv[0])];
    const Vec2 p1 = mesh.nodes[std::size_t(tv[1])];
    const Vec2 p2 = mesh.nodes[std::size_t(tv[2])];
    const double area = TriMesh::tri_signed_area(p0, p1, p2);
    if (area <= 0) throw MeshInvariantViolation("non-positive triangle area");
    const Vec2 centroid = (p0 + p1 + p2) * (1.0 / 3.0);

    // P1 gradients
    Eigen::Matrix<double, 3, 2> grad;
    grad << p1.y - p2.y, p2.x - p1.x, p2.y - p0.y, p0.x - p2.x, p0.y - p1.y, p1.x - p0.x;
    grad /= (2.0 * area);

    const double sg = op.metric.sqrt_g(centroid.x, centroid.y, tri);
    if (!(sg > 0)) throw MeshInvariantViolation("non-positive volume density");
    const Eigen::Matrix2d phi = op.phi.value(centroid.x, centroid.y);
    if (phi.determinant() <= 0) throw MeshInvariantViolation("Phi left GL+(2,R)");
    const Eigen::MatrixXcd rho1 = phi(0, 0) * s1 + phi(0, 1) * s2;
    const Eigen::MatrixXcd rho2 = phi(1, 0) * s1 + phi(1, 1) * s2;
    Eigen::MatrixXcd Q = op.q_base.eval(centroid, N, tri);
    if (ramp != 0.0 && !mu.windings.empty()) Q += ramp * gauge_q1_at(mu, op.phi, centroid, N);

    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double mloc = sg * area * (i == j ? 2.0 : 1.0) / 12.0;
        // antisymmetrized derivative term
        const double dgx = (area / 3.0) * (grad(j, 0) - grad(i, 0));
        const double dgy = (area / 3.0) * (grad(j, 1) - grad(i, 1));
        for (int a = 0; a < nd; ++a) {
          for (int b = 0; b < nd; ++b) {
            Complex val = Complex(0, -0.5) * sg * (rho1(a, b) * dgx + rho2(a, b) * dgy);
            val += Q(a, b) * mloc;
            if (val != Complex(0, 0))
              ta.emplace_back(nd * tv[i] + a, nd * tv[j] + b, val);
          }
          tm.emplace_back(nd * tv[i] + a, nd * tv[j] + a, Complex(mloc, 0.0));
        }
      }
    }
  }

  DiscreteOperator dop;
  dop.N = N;
  dop.n_nodes = n_nodes;
  dop.A.resize(full, full);
  dop.A.setFromTriplets(ta.begin(), ta.end());
  dop.Mmass.resize(full, full);
  dop.Mmass.setFromTriplets(tm.begin(), tm.end());

  // Constraint basis: interior nodes keep all 2N dofs, boundary nodes keep
  // the N components of u- with u+ = -i (n')^{-1} B u-.
  std::vector<std::vector<int>> node_tris;
  if (op.metric.kind == MetricSpec::Kind::PerTriangleConstant) {
    node_tris.assign(std::size_t(n_nodes), {});
    for (int tri = 0; tri < mesh.n_triangles(); ++tri)
      for (int v : mesh.triangles[std::size_t(tri)]) node_tris[std::size_t(v)].push_back(tri);
  }
  const auto binfo = detail::boundary_node_info(mesh);

  std::vector<Eigen::Triplet<Complex>> tc;
  int free_count = 0;
  for (int node = 0; node < n_nodes; ++node) {
    if (!mesh.is_boundary[std::size_t(node)]) {
      for (int a = 0; a < nd; ++a)
        tc.emplace_back(nd * node + a, free_count + a, Complex(1, 0));
      free_count += nd;
      continue;
    }
    const Vec2 nu = mesh.node_normals[std::size_t(node)];
    const Eigen::Matrix2d g = detail::node_metric(mesh, op.metric, node, node_tris);
    Eigen::Vector2d ncov(nu.x, nu.y);
    const double glen = std::sqrt(ncov.transpose() * g.inverse() * ncov);
    ncov /= glen;  // unit covector in the metric
    const Vec2 pos = mesh.nodes[std::size_t(node)];
    const Eigen::Matrix2d phi = op.phi.value(pos.x, pos.y);
    const Complex nprime(ncov(0) * phi(0, 0) + ncov(1) * phi(1, 0),
                         ncov(0) * phi(0, 1) + ncov(1) * phi(1, 1));
    if (std::abs(nprime) < 1e-12) throw SingularNPrime("n' vanished at a boundary node");
    const auto& bi = binfo[std::size_t(node)];
    const Eigen::MatrixXcd B = bc.comps.at(std::size_t(bi.label - 1)).at(bi.s_over_len);
    const Eigen::MatrixXcd K = (Complex(0, -1) * std::conj(nprime) / std::norm(nprime)) * B;
    for (int a = 0; a < N; ++a) {
      for (int b = 0; b < N; ++b)
        if (K(a, b) != Complex(0, 0))
          tc.emplace_back(nd * node + a, free_count + b, K(a, b));
      tc.emplace_back(nd * node + N + a, free_count + a, Complex(1, 0));
    }
    free_count += N;
  }
  dop.C.resize(full, free_count);
  dop.C.setFromTriplets(tc.begin(), tc.end());

  dop.Ared = dop.C.adjoint() * dop.A * dop.C;
  dop.Mred = dop.C.adjoint() * dop.Mmass * dop.C;
  dop.Ared = SpMatC(0.5 * (SpMatC(dop.Ared.adjoint()) + dop.Ared));
  dop.Mred = SpMatC(0.5 * (SpMatC(dop.Mred.adjoint()) + dop.Mred));
  return dop;
}

inline double hermiticity_defect(const SpMatC& A) {
  const SpMatC d = SpMatC(A.adjoint()) - A;
  const double na = A.norm();
  return na > 0 ? d.norm() / na : 0.0;
}

// Uniform nested refinement (triangles quadrisected, boundary edges split,
// labels inherited). Returns the fine mesh and the P1 prolongation in node
// space (fine nodes x coarse nodes).
inline std::pair<TriMesh, Eigen::SparseMatrix<double>> refine_uniform(const TriMesh& mesh) {
  TriMesh fine;
  fine.nodes = mesh.nodes;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find({key.first, key.second});
    if (it != midpoint.end()) return it->second;
    const int id = int(fine.nodes.size());
    fine.nodes.push_back((mesh.nodes[std::size_t(a)] + mesh.nodes[std::size_t(b)]) * 0.5);
    midpoint.emplace(std::make_pair(key.first, key.second), id);
    return id;
  };
  for (const auto& t : mesh.triangles) {
    const int m01 = mid(t[0], t[1]), m12 = mid(t[1], t[2]), m20 = mid(t[2], t[0]);
    fine.triangles.push_back({t[0], m01, m20});
    fine.triangles.push_back({t[1], m12, m01});
    fine.triangles.push_back({t[2], m20, m12});
    fine.triangles.push_back({m01, m12, m20});
  }
  for (const auto& be : mesh.boundary_edges) {
    const int m = mid(be.a, be.b);
    fine.boundary_edges.push_back({be.a, m, be.label});
    fine.boundary_edges.push_back({m, be.b, be.label});
  }
  fine.finalize();

  std::vector<Eigen::Triplet<double>> tp;
  for (int i = 0; i < mesh.n_nodes(); ++i) tp.emplace_back(i, i, 1.0);
  for (const auto& [edge, node] : midpoint) {
    tp.emplace_back(node, edge.first, 0.5);
    tp.emplace_back(node, edge.second, 0.5);
  }
  Eigen::SparseMatrix<double> P(fine.n_nodes(), mesh.n_nodes());
  P.setFromTriplets(tp.begin(), tp.end());
  return {std::move(fine), std::move(P)};
}

struct FemOpts {
  WindowSolveOpts solver;
  double res_tol_factor = 1e-6;  // reduced-pencil residual <= factor * window width
  bool pollution_filter = true;
  // Roughness threshold of the pollution filter: the mass-norm fraction of
  // an eigenvector that neighbor averaging removes. Checkerboard modes score
  // about 1 to 1.5 at every resolution, physical modes O(h) (a fraction of
  // 0.3 even on coarse corner domains).
  double pollution_tol = 0.5;
  double zero_snap = 5e-3;
  double merge_tol = 1e-10;
  // Spurious branches hybridize with physical bands at avoided crossings;
  // members of such a pair can straddle the window edge, so the solve and
  // the filter run on a window padded by this fraction of the width.
  double window_pad = 0.08;
};

// A meshed eigenvalue problem with its nested refinement cached for the
// pollution filter.
class FemProblem {
 public:
  FemProblem(std::shared_ptr<const TriMesh> mesh, OperatorSpec op, BoundaryCondition bc,
             GaugeField mu, PotentialPath path = PotentialPath::linear(), FemOpts opts = {})
      : mesh_(std::move(mesh)),
        op_(std::move(op)),
        bc_(std::move(bc)),
        mu_(std::move(mu)),
        path_(path),
        opts_(opts) {}

  const TriMesh& mesh() const { return *mesh_; }
  const FemOpts& opts() const { return opts_; }

  DiscreteOperator assemble_at(double t) const {
    return assemble(*mesh_, op_, bc_, mu_, t, path_);
  }

  SpectrumSlice slice_at(double t, Window window) const {
    DiscreteOperator dop = assemble_at(t);
    const double padW = opts_.window_pad * window.width();
    const Window solve_window{window.lo - padW, window.hi + padW};
    auto pairs = hermitian_window_eigs(dop.Ared, dop.Mred, solve_window, opts_.solver);

    SpectrumSlice slice;
    slice.t = t;
    slice.window = window;
    slice.zero_snap = opts_.zero_snap;

    const double res_tol = opts_.res_tol_factor * window.width();
    std::vector<EigenPair> kept;
    for (auto& p : pairs) {
      if (p.residual > res_tol) {
        slice.notes.push_back("dropped unconverged pair at lambda=" + std::to_string(p.lambda));
        continue;
      }
      kept.push_back(std::move(p));
    }

    if (opts_.pollution_filter && !kept.empty()) {
      // First-order equal-order elements pollute with checkerboard modes.
      // Those are grid-frequency oscillations: neighbor averaging removes an
      // O(1) fraction of their mass norm, against O(h) for physical modes.
      // Near avoided crossings the computed eigenvectors are hybrids of the
      // two families, so the classification is global: the smooth subspace
      // of the roughness form over the span of all computed vectors is
      // extracted first, and the physical spectrum is the Rayleigh-Ritz
      // spectrum of (A, M) on that subspace.
      ensure_adjacency();
      auto rough_defect = [&](const Eigen::VectorXcd& u) {  // u - (neighbor average)
        const int nd = 2 * op_.N;
        Eigen::VectorXcd d = u;
        for (std::size_t i = 0; i < adjacency_.size(); ++i) {
          for (int a = 0; a < nd; ++a) {
            Complex acc(0, 0);
            for (int j : adjacency_[i]) acc += u(nd * j + a);
            d(nd * int(i) + a) -= acc / double(adjacency_[i].size());
          }
        }
        return d;
      };
      const int K = int(kept.size());
      Eigen::MatrixXcd U(dop.full_dim(), K), D(dop.full_dim(), K);
      for (int j = 0; j < K; ++j) {
        U.col(j) = dop.C * kept[std::size_t(j)].vec;
        D.col(j) = rough_defect(U.col(j));
      }
      const Eigen::MatrixXcd MU = dop.Mmass * U;
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> rough_es(
          D.adjoint() * (dop.Mmass * D), U.adjoint() * MU);
      int n_smooth = 0;
      for (int j = 0; j < K; ++j)
        if (std::sqrt(std::max(0.0, rough_es.eigenvalues()(j))) <= opts_.pollution_tol)
          ++n_smooth;
      {
        char buf[96];
        std::snprintf(buf, sizeof buf, "pollution filter: %d of %d directions kept", n_smooth,
                      K);
        slice.notes.push_back(buf);
        for (int j = n_smooth; j < K; ++j) {
          std::snprintf(buf, sizeof buf, "suspected pollution: direction roughness=%.3g",
                        std::sqrt(std::max(0.0, rough_es.eigenvalues()(j))));
          slice.notes.push_back(buf);
        }
      }
      std::vector<EigenPair> physical;
      if (n_smooth > 0) {
        // reduced-coordinate basis of the smooth subspace
        Eigen::MatrixXcd Vred(kept[0].vec.size(), n_smooth);
        for (int k = 0; k < n_smooth; ++k) {
          Vred.col(k).setZero();
          for (int j = 0; j < K; ++j)
            Vred.col(k) += rough_es.eigenvectors()(j, k) * kept[std::size_t(j)].vec;
        }
        const Eigen::MatrixXcd Hs = Vred.adjoint() * (dop.Ared * Vred);
        const Eigen::MatrixXcd Ms = Vred.adjoint() * (dop.Mred * Vred);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> ses(
            0.5 * (Hs + Hs.adjoint()), 0.5 * (Ms + Ms.adjoint()));
        for (int k = 0; k < n_smooth; ++k) {
          EigenPair q;
          q.lambda = ses.eigenvalues()(k);
          q.vec = Vred * ses.eigenvectors().col(k);
          q.residual = pencil_residual(dop.Ared, dop.Mred, q.lambda, q.vec);
          physical.push_back(std::move(q));
        }
      }
      std::sort(physical.begin(), physical.end(),
                [](const EigenPair& a, const EigenPair& b) { return a.lambda < b.lambda; });
      kept = std::move(physical);
    }

    for (const auto& p : kept) {
      if (p.lambda < window.lo || p.lambda > window.hi) continue;  // solve-pad trim
      if (!slice.eigs.empty() && std::abs(slice.eigs.back().lambda - p.lambda) < opts_.merge_tol) {
        slice.eigs.back().multiplicity += 1;
      } else {
        EigEntry e;
        e.lambda = p.lambda;
        e.mode_k = kFemModeTag;
        e.at_window_edge = std::abs(p.lambda - window.lo) <= opts_.zero_snap ||
                           std::abs(p.lambda - window.hi) <= opts_.zero_snap;
        slice.eigs.push_back(std::move(e));
      }
    }
    slice.completeness_certificate = true;  // dense or covered shift-invert window
    slice.sort_and_snap();
    return slice;
  }

 private:
  void ensure_adjacency() const {
    if (!adjacency_.empty()) return;
    adjacency_.assign(mesh_->nodes.size(), {});
    for (const auto& t : mesh_->triangles) {
      for (int e = 0; e < 3; ++e) {
        adjacency_[std::size_t(t[e])].push_back(t[(e + 1) % 3]);
        adjacency_[std::size_t(t[e])].push_back(t[(e + 2) % 3]);
      }
    }
    for (auto& nbrs : adjacency_) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
  }

  std::shared_ptr<const TriMesh> mesh_;
  OperatorSpec op_;
  BoundaryCondition bc_;
  GaugeField mu_;
  PotentialPath path_;
  FemOpts opts_;
  mutable std::vector<std::vector<int>> adjacency_;
};

// Convergence study against a reference spectrum on a sequence of meshes.
struct RefineReport {
  struct Level {
    int n_nodes = 0;
    std::vector<double> eigs;
    std::vector<double> errors;  // per reference eigenvalue, |eig - ref|
  };
  std::vector<double> reference;
  std::vector<Level> levels;
  bool errors_decrease = true;
  std::vector<std::string> flags;
};

inline RefineReport refine_study(const std::vector<std::shared_ptr<const TriMesh>>& meshes,
                                 const OperatorSpec& op, const BoundaryCondition& bc,
                                 const GaugeField& mu, double t, Window window,
                                 const std::vector<double>& reference,
                                 const PotentialPath& path = PotentialPath::linear(),
                                 const FemOpts& opts = {}) {
  RefineReport rep;
  rep.reference = reference;
  for (const auto& mesh : meshes) {
    FemProblem prob(mesh, op, bc, mu, path, opts);
    const SpectrumSlice slice = prob.slice_at(t, window);
    RefineReport::Level lvl;
    lvl.n_nodes = mesh->n_nodes();
    lvl.eigs = slice.values();
    for (double ref : reference) {
      double best = std::numeric_limits<double>::infinity();
      for (double v : lvl.eigs) best = std::min(best, std::abs(v - ref));
      lvl.errors.push_back(best);
    }
    rep.levels.push_back(std::move(lvl));
  }
  for (std::size_t r = 0; r < reference.size(); ++r) {
    for (std::size_t l = 0; l + 1 < rep.levels.size(); ++l) {
      if (rep.levels[l + 1].errors[r] > rep.levels[l].errors[r] + 1e-12) {
        rep.errors_decrease = false;
        rep.flags.push_back("non-converging branch near lambda=" + std::to_string(reference[r]));
      }
    }
  }
  return rep;
}

}  // namespace specflow
