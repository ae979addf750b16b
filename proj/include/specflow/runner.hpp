// Orchestration: dispatch a flow problem to the analytic benchmark, the
// radial solver or the 2D discretization, run both counting methods, attach
// the boundary-data prediction, and execute the basic-property checks.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specflow/boundary.hpp"
#include "specflow/dirac_op.hpp"
#include "specflow/domain.hpp"
#include "specflow/fem2d.hpp"
#include "specflow/flow.hpp"
#include "specflow/mesh_gen.hpp"
#include "specflow/radial.hpp"

namespace specflow {

enum class SolverKind { Oracle, Radial, Fem2d };

inline SolverKind solver_from_string(const std::string& s) {
  if (s == "oracle") return SolverKind::Oracle;
  if (s == "radial") return SolverKind::Radial;
  if (s == "fem2d") return SolverKind::Fem2d;
  throw ConfigError("unknown solver '" + s + "'");
}

struct FlowProblem {
  SolverKind solver = SolverKind::Radial;
  DomainSpec domain;
  OperatorSpec op;
  BoundaryCondition bc;
  GaugeField mu;
  PotentialPath path;
  Window window = Window::symmetric(2.5);
  double t0 = 0.0, t1 = 1.0;
  std::optional<int> c_m;       // unset: 1 for m == 2, measured otherwise
  FlowOpts flow;
  RadialOpts radial;
  FemOpts fem;
  double fem_match_tol = 5e-3;  // shift-method tolerance for meshed spectra
  // fem2d mesh source: explicit mesh, or annulus discretization parameters
  std::shared_ptr<const TriMesh> mesh;
  int annulus_n_r = 40, annulus_n_phi = 160;
};

inline SliceProvider make_slice_provider(const FlowProblem& p) {
  switch (p.solver) {
    case SolverKind::Oracle:
      if (!is_reference_annulus_config(p.domain, p.op, p.bc, p.mu))
        throw NotOracleConfiguration(
            "the closed-form spectrum exists only for the unit-annulus benchmark");
      return [window = p.window](double t) { return analytic_annulus_spectrum(t, window); };
    case SolverKind::Radial: {
      // disjoint unions of annuli: direct-sum of the parts' spectra
      if (p.domain.kind == DomainSpec::Kind::DisjointUnion) {
        return [p](double t) {
          SpectrumSlice merged;
          merged.t = t;
          merged.window = p.window;
          merged.zero_snap = p.radial.eig_tol;
          merged.completeness_certificate = true;
          for (const auto& part : p.domain.parts) {
            SpectrumSlice s = spectrum_at(part, p.op, p.bc, p.mu, t, p.window, p.path, p.radial);
            merged.completeness_certificate &= s.completeness_certificate;
            for (auto& e : s.eigs) merged.eigs.push_back(std::move(e));
          }
          merged.sort_and_snap();
          return merged;
        };
      }
      return [p](double t) {
        return spectrum_at(p.domain, p.op, p.bc, p.mu, t, p.window, p.path, p.radial);
      };
    }
    case SolverKind::Fem2d: {
      std::shared_ptr<const TriMesh> mesh = p.mesh;
      if (!mesh) {
        if (p.domain.kind == DomainSpec::Kind::Meshed)
          mesh = p.domain.mesh;
        else if (p.domain.kind == DomainSpec::Kind::Annulus)
          mesh = std::make_shared<TriMesh>(
              mesh_annulus(p.domain, p.annulus_n_r, p.annulus_n_phi));
        else
          throw ConfigError("fem2d needs a mesh for this domain");
      }
      auto prob = std::make_shared<FemProblem>(mesh, p.op, p.bc, p.mu, p.path, p.fem);
      return [prob, window = p.window](double t) { return prob->slice_at(t, window); };
    }
  }
  throw ConfigError("unreachable solver kind");
}

// Upper bound on |d lambda / d t| along the family: max |ramp'| times the
// largest operator norm of the induced gauge potential over the domain.
inline double max_band_speed(const FlowProblem& p) {
  double ramp_rate = 0.0;
  for (int i = 0; i <= 100; ++i)
    ramp_rate = std::max(ramp_rate,
                         std::abs(p.path.ramp.deriv(p.t0 + (p.t1 - p.t0) * i / 100.0)));
  double qnorm = 0.0;
  auto scan_annulus = [&](const DomainSpec& ann) {
    const GaugeField* mu = &p.mu;
    const int w = mu->is_angular_power() ? mu->angular_w() : 0;
    for (int i = 0; i <= 256; ++i) {
      const double r = ann.r_in + (ann.r_out - ann.r_in) * i / 256.0;
      if (mu->is_angular_power())
        qnorm = std::max(qnorm, std::abs(double(w)) * std::abs(p.op.phi.beta(r)));
      else
        qnorm = std::max(qnorm, gauge_q1_at(*mu, p.op.phi, {r, 0.0}, p.op.N).operatorNorm());
    }
  };
  switch (p.domain.kind) {
    case DomainSpec::Kind::Annulus:
      scan_annulus(p.domain);
      break;
    case DomainSpec::Kind::DisjointUnion:
      for (const auto& part : p.domain.parts) scan_annulus(part);
      break;
    case DomainSpec::Kind::Meshed: {
      for (const auto& tri : p.domain.mesh->triangles) {
        const Vec2 c = (p.domain.mesh->nodes[std::size_t(tri[0])] +
                        p.domain.mesh->nodes[std::size_t(tri[1])] +
                        p.domain.mesh->nodes[std::size_t(tri[2])]) *
                       (1.0 / 3.0);
        qnorm = std::max(qnorm, gauge_q1_at(p.mu, p.op.phi, c, p.op.N).operatorNorm());
      }
      break;
    }
  }
  return ramp_rate * qnorm;
}

inline FlowResult run_flow(const FlowProblem& p) {
  validate_gauge_centers(p.mu, p.domain);

  FlowResult res;
  res.mu_hat = degrees_vector(p.mu, p.domain);
  res.b_hat = b_vector(p.bc, p.domain);

  FlowProblem prob = p;
  if (prob.flow.max_band_speed <= 0) prob.flow.max_band_speed = max_band_speed(p);
  const FlowProblem& pp = prob;
  SliceProvider provider = make_slice_provider(pp);
  std::optional<FlowTracker> tracker;
  if (pp.solver == SolverKind::Radial && pp.domain.kind == DomainSpec::Kind::Annulus) {
    // one retry with a larger mode cutoff if the sentinel certificate trips
    try {
      tracker.emplace(provider, pp.t0, pp.t1, pp.flow);
    } catch (const ModeWindowTooSmall&) {
      FlowProblem boosted = pp;
      boosted.radial.kmax_override =
          int(std::ceil(pp.window.half() + std::abs(res.mu_hat.back()) + 8.0));
      res.notes.push_back("mode cutoff boosted after sentinel hit");
      provider = make_slice_provider(boosted);
      tracker.emplace(provider, pp.t0, pp.t1, pp.flow);
    }
  } else {
    tracker.emplace(provider, pp.t0, pp.t1, pp.flow);
  }

  res.sf_crossings = count_flow(*tracker, &res.crossings, &res.epsilon, pp.flow.epsilon_cap);
  const BandFamily fam = tracker->family();

  const double match_tol =
      p.solver == SolverKind::Fem2d ? std::max(p.flow.match_tol, p.fem_match_tol)
                                    : p.flow.match_tol;
  try {
    res.sf_shift = shift_flow(fam, match_tol);
    res.shift_valid = true;
  } catch (const NotIsospectral& e) {
    res.shift_valid = false;
    res.notes.push_back(std::string("shift method unavailable: ") + e.what());
  }

  int dot = 0, c_for_prediction = 0;
  for (std::size_t j = 0; j < res.b_hat.size(); ++j) dot += res.b_hat[j] * res.mu_hat[j];
  if (p.c_m.has_value()) {
    c_for_prediction = *p.c_m;
    res.predicted = predict(res.b_hat, res.mu_hat, c_for_prediction);
  } else if (p.domain.m == 2) {
    c_for_prediction = 1;
    res.predicted = predict(res.b_hat, res.mu_hat, 1);
  } else {
    res.notes.push_back("m > 2: prediction constant unknown, reporting the measured ratio");
  }
  if (dot != 0) res.c_m_measured = double(res.sf_crossings) / double(dot);

  res.agree_methods = !res.shift_valid || res.sf_crossings == res.sf_shift;
  res.agree_predicted = !res.predicted.has_value() || res.sf_crossings == *res.predicted;
  return res;
}

// --- Basic properties of the flow, checked on solver output ----------------

struct PropertyReport {
  struct Item {
    std::string name;
    bool pass = false;
    std::string detail;
  };
  std::vector<Item> items;
  bool all_pass() const {
    for (const auto& i : items)
      if (!i.pass) return false;
    return true;
  }
};

// P0 zero crossing, P1 homotopy invariance, P2 path additivity, P3 direct
// sums, P4 conjugacy invariance; all realized as exact integer assertions on
// radial-solver runs over the unit annulus family.
inline PropertyReport property_suite(const RadialOpts& ropts = {}, const FlowOpts& fopts = {}) {
  PropertyReport rep;
  const DomainSpec ann = make_annulus(1.0, 2.0);
  const OperatorSpec op = reference_annulus_operator();

  auto flow_of = [&](const BoundaryCondition& bc, const GaugeField& mu, double t0, double t1,
                     const PotentialPath& path, Window window) {
    FlowProblem p;
    p.solver = SolverKind::Radial;
    p.domain = ann;
    p.op = op;
    p.bc = bc;
    p.mu = mu;
    p.path = path;
    p.window = window;
    p.t0 = t0;
    p.t1 = t1;
    p.radial = ropts;
    p.flow = fopts;
    SliceProvider provider = make_slice_provider(p);
    FlowTracker tracker(provider, t0, t1, p.flow);
    return count_flow(tracker);
  };
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    rep.items.push_back({name, pass, detail});
  };

  const Window win = Window::symmetric(2.5);
  const GaugeField mu1 = GaugeField::angular_power(1);
  const auto lin = PotentialPath::linear();

  {
    // P0: same-sign boundary data keeps the family invertible, flow 0
    const int sf = flow_of(BoundaryCondition::scalars({1.0, 1.0}), mu1, 0, 1, lin, win);
    add("P0 zero crossing", sf == 0, "same-sign boundary flow = " + std::to_string(sf));
  }
  {
    // P1: homotopic reparametrized path gives the same flow
    const auto bc = BoundaryCondition::scalars({1.0, -1.0});
    const int a = flow_of(bc, mu1, 0, 1, lin, win);
    const int b = flow_of(bc, mu1, 0, 1, PotentialPath::smoothstep(), win);
    add("P1 homotopy invariance", a == b,
        "linear " + std::to_string(a) + " vs smoothstep " + std::to_string(b));
  }
  {
    // P2: additivity under splitting the path at t = 1/2
    const auto bc = BoundaryCondition::scalars({1.0, -1.0});
    const int whole = flow_of(bc, mu1, 0, 1, lin, win);
    const int first = flow_of(bc, mu1, 0, 0.5, lin, win);
    const int second = flow_of(bc, mu1, 0.5, 1, lin, win);
    add("P2 path additivity", whole == first + second,
        std::to_string(whole) + " = " + std::to_string(first) + " + " + std::to_string(second));
  }
  {
    // P3: block direct sum (N = 2) adds the scalar flows
    OperatorSpec op2 = op;
    op2.N = 2;
    const auto bc2 = BoundaryCondition::diagonal({{-1.0, 1.0}, {-1.0, -1.0}});
    FlowProblem p;
    p.solver = SolverKind::Radial;
    p.domain = ann;
    p.op = op2;
    p.bc = bc2;
    p.mu = mu1;
    p.window = win;
    p.radial = ropts;
    p.flow = fopts;
    const int sum = run_flow(p).sf_crossings;
    const int a = flow_of(BoundaryCondition::scalars({-1.0, -1.0}), mu1, 0, 1, lin, win);
    const int b = flow_of(BoundaryCondition::scalars({1.0, -1.0}), mu1, 0, 1, lin, win);
    add("P3 direct-sum additivity", sum == a + b,
        std::to_string(sum) + " = " + std::to_string(a) + " + " + std::to_string(b));
  }
  {
    // P4: multiplying the gauge by zero-winding factors leaves the flow
    // alone. The constant phase is checked on the radial solver; a winding
    // factor centered outside the domain (zero degrees on both components,
    // but a genuinely different potential path) is checked on the meshed
    // solver, where the flow must match the plain run exactly.
    const auto bc = BoundaryCondition::scalars({1.0, -1.0});
    const int plain = flow_of(bc, mu1, 0, 1, lin, win);
    const int with_phase =
        flow_of(bc, gauge_product(mu1, GaugeField::constant(0.7)), 0, 1, lin, win);

    auto fem_flow = [&](const GaugeField& mu) {
      FlowProblem p;
      p.solver = SolverKind::Fem2d;
      p.domain = ann;
      p.op = op;
      p.bc = bc;
      p.mu = mu;
      p.window = Window::symmetric(1.2);
      p.annulus_n_r = 12;
      p.annulus_n_phi = 48;
      p.flow = fopts;
      return run_flow(p).sf_crossings;
    };
    const GaugeField outside =
        gauge_product(mu1, GaugeField::winding_product({{{5.0, 0.0}, 1}}));
    const int fem_plain = fem_flow(mu1);
    const int fem_conj = fem_flow(outside);
    add("P4 conjugacy invariance",
        plain == with_phase && fem_plain == fem_conj && fem_plain == plain,
        std::to_string(plain) + " vs phase " + std::to_string(with_phase) + "; fem " +
            std::to_string(fem_plain) + " vs outside factor " + std::to_string(fem_conj));
  }
  return rep;
}

}  // namespace specflow
