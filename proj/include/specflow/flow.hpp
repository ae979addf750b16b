// The spectral-flow engine: adaptive eigenvalue-band tracking across the
// parameter, signed zero-crossing counting with the epsilon convention, the
// isospectral-shift cross-check, and the boundary-data prediction
// c_m * sum_j b_j mu_j.
//
// Counting works per t-step inside a gap-protected region [R_n, L]: R_n is
// placed in a spectral gap wider than the step's band movement, so no band
// crosses R_n during the step and the population change of the region equals
// the net signed crossings of the level L. Window entry and exit happen far
// from L and cannot leak into the count. When no protected gap exists the
// step is bisected and re-solved.
//
// The shift method follows the band bijection: per-step sorted alignment
// offsets between consecutive slices accumulate to the integer number of
// positions the (common) endpoint spectrum is displaced along the bands.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specflow/core.hpp"
#include "specflow/spectrum.hpp"

namespace specflow {

struct FlowOpts {
  int tgrid_seed = 5;          // initial uniform grid points on [t0, t1]
  double move_tol = -1.0;      // <= 0: 0.25 * smallest distinct slice gap
  double gap_floor = 1e-6;     // distinct-value resolution for gap statistics
  int max_bisect = 12;         // bisection levels per initial interval
  double match_tol = 1e-6;     // isospectrality tolerance of the shift method
  double epsilon_cap = 1e-6;   // epsilon convention: min(gap/2, cap)
  // A priori bound on |d lambda / d t| (= max |ramp'| * max ||Q_1||). Sorted
  // matching of lattice-like spectra aliases when bands move more than half
  // a gap per step, so the seed grid is made fine enough that the *true*
  // movement already satisfies move_tol.
  double max_band_speed = 0.0;  // <= 0: unknown, rely on observed movement
};

struct Crossing {
  double t = 0.0;
  int band = 0;      // sorted index in the earlier slice of the step
  int direction = 0; // +1 upward, -1 downward
};

struct BandFamily {
  std::vector<double> ts;                   // sorted parameter grid
  std::vector<SpectrumSlice> slices;        // one per grid point
  std::vector<int> offsets;                 // sorted-index alignment per step
  std::vector<double> movements;            // max matched |dlambda| per step

  const SpectrumSlice& front() const { return slices.front(); }
  const SpectrumSlice& back() const { return slices.back(); }
};

using SliceProvider = std::function<SpectrumSlice(double)>;

namespace detail {

inline double min_distinct_gap(const SpectrumSlice& s, double floor_tol) {
  const auto v = s.values();
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = v[i] - v[i - 1];
    if (d > floor_tol) gap = std::min(gap, d);
  }
  return gap;
}

// Sorted alignment of two value lists: offset o matching v0[i] ~ v1[i + o]
// minimizing the mean matched distance over the overlap.
inline std::pair<int, double> align_slices(const std::vector<double>& v0,
                                           const std::vector<double>& v1) {
  if (v0.empty() || v1.empty()) return {0, 0.0};
  int best_o = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  double best_move = 0.0;
  const int span = 4 + std::abs(int(v0.size()) - int(v1.size()));
  for (int o = -span; o <= span; ++o) {
    double cost = 0.0, move = 0.0;
    int count = 0;
    for (int i = 0; i < int(v0.size()); ++i) {
      const int j = i + o;
      if (j < 0 || j >= int(v1.size())) continue;
      const double d = std::abs(v1[std::size_t(j)] - v0[std::size_t(i)]);
      cost += d;
      move = std::max(move, d);
      ++count;
    }
    if (count == 0) continue;
    cost /= count;
    if (cost < best_cost - 1e-12 ||
        (cost < best_cost + 1e-12 && std::abs(o) < std::abs(best_o))) {
      best_cost = cost;
      best_o = o;
      best_move = move;
    }
  }
  return {best_o, best_move};
}

}  // namespace detail

// Band family construction and counting with refinement on demand. The
// provider may be empty, in which case any refinement demand is an error.
class FlowTracker {
 public:
  FlowTracker(SliceProvider provider, double t0, double t1, FlowOpts opts)
      : provider_(std::move(provider)), opts_(opts) {
    if (opts_.tgrid_seed < 2) throw ConfigError("t grid needs at least 2 points");
    insert(t0, 0);
    insert(t1, 0);
    init_move_tol();
    int n_seed = opts_.tgrid_seed;
    if (opts_.max_band_speed > 0)
      n_seed = std::max(n_seed,
                        int(std::ceil((t1 - t0) * opts_.max_band_speed / move_tol_)) + 1);
    for (int i = 1; i + 1 < n_seed; ++i) insert(t0 + (t1 - t0) * i / (n_seed - 1), 0);
    refine_to_move_tol();
  }

  FlowTracker(std::vector<SpectrumSlice> slices, FlowOpts opts) : opts_(opts) {
    if (slices.size() < 2) throw ConfigError("need at least two slices");
    for (auto& s : slices) {
      const double t = s.t;
      store_.emplace(t, Entry{std::move(s), 0});
    }
    init_move_tol();
    refine_to_move_tol();
  }

  BandFamily family() const {
    BandFamily fam;
    for (const auto& [t, e] : store_) {
      fam.ts.push_back(t);
      fam.slices.push_back(e.slice);
    }
    for (std::size_t n = 0; n + 1 < fam.slices.size(); ++n) {
      auto [o, move] = detail::align_slices(fam.slices[n].values(), fam.slices[n + 1].values());
      fam.offsets.push_back(o);
      fam.movements.push_back(move);
    }
    return fam;
  }

  const SpectrumSlice& front() const { return store_.begin()->second.slice; }
  const SpectrumSlice& back() const { return store_.rbegin()->second.slice; }

  // Net signed crossings of `level`, bisecting any step that lacks a
  // gap-protected reference below the level.
  int count_at_level(double level, std::vector<Crossing>* log = nullptr) {
    for (;;) {
      int total = 0;
      bool needs_refine = false;
      auto it = store_.begin();
      for (; std::next(it) != store_.end(); ++it) {
        auto nx = std::next(it);
        const SpectrumSlice& s0 = it->second.slice;
        const SpectrumSlice& s1 = nx->second.slice;
        auto [o, move] = detail::align_slices(s0.values(), s1.values());
        (void)o;
        const double lo = s0.window.lo;
        std::vector<double> vals;
        for (const SpectrumSlice* s : {&s0, &s1})
          for (double v : s->values())
            if (v > lo && v < level) vals.push_back(v);
        std::sort(vals.begin(), vals.end());
        const double guard = std::max(1.05 * move, 1e-12);
        double best_ref = 0.0, best_clear = -1.0;
        auto consider = [&](double a, double b) {
          const double mid = 0.5 * (a + b);
          if (mid <= lo + guard || mid >= level) return;
          const double clear = 0.5 * (b - a);
          if (clear > best_clear) {
            best_clear = clear;
            best_ref = mid;
          }
        };
        if (vals.empty()) {
          consider(lo + guard, level);
        } else {
          consider(lo + guard, vals.front());
          for (std::size_t i = 1; i < vals.size(); ++i) consider(vals[i - 1], vals[i]);
          consider(vals.back(), level);
        }
        if (best_clear <= guard) {
          needs_refine = true;
          bisect(it, nx, "no gap-protected reference at t in [" +
                             std::to_string(it->first) + ", " + std::to_string(nx->first) + "]");
          break;
        }
        total += s0.count_in(best_ref, level) - s1.count_in(best_ref, level);
      }
      if (needs_refine) continue;
      if (log) fill_log(level, log);
      return total;
    }
  }

  double move_tol() const { return move_tol_; }

 private:
  struct Entry {
    SpectrumSlice slice;
    int depth = 0;
  };

  void insert(double t, int depth) {
    if (store_.count(t)) return;
    if (!provider_) throw RefinementBudgetExhausted("refinement required but no slice provider");
    store_.emplace(t, Entry{provider_(t), depth});
  }

  void init_move_tol() {
    move_tol_ = opts_.move_tol;
    if (move_tol_ <= 0) {
      // Near-degenerate doublets (within the slices' zero-snap resolution)
      // move together; sorted matching cannot misplace a band across them,
      // so they do not constrain the step and are excluded from the gap.
      const double floor_tol =
          std::max(opts_.gap_floor, 2.0 * std::max(front().zero_snap, back().zero_snap));
      double gap = std::min(detail::min_distinct_gap(front(), floor_tol),
                            detail::min_distinct_gap(back(), floor_tol));
      if (!std::isfinite(gap)) gap = 1.0;
      move_tol_ = std::max(0.25 * gap, 1e-3 * front().window.half());
    }
  }

  void refine_to_move_tol() {
    for (;;) {
      bool refined = false;
      for (auto it = store_.begin(); std::next(it) != store_.end(); ++it) {
        auto nx = std::next(it);
        auto [o, move] =
            detail::align_slices(it->second.slice.values(), nx->second.slice.values());
        (void)o;
        if (move <= move_tol_ * (1.0 + 1e-9)) continue;
        bisect(it, nx, "band movement " + std::to_string(move) + " above tolerance");
        refined = true;
        break;
      }
      if (!refined) return;
    }
  }

  void bisect(std::map<double, Entry>::iterator it, std::map<double, Entry>::iterator nx,
              const std::string& why) {
    const int lvl = std::max(it->second.depth, nx->second.depth) + 1;
    if (lvl > opts_.max_bisect)
      throw RefinementBudgetExhausted(why + " after " + std::to_string(opts_.max_bisect) +
                                      " bisections");
    insert(0.5 * (it->first + nx->first), lvl);
  }

  void fill_log(double level, std::vector<Crossing>* log) const {
    auto it = store_.begin();
    for (; std::next(it) != store_.end(); ++it) {
      auto nx = std::next(it);
      const auto v0 = it->second.slice.values();
      const auto v1 = nx->second.slice.values();
      auto [o, move] = detail::align_slices(v0, v1);
      (void)move;
      for (int i = 0; i < int(v0.size()); ++i) {
        const int j = i + o;
        if (j < 0 || j >= int(v1.size())) continue;
        const double a = v0[std::size_t(i)], b = v1[std::size_t(j)];
        if ((a <= level) == (b <= level)) continue;
        const double frac = (level - a) / (b - a);
        log->push_back(
            {it->first + frac * (nx->first - it->first), i, b > a ? +1 : -1});
      }
    }
  }

  SliceProvider provider_;
  FlowOpts opts_;
  std::map<double, Entry> store_;
  double move_tol_ = 0.25;
};

// The band construction alone (spec-level entry points).
inline BandFamily track_bands(const SliceProvider& provider, double t0, double t1,
                              const FlowOpts& opts = {}) {
  return FlowTracker(provider, t0, t1, opts).family();
}
inline BandFamily track_bands(std::vector<SpectrumSlice> slices, const FlowOpts& opts = {}) {
  return FlowTracker(std::move(slices), opts).family();
}

// The epsilon of the counting convention: half the smallest nonzero endpoint
// |eigenvalue| (zeros below each slice's zero_snap count as exact zeros),
// capped by epsilon_cap.
inline double counting_epsilon(const SpectrumSlice& e0, const SpectrumSlice& e1,
                               double cap = 1e-6) {
  double smallest = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const SpectrumSlice* s : {&e0, &e1}) {
    for (double v : s->values()) {
      if (std::abs(v) <= s->zero_snap) continue;
      smallest = std::min(smallest, std::abs(v));
      any = true;
    }
  }
  if (!any) throw EpsilonUndefined("endpoint slices contain only zero eigenvalues");
  return std::min(0.5 * smallest, cap);
}

// Spectral flow by the epsilon convention on a tracker (refines on demand).
inline int count_flow(FlowTracker& tracker, std::vector<Crossing>* log = nullptr,
                      double* epsilon_out = nullptr, double epsilon_cap = 1e-6) {
  const double eps = counting_epsilon(tracker.front(), tracker.back(), epsilon_cap);
  if (epsilon_out) *epsilon_out = eps;
  return tracker.count_at_level(-eps, log);
}

// Fixed-family variant: counting that would need refinement raises.
inline int count_flow(const BandFamily& fam, std::vector<Crossing>* log = nullptr,
                      double* epsilon_out = nullptr, double epsilon_cap = 1e-6) {
  FlowOpts opts;
  opts.move_tol = std::numeric_limits<double>::infinity();  // family is fixed
  FlowTracker tracker(fam.slices, opts);
  const double eps = counting_epsilon(fam.front(), fam.back(), epsilon_cap);
  if (epsilon_out) *epsilon_out = eps;
  return tracker.count_at_level(-eps, log);
}

inline int count_crossings_at_level(const BandFamily& fam, double level,
                                    std::vector<Crossing>* log = nullptr) {
  FlowOpts opts;
  opts.move_tol = std::numeric_limits<double>::infinity();
  FlowTracker tracker(fam.slices, opts);
  return tracker.count_at_level(level, log);
}

// Isospectral shift method: the accumulated sorted-index alignment offset
// along the band bijection. Valid when the endpoint slices agree as
// multisets within match_tol.
inline int shift_flow(const BandFamily& fam, double match_tol = 1e-6) {
  const auto v0 = fam.front().values();
  const auto v1 = fam.back().values();
  if (v0.size() != v1.size())
    throw NotIsospectral("endpoint slices have " + std::to_string(v0.size()) + " and " +
                         std::to_string(v1.size()) + " eigenvalues");
  if (int(v0.size()) < 5)
    throw NotIsospectral("window too narrow: need at least 5 endpoint eigenvalues");
  for (std::size_t i = 0; i < v0.size(); ++i)
    if (std::abs(v0[i] - v1[i]) > match_tol)
      throw NotIsospectral("endpoint spectra differ by " + std::to_string(v0[i] - v1[i]) +
                           " at position " + std::to_string(i));
  int shift = 0;
  for (int o : fam.offsets) shift += o;
  return shift;
}

// Endpoint-only shift for spectra whose displacement is visible from the
// values alone (lattice-like slices); reports ties instead of guessing.
inline int shift_flow(const SpectrumSlice& s0, const SpectrumSlice& s1,
                      double match_tol = 1e-6) {
  const auto v0 = s0.values();
  const auto v1 = s1.values();
  if (v0.empty() || v1.empty()) throw NotIsospectral("empty endpoint slice");
  int best_o = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  bool tie = false;
  for (int o = -int(v1.size()); o <= int(v1.size()); ++o) {
    double cost = 0.0;
    int count = 0;
    for (int i = 0; i < int(v0.size()); ++i) {
      const int j = i + o;
      if (j < 0 || j >= int(v1.size())) continue;
      cost += std::abs(v1[std::size_t(j)] - v0[std::size_t(i)]);
      ++count;
    }
    if (count == 0) continue;
    cost /= count;
    if (std::abs(cost - best_cost) <= match_tol) {
      tie = true;
    } else if (cost < best_cost) {
      best_cost = cost;
      best_o = o;
      tie = false;
    }
  }
  if (best_cost > match_tol) throw NotIsospectral("no alignment matches within tolerance");
  if (tie) throw AmbiguousShift("two alignment offsets match equally well");
  // values moved down by o positions means o upward crossings of any level
  return -best_o;
}

// Theorem prediction c_m * sum_j b_j mu_j.
inline int predict(const std::vector<int>& b_hat, const std::vector<int>& mu_hat, int c_m) {
  if (b_hat.size() != mu_hat.size()) throw LengthMismatch("b and mu vectors differ in length");
  int sum_mu = 0, dot = 0;
  for (std::size_t j = 0; j < b_hat.size(); ++j) {
    sum_mu += mu_hat[j];
    dot += b_hat[j] * mu_hat[j];
  }
  if (sum_mu != 0) throw DegreesNotSumZero("winding degrees sum to " + std::to_string(sum_mu));
  return c_m * dot;
}

struct FlowResult {
  int sf_crossings = 0;
  int sf_shift = 0;
  bool shift_valid = false;
  std::optional<int> predicted;
  std::optional<double> c_m_measured;
  double epsilon = 0.0;
  std::vector<Crossing> crossings;
  std::vector<int> b_hat, mu_hat;
  bool agree_methods = false;    // crossings == shift (when shift valid)
  bool agree_predicted = false;  // crossings == predicted (when predicted)
  std::string slices_csv_path;
  std::vector<std::string> notes;
};

}  // namespace specflow
