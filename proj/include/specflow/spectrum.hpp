// Spectrum slices: all eigenvalues of an operator family member inside a
// window at one parameter value, with provenance and a completeness flag.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "specflow/core.hpp"

namespace specflow {

inline constexpr int kFemModeTag = -999;

struct Window {
  double lo = -1.0, hi = 1.0;

  double half() const { return 0.5 * (hi - lo); }
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  static Window symmetric(double half) { return {-half, half}; }
};

struct EigEntry {
  double lambda = 0.0;
  int multiplicity = 1;
  int mode_k = kFemModeTag;  // first contributing Fourier mode, or the FEM tag
  bool at_window_edge = false;
  std::vector<std::pair<int, int>> provenance;  // (mode k, mode-local index)
};

struct SpectrumSlice {
  double t = 0.0;
  Window window;
  std::vector<EigEntry> eigs;  // sorted ascending
  bool completeness_certificate = false;
  double zero_snap = 1e-8;  // |lambda| below this is reported as exact zero
  std::vector<std::string> notes;

  // Eigenvalues expanded by multiplicity.
  std::vector<double> values() const {
    std::vector<double> v;
    for (const auto& e : eigs)
      for (int m = 0; m < e.multiplicity; ++m) v.push_back(e.lambda);
    return v;
  }
  int count_in(double a, double b) const {  // (a, b]
    int n = 0;
    for (const auto& e : eigs)
      if (e.lambda > a && e.lambda <= b) n += e.multiplicity;
    return n;
  }

  void sort_and_snap() {
    std::sort(eigs.begin(), eigs.end(),
              [](const EigEntry& a, const EigEntry& b) { return a.lambda < b.lambda; });
    for (auto& e : eigs)
      if (std::abs(e.lambda) < zero_snap) e.lambda = 0.0;
  }
};

// CSV rows "t, lambda, multiplicity, mode_k".
inline void write_slices_csv(const std::vector<SpectrumSlice>& slices, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MissingInput("cannot write " + path);
  out << "t,lambda,multiplicity,mode_k\n";
  char buf[128];
  for (const auto& s : slices) {
    for (const auto& e : s.eigs) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%d\n", s.t, e.lambda, e.multiplicity,
                    e.mode_k);
      out << buf;
    }
  }
}

}  // namespace specflow
