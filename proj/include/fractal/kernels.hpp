#pragma once

#include <vector>

#include "fractal/harmonic.hpp"

namespace fractal {

// Per-cell Gram matrices of mutual energy measures at one level:
// entry (i,j) of cell w is nu_{f_i,f_j}(K_w) = 2 r_w^{-1} E^(0)(u_i(w), u_j(w))
// where u_i(w) are the boundary values of f_i on cell w. Exact rationals,
// cells in lexicographic word order, symmetric d x d blocks stored full.
struct CellGramField {
  int level = 0;
  int d = 0;
  std::vector<Rat> gram;

  const Rat& at(size_t cell, int i, int j) const {
    return gram[(cell * d + i) * d + j];
  }
  size_t cells() const { return d == 0 ? 0 : gram.size() / (static_cast<size_t>(d) * d); }
};

// Reference implementation: straight mpq recursion, single-threaded.
CellGramField gram_field_reference(const PcfModel& model,
                                   const std::vector<PiecewiseHarmonicFunction>& fs, int m);

// Production kernel: scaled 64-bit integer expansion with OpenMP-parallel
// per-cell loops, falling back to the reference path when a magnitude
// guard detects possible overflow. Output is bit-identical to the
// reference (both are exact).
CellGramField gram_field(const PcfModel& model,
                         const std::vector<PiecewiseHarmonicFunction>& fs, int m,
                         bool parallel = true);

struct RefinementCheckReport {
  bool ok = false;
  int max_level = 0;
  int fail_level = -1;      // transition (fail_level -> fail_level+1) that broke
  long fail_parent = -1;    // rank of the offending parent cell
};

// Exact bulk verification of the child-sum identity
// nu_f(K_w) = sum_i nu_f(K_{w i}) for every word up to max_m. Runs on the
// integer layer (the same rationals the tables hold, before reduction), so
// deep levels cost integer multiplications instead of per-cell mpq
// normalization; falls back to the mpq path when the magnitude guard
// trips. Together with total mass at level 1 this pins the mass identity
// at every level by induction.
RefinementCheckReport check_measure_refinement(const PcfModel& model,
                                               const PiecewiseHarmonicFunction& f,
                                               int max_m);

}  // namespace fractal
