#pragma once

#include <vector>

#include "fractal/kernels.hpp"

namespace fractal {

// Exact cell-resolution measure table at one level, lexicographic cell
// order. Diagonal tables are nonnegative with total mass 2 E(f); mutual
// tables are signed.
struct CellMeasureTable {
  int level = 0;
  std::vector<Rat> values;

  Rat total() const {
    Rat s = 0;
    for (const Rat& v : values) s += v;
    return s;
  }
};

CellMeasureTable cell_energy_measure(const PcfModel& model,
                                     const PiecewiseHarmonicFunction& f, int m,
                                     bool parallel = true);

CellMeasureTable mutual_cell_measure(const PcfModel& model,
                                     const PiecewiseHarmonicFunction& f,
                                     const PiecewiseHarmonicFunction& g, int m,
                                     bool parallel = true);

// Averaged diagonal table (1/d) sum nu_{f_i}: the cell resolution of the
// Kusuoka-type minimal energy-dominant measure for the given basis.
CellMeasureTable kusuoka_table(const PcfModel& model,
                               const std::vector<PiecewiseHarmonicFunction>& fs, int m,
                               bool parallel = true);

// Cell-averaged density matrix field: Gram block divided by the Kusuoka
// mass where it is positive, the zero matrix elsewhere. Trace is exactly d
// on every defined cell.
struct PhiCellField {
  int level = 0;
  int d = 0;
  std::vector<QMat> matrices;
  std::vector<char> defined;
  std::vector<Rat> kusuoka_mass;  // per cell, the normalizing measure
};

PhiCellField phi_field(const PcfModel& model,
                       const std::vector<PiecewiseHarmonicFunction>& fs, int m,
                       bool parallel = true);

PhiCellField phi_field_from_gram(const CellGramField& gram);

// Diagnostic for the derivation property at cell resolution: compares
// nu_{f^2,f}(K_w) against 2 f(x_w) nu_{f,f}(K_w) with x_w the first cell
// vertex; f^2 is not piecewise harmonic, so its cell measures are taken as
// one-level graph energies at level m. Reports the maximum deviation
// normalized by the cell energy mass times the cell oscillation of f.
struct DerivationReport {
  int level = 0;
  double max_normalized_deviation = 0.0;
  double mass_weighted_deviation = 0.0;  // sum |dev| / total mass
};

DerivationReport derivation_check(const PcfModel& model,
                                  const PiecewiseHarmonicFunction& f, int m);

}  // namespace fractal
