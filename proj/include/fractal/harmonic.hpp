#pragma once

#include <map>
#include <string>
#include <vector>

#include "fractal/structure.hpp"

namespace fractal {

struct HarmonicStructure {
  QMat d_matrix;       // boundary form matrix D on V_0
  std::vector<Rat> r;  // per-symbol energy renormalization weights

  bool uniform_r() const {
    for (const Rat& x : r)
      if (x != r[0]) return false;
    return true;
  }

  Rat r_word(const Word& w) const {
    Rat p = 1;
    for (uint8_t c : w.symbols) p *= r[c];
    return p;
  }
};

struct ValidityReport {
  bool symmetric = false;
  bool d1_nonpositive = false;  // -D positive semidefinite
  bool d2_kernel_constants = false;
  bool d3_offdiag_nonneg = false;
  std::string detail;

  bool valid() const {
    return symmetric && d1_nonpositive && d2_kernel_constants && d3_offdiag_nonneg;
  }
};

ValidityReport validate_harmonic_structure_matrix(const QMat& d_matrix);

// Quadratic form on a glued vertex set, E(u,v) = u^T H v with H sparse
// symmetric PSD. Assembled as sum over cells of r_w^{-1} copies of E^(0).
struct GraphForm {
  int level = 0;
  int n = 0;
  std::vector<std::map<int, Rat>> rows;  // full symmetric storage

  void add(int i, int j, const Rat& v);
  Rat evaluate(const QVec& u, const QVec& v) const;
  QMat dense() const;
};

GraphForm assemble_graph_form(const PcfStructure& s, const HarmonicStructure& hs, int m);

// Schur complement onto `keep` (ids, ascending): the form of the minimal
// extension. Eliminates complement ids in increasing order; pivots of a
// valid form are nonzero, a zero pivot reports (D1)/(D2) breakage.
GraphForm trace_form(const GraphForm& g, const std::vector<int>& keep);

struct VerifyResult {
  bool ok = false;
  QMat residual;  // traced E^(1) matrix minus (-D)
};

VerifyResult verify_harmonic_structure(const PcfStructure& s, const HarmonicStructure& hs);

struct RenormResult {
  bool converged = false;
  bool exact = false;  // rational candidate verified via the Schur oracle
  Rat r_exact;
  double r_numeric = 0.0;
  int iterations = 0;
};

// Uniform-r fixed point search: scale r to match the traced one-level form
// against E^(0) in least squares, then try to certify a rational candidate
// exactly. Non-uniform harmonic-structure search is out of scope.
RenormResult solve_renormalization_scalar(const PcfStructure& s, const QMat& d_matrix,
                                          double r0 = 0.5, double tol = 1e-12,
                                          int max_iter = 64);

struct PiecewiseHarmonicFunction {
  int level = 0;
  QVec values;  // indexed by V_level vertex ids
};

// Per-symbol extension matrices: boundary values of cell i of the unique
// energy-minimizing one-level extension. Cached once per (D, r).
struct Extender {
  std::vector<QMat> cell_matrix;  // n0 x n0 per symbol
};

Extender make_extender(const PcfStructure& s, const HarmonicStructure& hs);

// Bundles a structure with a harmonic structure plus the caches every
// computation needs (vertex tables per level, extension matrices).
class PcfModel {
 public:
  PcfModel(PcfStructure s, HarmonicStructure hs);

  const PcfStructure& structure() const { return s_; }
  const HarmonicStructure& harmonic() const { return hs_; }
  const Extender& extender() const { return ext_; }
  const VertexTable& vertex_table(int m) const;
  int symbol_count() const { return s_.symbol_count(); }
  int boundary_count() const { return s_.boundary_count(); }

  // E^(0) bilinear form (-Du, v) on boundary-value vectors.
  Rat e0(const QVec& u, const QVec& v) const;

  PiecewiseHarmonicFunction harmonic_extension(const QVec& boundary_values, int m) const;
  // Refines f to a deeper level by cellwise harmonic extension.
  PiecewiseHarmonicFunction extend(const PiecewiseHarmonicFunction& f, int m) const;

  Rat energy(const PiecewiseHarmonicFunction& f) const;
  Rat mutual_energy(const PiecewiseHarmonicFunction& f,
                    const PiecewiseHarmonicFunction& g) const;

  PiecewiseHarmonicFunction pullback(const PiecewiseHarmonicFunction& f, const Word& w) const;

  // Boundary values of f on cell w (in V_0 order), w at f's level or above.
  QVec cell_values(const PiecewiseHarmonicFunction& f, const Word& w) const;

 private:
  PcfStructure s_;
  HarmonicStructure hs_;
  Extender ext_;
  mutable std::map<int, VertexTable> tables_;
};

}  // namespace fractal
