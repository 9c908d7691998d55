#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fractal {

// Generalized Sierpinski carpet generator: a subset of the {0..l-1}^D grid.
// Cell lists are kept sorted lexicographically.
struct CarpetGenerator {
  std::string name;
  int dim = 0;  // ambient dimension D >= 2
  int l = 0;    // subdivision >= 3
  std::vector<std::vector<int>> cells;

  int cell_count() const { return static_cast<int>(cells.size()); }
  bool contains(const std::vector<int>& c) const;
};

struct CarpetCheckReport {
  bool symmetry = false;
  bool connectedness = false;
  bool nondiagonality = false;
  bool borders = false;
  bool proper = false;  // 2 <= M < l^D
  bool all() const {
    return symmetry && connectedness && nondiagonality && borders && proper;
  }
};

bool check_symmetry(const CarpetGenerator& g);
bool check_connectedness(const CarpetGenerator& g);
// (ND) in its m=2 form; equivalent to full (ND) and to the rectangle form.
bool check_nondiagonality(const CarpetGenerator& g);
// (ND)_H: rectangles with side lengths 1/l or 2/l; shipped as a cross-check.
bool check_nondiagonality_rectangles(const CarpetGenerator& g);
// Brute-force (ND) on the level-m refinement of Q_1; the oracle for tests.
bool check_nondiagonality_brute(const CarpetGenerator& g, int max_m);
bool check_borders(const CarpetGenerator& g);
CarpetCheckReport check_carpet(const CarpetGenerator& g);

// Pre-carpet approximation at level n: one vertex per level-n cell, an edge
// where two cells share a (D-1)-face, unit conductances. CSR storage.
struct PreCarpetGraph {
  int level = 0;
  int64_t num_vertices = 0;
  std::vector<int64_t> row_ptr;
  std::vector<int64_t> col_idx;
  std::vector<int64_t> face_low;   // cells touching {x_1 = 0}
  std::vector<int64_t> face_high;  // cells touching {x_1 = 1}
  int64_t degree(int64_t v) const { return row_ptr[v + 1] - row_ptr[v]; }
  int64_t num_edges() const { return static_cast<int64_t>(col_idx.size()) / 2; }
};

inline constexpr int64_t kDefaultVertexCap = 2'000'000;

PreCarpetGraph build_pre_carpet(const CarpetGenerator& g, int n,
                                int64_t vertex_cap = kDefaultVertexCap);

struct LaplaceSolveResult {
  std::vector<double> potential;  // per vertex, boundary included
  double energy = 0.0;
  double resistance = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Unit-potential Laplace problem between two vertex sets, solved by
// Jacobi-preconditioned conjugate gradients. `parallel` selects the
// OpenMP kernels; the serial path is the reference implementation.
LaplaceSolveResult effective_resistance(const PreCarpetGraph& graph,
                                        const std::vector<int64_t>& face_a,
                                        const std::vector<int64_t>& face_b,
                                        double rel_tol = 1e-10, int max_iter = 200000,
                                        bool parallel = true);

struct ResistanceScaling {
  std::vector<int> levels;
  std::vector<double> resistance;  // R_n per level
  std::vector<double> rho;         // R_{n+1} / R_n
  double r_hat = 0.0;              // 1 / rho at the deepest pair
};

ResistanceScaling resistance_scaling(const CarpetGenerator& g, int n_min, int n_max,
                                     double rel_tol = 1e-10,
                                     int64_t vertex_cap = kDefaultVertexCap,
                                     bool parallel = true);

struct DimensionReport {
  double d_h = 0.0;
  double d_w = 0.0;
  double d_s = 0.0;
  double r_hat = 0.0;
  int d_m_bound = 0;
  std::string branch;        // which case of the d_m bound applied
  double identity_residual;  // |d_H - d_w * d_s / 2|
  std::string caveat;
};

// Dimension formulas from the resistance estimate. The graph estimate r_hat
// stands in for the renormalization factor of the limiting form; no error
// bound is claimed, and the report says so. Valid range for r_hat is
// (1/M, M/l^2], which keeps d_s > 1 and d_w >= 2.
DimensionReport dimension_report(const CarpetGenerator& g, double r_hat);

}  // namespace fractal
