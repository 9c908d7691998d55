#pragma once

#include <vector>

#include "fractal/energy_measures.hpp"

#include "json.hpp"

namespace fractal {

// Eigenvalues of a symmetric matrix (row-major, order d), descending.
// Closed forms for d <= 3, cyclic Jacobi beyond, tolerance 1e-12.
std::vector<double> sym_eigenvalues(const std::vector<double>& a, int d);

struct RankSpectrumReport {
  int level = 0;
  int d = 0;
  double epsilon = 0.0;
  std::vector<std::vector<double>> eigenvalues;  // per cell, descending
  std::vector<int> eps_rank;                     // per cell; -1 where undefined
  std::vector<double> rank_mass;                 // nu-weighted histogram, index = rank
  int max_rank = 0;
  double mass_ratio_above_eps = 0.0;  // nu-mass fraction with lambda2/lambda1 > eps
  double total_mass = 0.0;
};

// eps-rank of a cell = number of eigenvalues exceeding eps * lambda_max.
RankSpectrumReport rank_spectrum(const PcfModel& model,
                                 const std::vector<PiecewiseHarmonicFunction>& fs, int m,
                                 double epsilon, bool parallel = true);

RankSpectrumReport rank_spectrum_from_phi(const PhiCellField& phi, double epsilon);

struct BlowupStep {
  Word word;
  std::vector<double> phi;  // d x d row-major
  double det = 0.0;
  double dist_to_target = 0.0;
  double descend_score = 0.0;  // nu-fraction of descendants within the radius
};

struct BlowupTrace {
  bool degenerate = false;
  int failure_depth = -1;  // first level with no cell meeting det >= a, -1 if none
  int d = 0;
  double det_threshold = 0.0;
  std::vector<double> level_candidate_mass;  // nu-mass of {det Phi >= a} per level 1..max
  std::vector<double> target;                // the matrix L, d x d row-major
  std::vector<BlowupStep> steps;
};

// Cell realization of the blowup argument: pick L as a nu-weighted cluster
// center of the high-determinant cells, then descend the word tree greedily
// maximizing the nu-fraction of descendants with Phi close to L. Radii
// follow shrink_schedule (entry per level, defaults to 1/(level+1)).
BlowupTrace blowup_search(const PcfModel& model,
                          const std::vector<PiecewiseHarmonicFunction>& fs,
                          double det_threshold, int max_level,
                          std::vector<double> shrink_schedule = {},
                          bool parallel = true);

struct Recombination {
  int d = 0;
  std::vector<double> rotation;   // orthogonal U, row-major
  std::vector<double> lambda;     // eigenvalues of L, matching U's columns
  std::vector<double> transform;  // T = U diag(lambda^{-1/2})
};

// Lemma-style renormalization: given SPD L, the recombination T maps a
// field with Phi = L pointwise to the identity field. Throws when L is not
// symmetric positive definite.
Recombination renormalize_pair(const std::vector<double>& l_matrix, int d);

// Applies T to a Phi field in doubles: G' = T^t G T renormalized by its
// mean trace. Undefined cells stay zero.
std::vector<std::vector<double>> transform_phi_field(const PhiCellField& phi,
                                                     const Recombination& rec);

nlohmann::json index_report(const PcfModel& model,
                            const std::vector<PiecewiseHarmonicFunction>& basis,
                            const std::vector<int>& levels,
                            const std::vector<double>& epsilons, bool parallel = true);

}  // namespace fractal
