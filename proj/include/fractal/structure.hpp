#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "fractal/rational.hpp"
#include "fractal/word.hpp"

namespace fractal {

struct AffineMap {
  QMat linear;  // dim x dim
  QVec offset;  // dim

  QVec apply(const QVec& x) const {
    QVec y = linear.apply(x);
    for (size_t i = 0; i < y.size(); ++i) y[i] += offset[i];
    return y;
  }

  // this ∘ inner
  AffineMap compose(const AffineMap& inner) const {
    AffineMap m;
    m.linear = linear.mul(inner.linear);
    m.offset = linear.apply(inner.offset);
    for (size_t i = 0; i < m.offset.size(); ++i) m.offset[i] += offset[i];
    return m;
  }
};

struct SelfSimilarWeights {
  std::vector<Rat> theta;

  // theta_w = prod theta_{w_k}; theta of the empty word is 1.
  Rat weight(const Word& w) const {
    Rat p = 1;
    for (uint8_t c : w.symbols) p *= theta[c];
    return p;
  }
};

// A p.c.f. self-similar structure given by affine contractions with
// rational coefficients acting on rational model coordinates. Vertex
// gluing is decided by exact coordinate equality.
struct PcfStructure {
  std::string name;
  int dim = 0;
  std::vector<AffineMap> maps;
  std::vector<QVec> boundary;  // V_0 model points
  std::optional<SelfSimilarWeights> weights;

  int symbol_count() const { return static_cast<int>(maps.size()); }
  int boundary_count() const { return static_cast<int>(boundary.size()); }
};

struct VertexTable {
  int level = 0;
  int num_vertices = 0;
  std::vector<QVec> coords;                // vertex id -> model point
  std::vector<std::vector<int>> cell_ids;  // word rank -> global ids of psi_w(V_0)
};

// Builds the glued vertex set V_m. V_0 keeps ids 0..#V_0-1 at every level;
// coincident images across cells share one id. Throws if some contraction
// is not injective on the model point set.
VertexTable build_vertex_table(const PcfStructure& s, int m);

std::vector<Word> cells_at_level(const PcfStructure& s, int m);

// N_n(w) per the recursive definition: N_0(w) = {w}, and N_n(w) adds every
// level-|w| cell meeting the closure of the previous set. Cells meet iff
// they share a glued vertex.
std::set<Word> neighbor_set(const PcfStructure& s, const Word& w, int n);

inline Rat measure_weight(const SelfSimilarWeights& weights, const Word& w) {
  return weights.weight(w);
}

// Structural invariant checks used by the config loader; returns an empty
// string when the structure is well formed.
std::string validate_structure(const PcfStructure& s);

}  // namespace fractal
