#include "fractal/energy_measures.hpp"

#include <algorithm>
#include <stdexcept>

namespace fractal {

CellMeasureTable cell_energy_measure(const PcfModel& model,
                                     const PiecewiseHarmonicFunction& f, int m,
                                     bool parallel) {
  CellGramField g = gram_field(model, {f}, m, parallel);
  CellMeasureTable t;
  t.level = m;
  t.values = std::move(g.gram);
  return t;
}

CellMeasureTable mutual_cell_measure(const PcfModel& model,
                                     const PiecewiseHarmonicFunction& f,
                                     const PiecewiseHarmonicFunction& g, int m,
                                     bool parallel) {
  CellGramField gf = gram_field(model, {f, g}, m, parallel);
  CellMeasureTable t;
  t.level = m;
  t.values.resize(gf.cells());
  for (size_t c = 0; c < gf.cells(); ++c) t.values[c] = gf.at(c, 0, 1);
  return t;
}

CellMeasureTable kusuoka_table(const PcfModel& model,
                               const std::vector<PiecewiseHarmonicFunction>& fs, int m,
                               bool parallel) {
  if (fs.empty()) throw std::invalid_argument("kusuoka_table: empty tuple");
  CellGramField gf = gram_field(model, fs, m, parallel);
  CellMeasureTable t;
  t.level = m;
  t.values.resize(gf.cells());
  const int d = gf.d;
  for (size_t c = 0; c < gf.cells(); ++c) {
    Rat s = 0;
    for (int i = 0; i < d; ++i) s += gf.at(c, i, i);
    t.values[c] = s / d;
  }
  return t;
}

PhiCellField phi_field_from_gram(const CellGramField& gram) {
  PhiCellField out;
  out.level = gram.level;
  out.d = gram.d;
  const size_t cells = gram.cells();
  out.matrices.assign(cells, QMat(gram.d, gram.d));
  out.defined.assign(cells, 0);
  out.kusuoka_mass.resize(cells);
  for (size_t c = 0; c < cells; ++c) {
    Rat mass = 0;
    for (int i = 0; i < gram.d; ++i) mass += gram.at(c, i, i);
    mass /= gram.d;
    out.kusuoka_mass[c] = mass;
    if (mass == 0) continue;  // zero matrix on {dnu_f/dnu = 0}
    out.defined[c] = 1;
    for (int i = 0; i < gram.d; ++i)
      for (int j = 0; j < gram.d; ++j)
        out.matrices[c].at(i, j) = gram.at(c, i, j) / mass;
  }
  return out;
}

PhiCellField phi_field(const PcfModel& model,
                       const std::vector<PiecewiseHarmonicFunction>& fs, int m,
                       bool parallel) {
  if (fs.empty()) throw std::invalid_argument("phi_field: empty tuple");
  return phi_field_from_gram(gram_field(model, fs, m, parallel));
}

DerivationReport derivation_check(const PcfModel& model,
                                  const PiecewiseHarmonicFunction& f, int m) {
  const int ns = model.symbol_count();
  const int n0 = model.boundary_count();
  PiecewiseHarmonicFunction fe = model.extend(f, m);
  const VertexTable& vt = model.vertex_table(m);

  DerivationReport rep;
  rep.level = m;
  Rat total_mass = 0, abs_dev_sum = 0;
  double max_norm = 0.0;

  QVec u(n0), sq(n0);
  for (size_t c = 0; c < vt.cell_ids.size(); ++c) {
    Word w = word_at(m, c, ns);
    Rat inv_rw = 1 / model.harmonic().r_word(w);
    for (int k = 0; k < n0; ++k) {
      u[k] = fe.values[vt.cell_ids[c][k]];
      sq[k] = u[k] * u[k];
    }
    Rat nu_ff = 2 * inv_rw * model.e0(u, u);
    Rat nu_sq_f = 2 * inv_rw * model.e0(sq, u);
    Rat dev = nu_sq_f - 2 * u[0] * nu_ff;  // x_w = first cell vertex

    total_mass += nu_ff;
    abs_dev_sum += abs(dev);

    Rat osc = *std::max_element(u.begin(), u.end()) - *std::min_element(u.begin(), u.end());
    if (nu_ff > 0 && osc > 0) {
      double nd = std::abs(rat_dbl(dev)) / (rat_dbl(nu_ff) * rat_dbl(osc));
      max_norm = std::max(max_norm, nd);
    }
  }
  rep.max_normalized_deviation = max_norm;
  rep.mass_weighted_deviation =
      total_mass > 0 ? rat_dbl(abs_dev_sum) / rat_dbl(total_mass) : 0.0;
  return rep;
}

}  // namespace fractal
