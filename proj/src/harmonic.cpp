#include "fractal/harmonic.hpp"

#include <algorithm>
#include <stdexcept>

namespace fractal {

ValidityReport validate_harmonic_structure_matrix(const QMat& d_matrix) {
  ValidityReport rep;
  const int n = d_matrix.rows;
  if (d_matrix.cols != n || n < 2) {
    rep.detail = "matrix must be square of order #V_0";
    return rep;
  }

  rep.symmetric = true;
  for (int i = 0; i < n && rep.symmetric; ++i)
    for (int j = i + 1; j < n; ++j)
      if (d_matrix.at(i, j) != d_matrix.at(j, i)) {
        rep.symmetric = false;
        rep.detail = "not symmetric";
        break;
      }

  rep.d3_offdiag_nonneg = true;
  for (int i = 0; i < n && rep.d3_offdiag_nonneg; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && d_matrix.at(i, j) < 0) {
        rep.d3_offdiag_nonneg = false;
        if (rep.detail.empty()) rep.detail = "(D3) negative off-diagonal entry";
        break;
      }

  if (!rep.symmetric) return rep;

  // Symmetric elimination of M = -D. PSD iff every pivot is >= 0 and a
  // zero pivot only occurs on an (already) zero row. Rank count gives the
  // kernel dimension for (D2).
  QMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.at(i, j) = -d_matrix.at(i, j);

  bool psd = true;
  int rank = 0;
  for (int c = 0; c < n && psd; ++c) {
    const Rat piv = m.at(c, c);
    if (piv < 0) {
      psd = false;
      break;
    }
    if (piv == 0) {
      for (int j = c; j < n; ++j)
        if (m.at(c, j) != 0) { psd = false; break; }
      continue;
    }
    ++rank;
    for (int i = c + 1; i < n; ++i) {
      if (m.at(i, c) == 0) continue;
      Rat f = m.at(i, c) / piv;
      for (int j = c; j < n; ++j) m.at(i, j) -= f * m.at(c, j);
    }
    // keep the upper part consistent for later zero-row tests
    for (int j = c + 1; j < n; ++j) m.at(c, j) = 0;
    for (int i = c + 1; i < n; ++i) m.at(i, c) = 0;
  }

  rep.d1_nonpositive = psd;
  if (!psd && rep.detail.empty()) rep.detail = "(D1) -D is not positive semidefinite";

  if (psd) {
    bool annihilates_constants = true;
    for (int i = 0; i < n; ++i) {
      Rat s = 0;
      for (int j = 0; j < n; ++j) s += d_matrix.at(i, j);
      if (s != 0) { annihilates_constants = false; break; }
    }
    rep.d2_kernel_constants = annihilates_constants && (n - rank == 1);
    if (!rep.d2_kernel_constants && rep.detail.empty())
      rep.detail = "(D2) kernel is not exactly the constants";
  }
  return rep;
}

void GraphForm::add(int i, int j, const Rat& v) {
  rows[i][j] += v;
  if (rows[i][j] == 0) rows[i].erase(j);
  if (i != j) {
    rows[j][i] += v;
    if (rows[j][i] == 0) rows[j].erase(i);
  }
}

Rat GraphForm::evaluate(const QVec& u, const QVec& v) const {
  Rat s = 0;
  for (int i = 0; i < n; ++i) {
    if (u[i] == 0) continue;
    for (const auto& [j, h] : rows[i]) s += u[i] * h * v[j];
  }
  return s;
}

QMat GraphForm::dense() const {
  QMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (const auto& [j, h] : rows[i]) m.at(i, j) = h;
  return m;
}

GraphForm assemble_graph_form(const PcfStructure& s, const HarmonicStructure& hs, int m) {
  if (m < 0) throw std::invalid_argument("assemble_graph_form: m < 0");
  VertexTable vt = build_vertex_table(s, m);
  const int n0 = s.boundary_count();
  const int ns = s.symbol_count();

  GraphForm g;
  g.level = m;
  g.n = vt.num_vertices;
  g.rows.resize(g.n);

  for (size_t rank = 0; rank < vt.cell_ids.size(); ++rank) {
    Word w = word_at(m, rank, ns);
    Rat inv_rw = 1 / hs.r_word(w);
    const std::vector<int>& ids = vt.cell_ids[rank];
    for (int k = 0; k < n0; ++k)
      for (int l = 0; l < n0; ++l) {
        Rat v = -hs.d_matrix.at(k, l) * inv_rw;
        if (v == 0) continue;
        auto& row = g.rows[ids[k]];
        row[ids[l]] += v;
        if (row[ids[l]] == 0) row.erase(ids[l]);
      }
  }
  return g;
}

GraphForm trace_form(const GraphForm& g, const std::vector<int>& keep) {
  std::vector<char> keep_mask(g.n, 0);
  for (int id : keep) keep_mask[id] = 1;

  std::vector<std::map<int, Rat>> rows = g.rows;
  for (int p = 0; p < g.n; ++p) {
    if (keep_mask[p]) continue;
    auto pit = rows[p].find(p);
    if (pit == rows[p].end() || pit->second == 0)
      throw std::runtime_error(
          "trace_form: singular interior block (form does not vanish only on constants)");
    const Rat d = pit->second;

    std::vector<std::pair<int, Rat>> nbrs;
    nbrs.reserve(rows[p].size());
    for (const auto& [j, v] : rows[p])
      if (j != p) nbrs.emplace_back(j, v);

    for (const auto& [i, vi] : nbrs) {
      for (const auto& [j, vj] : nbrs) {
        Rat upd = vi * vj / d;
        auto& row = rows[i];
        row[j] -= upd;
        if (row[j] == 0) row.erase(j);
      }
      rows[i].erase(p);
    }
    rows[p].clear();
  }

  std::vector<int> reindex(g.n, -1);
  for (size_t k = 0; k < keep.size(); ++k) reindex[keep[k]] = static_cast<int>(k);

  GraphForm out;
  out.level = g.level;
  out.n = static_cast<int>(keep.size());
  out.rows.resize(out.n);
  for (int id : keep)
    for (const auto& [j, v] : rows[id]) out.rows[reindex[id]][reindex[j]] = v;
  return out;
}

VerifyResult verify_harmonic_structure(const PcfStructure& s, const HarmonicStructure& hs) {
  VerifyResult res;
  const int n0 = s.boundary_count();
  GraphForm e1 = assemble_graph_form(s, hs, 1);
  std::vector<int> v0(n0);
  for (int i = 0; i < n0; ++i) v0[i] = i;
  GraphForm traced = trace_form(e1, v0);

  res.residual = QMat(n0, n0);
  res.ok = true;
  QMat t = traced.dense();
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n0; ++j) {
      res.residual.at(i, j) = t.at(i, j) + hs.d_matrix.at(i, j);  // traced - (-D)
      if (res.residual.at(i, j) != 0) res.ok = false;
    }
  return res;
}

RenormResult solve_renormalization_scalar(const PcfStructure& s, const QMat& d_matrix,
                                          double r0, double tol, int max_iter) {
  RenormResult res;
  const int n0 = s.boundary_count();
  const int ns = s.symbol_count();

  // Trace of the one-level form at unit weights; with uniform r the traced
  // form scales as 1/r, so one exact trace suffices.
  HarmonicStructure unit{d_matrix, std::vector<Rat>(ns, Rat(1))};
  GraphForm e1 = assemble_graph_form(s, unit, 1);
  std::vector<int> v0(n0);
  for (int i = 0; i < n0; ++i) v0[i] = i;
  QMat t1 = trace_form(e1, v0).dense();

  double t1g = 0.0, gg = 0.0, t1t1 = 0.0;
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n0; ++j) {
      double g = -rat_dbl(d_matrix.at(i, j));
      double t = rat_dbl(t1.at(i, j));
      t1g += t * g;
      gg += g * g;
      t1t1 += t * t;
    }
  if (gg == 0.0) throw std::invalid_argument("zero target form");

  double r = r0 > 0 ? r0 : 0.5;
  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    double scale = t1g / (r * gg);
    r *= scale;
    double resid2 = t1t1 / (r * r) - 2.0 * t1g / r + gg;
    if (resid2 < tol * tol || res.iterations == max_iter) {
      res.converged = resid2 < std::max(tol * tol, 1e-18);
      break;
    }
  }
  res.r_numeric = r;

  for (const Rat& cand : continued_fraction_convergents(r)) {
    if (cand <= 0 || cand >= 1) continue;
    HarmonicStructure hs{d_matrix, std::vector<Rat>(ns, cand)};
    if (verify_harmonic_structure(s, hs).ok) {
      res.exact = true;
      res.r_exact = cand;
      res.converged = true;
      break;
    }
  }
  return res;
}

Extender make_extender(const PcfStructure& s, const HarmonicStructure& hs) {
  const int n0 = s.boundary_count();
  const int ns = s.symbol_count();
  VertexTable vt1 = build_vertex_table(s, 1);
  GraphForm h1 = assemble_graph_form(s, hs, 1);

  const int ni = vt1.num_vertices - n0;  // interior vertex count
  QMat hii(ni, ni);
  for (int i = 0; i < ni; ++i)
    for (const auto& [j, v] : h1.rows[n0 + i])
      if (j >= n0) hii.at(i, j - n0) = v;

  // One interior solve per boundary unit vector.
  QMat full(vt1.num_vertices, n0);
  for (int k = 0; k < n0; ++k) {
    full.at(k, k) = 1;
    if (ni == 0) continue;
    QVec b(ni);
    for (int i = 0; i < ni; ++i) {
      auto it = h1.rows[n0 + i].find(k);
      b[i] = it == h1.rows[n0 + i].end() ? Rat(0) : -it->second;
    }
    QVec x = solve_linear(hii, b);
    for (int i = 0; i < ni; ++i) full.at(n0 + i, k) = x[i];
  }

  Extender ext;
  ext.cell_matrix.resize(ns);
  for (int i = 0; i < ns; ++i) {
    QMat a(n0, n0);
    for (int j = 0; j < n0; ++j)
      for (int k = 0; k < n0; ++k) a.at(j, k) = full.at(vt1.cell_ids[i][j], k);
    ext.cell_matrix[i] = std::move(a);
  }
  return ext;
}

PcfModel::PcfModel(PcfStructure s, HarmonicStructure hs)
    : s_(std::move(s)), hs_(std::move(hs)), ext_(make_extender(s_, hs_)) {}

const VertexTable& PcfModel::vertex_table(int m) const {
  auto it = tables_.find(m);
  if (it == tables_.end()) it = tables_.emplace(m, build_vertex_table(s_, m)).first;
  return it->second;
}

Rat PcfModel::e0(const QVec& u, const QVec& v) const {
  const int n0 = boundary_count();
  Rat s = 0;
  for (int i = 0; i < n0; ++i) {
    if (u[i] == 0) continue;
    for (int j = 0; j < n0; ++j) s -= u[i] * hs_.d_matrix.at(i, j) * v[j];
  }
  return s;
}

PiecewiseHarmonicFunction PcfModel::harmonic_extension(const QVec& boundary_values,
                                                       int m) const {
  if (static_cast<int>(boundary_values.size()) != boundary_count())
    throw std::invalid_argument("harmonic_extension: boundary size mismatch");
  PiecewiseHarmonicFunction f{0, boundary_values};
  // two-argument mpq construction does not canonicalize; repair here so
  // callers can pass Rat(p, q) literals safely
  for (Rat& v : f.values) v.canonicalize();
  return extend(f, m);
}

PiecewiseHarmonicFunction PcfModel::extend(const PiecewiseHarmonicFunction& f, int m) const {
  if (m < f.level) throw std::invalid_argument("extend: target level below function level");
  const int ns = symbol_count();
  const int n0 = boundary_count();

  PiecewiseHarmonicFunction cur = f;
  for (int lvl = f.level; lvl < m; ++lvl) {
    const VertexTable& vt = vertex_table(lvl);
    const VertexTable& vt_next = vertex_table(lvl + 1);
    QVec next(vt_next.num_vertices);
    QVec u(n0);
    for (size_t rank = 0; rank < vt.cell_ids.size(); ++rank) {
      for (int k = 0; k < n0; ++k) u[k] = cur.values[vt.cell_ids[rank][k]];
      for (int i = 0; i < ns; ++i) {
        QVec v = ext_.cell_matrix[i].apply(u);
        const std::vector<int>& ids = vt_next.cell_ids[rank * ns + i];
        for (int k = 0; k < n0; ++k) next[ids[k]] = std::move(v[k]);
      }
    }
    cur.level = lvl + 1;
    cur.values = std::move(next);
  }
  return cur;
}

Rat PcfModel::energy(const PiecewiseHarmonicFunction& f) const {
  return mutual_energy(f, f);
}

Rat PcfModel::mutual_energy(const PiecewiseHarmonicFunction& f,
                            const PiecewiseHarmonicFunction& g) const {
  const int m = std::max(f.level, g.level);
  PiecewiseHarmonicFunction fe = extend(f, m), ge = extend(g, m);
  const VertexTable& vt = vertex_table(m);
  const int ns = symbol_count();
  const int n0 = boundary_count();

  Rat total = 0;
  QVec u(n0), v(n0);
  for (size_t rank = 0; rank < vt.cell_ids.size(); ++rank) {
    Word w = word_at(m, rank, ns);
    for (int k = 0; k < n0; ++k) {
      u[k] = fe.values[vt.cell_ids[rank][k]];
      v[k] = ge.values[vt.cell_ids[rank][k]];
    }
    total += e0(u, v) / hs_.r_word(w);
  }
  return total;
}

PiecewiseHarmonicFunction PcfModel::pullback(const PiecewiseHarmonicFunction& f,
                                             const Word& w) const {
  if (w.level() > f.level) throw std::invalid_argument("pullback: word deeper than function");
  const int mt = f.level - w.level();
  const int ns = symbol_count();
  const int n0 = boundary_count();
  const VertexTable& src = vertex_table(f.level);
  const VertexTable& dst = vertex_table(mt);

  const size_t base = word_rank(w, ns) * cell_count(mt, ns);
  PiecewiseHarmonicFunction out{mt, QVec(dst.num_vertices)};
  for (size_t rank = 0; rank < dst.cell_ids.size(); ++rank)
    for (int k = 0; k < n0; ++k)
      out.values[dst.cell_ids[rank][k]] = f.values[src.cell_ids[base + rank][k]];
  return out;
}

QVec PcfModel::cell_values(const PiecewiseHarmonicFunction& f, const Word& w) const {
  if (w.level() < f.level)
    throw std::invalid_argument("cell_values: word above function level");
  const int n0 = boundary_count();
  const int ns = symbol_count();

  Word prefix(std::vector<uint8_t>(w.symbols.begin(), w.symbols.begin() + f.level));
  const VertexTable& vt = vertex_table(f.level);
  const std::vector<int>& ids = vt.cell_ids[word_rank(prefix, ns)];
  QVec u(n0);
  for (int k = 0; k < n0; ++k) u[k] = f.values[ids[k]];
  for (int pos = f.level; pos < w.level(); ++pos)
    u = ext_.cell_matrix[w.symbols[pos]].apply(u);
  return u;
}

}  // namespace fractal
