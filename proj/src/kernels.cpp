#include "fractal/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fractal {
namespace {

using i64 = int64_t;
using i128 = __int128;

Int mpz_from_i128(i128 v) {
  bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v)
                            : static_cast<unsigned __int128>(v);
  Int hi(static_cast<unsigned long>(u >> 64));
  Int out;
  mpz_mul_2exp(out.get_mpz_t(), hi.get_mpz_t(), 64);
  out += static_cast<unsigned long>(u & 0xffffffffffffffffULL);
  return neg ? Int(-out) : out;
}

// Common start level and per-cell boundary vectors for a function tuple.
struct StartState {
  int level = 0;
  std::vector<QVec> cell_vectors;  // cells x d vectors of size n0
};

StartState start_state(const PcfModel& model,
                       const std::vector<PiecewiseHarmonicFunction>& fs) {
  StartState st;
  for (const auto& f : fs) st.level = std::max(st.level, f.level);
  const int n0 = model.boundary_count();
  const VertexTable& vt = model.vertex_table(st.level);
  std::vector<PiecewiseHarmonicFunction> ext;
  ext.reserve(fs.size());
  for (const auto& f : fs) ext.push_back(model.extend(f, st.level));

  st.cell_vectors.resize(vt.cell_ids.size() * fs.size());
  for (size_t c = 0; c < vt.cell_ids.size(); ++c)
    for (size_t i = 0; i < fs.size(); ++i) {
      QVec u(n0);
      for (int k = 0; k < n0; ++k) u[k] = ext[i].values[vt.cell_ids[c][k]];
      st.cell_vectors[c * fs.size() + i] = std::move(u);
    }
  return st;
}

Int lcm_denominators(const QVec& v, Int acc) {
  for (const Rat& q : v) {
    Int den = q.get_den();
    mpz_lcm(acc.get_mpz_t(), acc.get_mpz_t(), den.get_mpz_t());
  }
  return acc;
}

bool fits_i64(const Int& v) { return v.fits_slong_p(); }

}  // namespace

CellGramField gram_field_reference(const PcfModel& model,
                                   const std::vector<PiecewiseHarmonicFunction>& fs, int m) {
  const int d = static_cast<int>(fs.size());
  const int ns = model.symbol_count();
  const auto& r = model.harmonic().r;

  StartState st = start_state(model, fs);
  if (m < st.level) throw std::invalid_argument("gram_field: level below function level");

  std::vector<QVec> vals = std::move(st.cell_vectors);
  std::vector<Rat> inv_r(vals.size() / d);
  {
    const size_t start_cells = inv_r.size();
    for (size_t c = 0; c < start_cells; ++c)
      inv_r[c] = 1 / model.harmonic().r_word(word_at(st.level, c, ns));
  }

  for (int lvl = st.level; lvl < m; ++lvl) {
    const size_t cells = inv_r.size();
    std::vector<QVec> next(cells * ns * d);
    std::vector<Rat> next_inv(cells * ns);
    for (size_t c = 0; c < cells; ++c)
      for (int i = 0; i < ns; ++i) {
        next_inv[c * ns + i] = inv_r[c] / r[i];
        for (int k = 0; k < d; ++k)
          next[(c * ns + i) * d + k] =
              model.extender().cell_matrix[i].apply(vals[c * d + k]);
      }
    vals = std::move(next);
    inv_r = std::move(next_inv);
  }

  CellGramField out;
  out.level = m;
  out.d = d;
  out.gram.resize(inv_r.size() * d * d);
  for (size_t c = 0; c < inv_r.size(); ++c)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        Rat g = 2 * inv_r[c] * model.e0(vals[c * d + i], vals[c * d + j]);
        out.gram[(c * d + i) * d + j] = g;
        if (i != j) out.gram[(c * d + j) * d + i] = g;
      }
  return out;
}

CellGramField gram_field(const PcfModel& model,
                         const std::vector<PiecewiseHarmonicFunction>& fs, int m,
                         bool parallel) {
  const int d = static_cast<int>(fs.size());
  const int ns = model.symbol_count();
  const int n0 = model.boundary_count();

  StartState st = start_state(model, fs);
  if (m < st.level) throw std::invalid_argument("gram_field: level below function level");
  const int depth = m - st.level;

  // --- integerize D, the extension matrices, r, and the start vectors ---
  Int sd(1);
  for (const Rat& q : model.harmonic().d_matrix.a) {
    Int den = q.get_den();
    mpz_lcm(sd.get_mpz_t(), sd.get_mpz_t(), den.get_mpz_t());
  }
  std::vector<Int> ext_scale(ns, Int(1));
  for (int i = 0; i < ns; ++i)
    ext_scale[i] = lcm_denominators(model.extender().cell_matrix[i].a, Int(1));
  Int q0(1);
  for (const QVec& u : st.cell_vectors) q0 = lcm_denominators(u, q0);

  bool ok = fits_i64(sd) && fits_i64(q0);
  std::vector<i64> mats(static_cast<size_t>(ns) * n0 * n0);
  std::vector<i64> dmat(static_cast<size_t>(n0) * n0);
  std::vector<i64> scal(ns), rnum(ns), rden(ns);
  long double max_row_sum = 1.0L, max_scale = 1.0L, max_rfac = 1.0L;
  if (ok) {
    for (int k = 0; k < n0 && ok; ++k)
      for (int l = 0; l < n0; ++l) {
        Rat v = -model.harmonic().d_matrix.at(k, l) * Rat(sd);
        if (!fits_i64(Int(v.get_num()))) { ok = false; break; }
        dmat[k * n0 + l] = v.get_num().get_si();
      }
    for (int i = 0; i < ns && ok; ++i) {
      scal[i] = ext_scale[i].get_si();
      max_scale = std::max(max_scale, (long double)scal[i]);
      const Rat& ri = model.harmonic().r[i];
      if (!fits_i64(Int(ri.get_num())) || !fits_i64(Int(ri.get_den()))) { ok = false; break; }
      rnum[i] = ri.get_num().get_si();
      rden[i] = ri.get_den().get_si();
      max_rfac = std::max(max_rfac, (long double)std::max(rnum[i], rden[i]));
      long double row_max = 0.0L;
      for (int j = 0; j < n0; ++j) {
        long double row = 0.0L;
        for (int k = 0; k < n0; ++k) {
          Rat v = model.extender().cell_matrix[i].at(j, k) * Rat(ext_scale[i]);
          if (!fits_i64(Int(v.get_num()))) { ok = false; break; }
          mats[(static_cast<size_t>(i) * n0 + j) * n0 + k] = v.get_num().get_si();
          row += std::abs((long double)v.get_num().get_si());
        }
        row_max = std::max(row_max, row);
        if (!ok) break;
      }
      max_row_sum = std::max(max_row_sum, row_max);
    }
  }

  const size_t start_cells = st.cell_vectors.size() / d;
  std::vector<i64> vals;
  long double max_start = 1.0L, max_d = 1.0L;
  if (ok) {
    for (i64 v : dmat) max_d = std::max(max_d, (long double)std::abs(v));
    vals.resize(start_cells * d * n0);
    const Rat q0r((Int(q0)));
    for (size_t c = 0; c < start_cells && ok; ++c)
      for (int i = 0; i < d && ok; ++i)
        for (int k = 0; k < n0; ++k) {
          Rat v = st.cell_vectors[c * d + i][k] * q0r;
          if (!fits_i64(Int(v.get_num()))) { ok = false; break; }
          vals[(c * d + i) * n0 + k] = v.get_num().get_si();
          max_start = std::max(max_start, (long double)std::abs(v.get_num().get_si()));
        }
  }

  // Magnitude guard: values, denominators and r-words must stay in int64
  // and the E^(0) accumulation in int128.
  if (ok) {
    const long double cap = 4.6e18L;  // ~2^62
    long double vbound = max_start, dbound = (long double)q0.get_d(),
                rbound = 1.0L;
    for (int j = 0; j < depth; ++j) {
      vbound *= max_row_sum;
      dbound *= max_scale;
      rbound *= max_rfac;
    }
    // start-level r-word factors
    for (int j = 0; j < st.level; ++j) rbound *= max_rfac;
    if (vbound > cap || dbound > cap || rbound > cap) ok = false;
    if (ok && vbound * vbound * (long double)(n0 * n0) * max_d > 1.7e37L) ok = false;
  }

  if (!ok) return gram_field_reference(model, fs, m);

  std::vector<i64> den(start_cells), wrn(start_cells), wrd(start_cells);
  const i64 q0i = q0.get_si();
  for (size_t c = 0; c < start_cells; ++c) {
    den[c] = q0i;
    i64 pn = 1, pd = 1;
    for (uint8_t sym : word_at(st.level, c, ns).symbols) {
      pn *= rnum[sym];
      pd *= rden[sym];
    }
    wrn[c] = pn;
    wrd[c] = pd;
  }

  // --- level-by-level expansion over the word tree, data-parallel ---
  for (int lvl = 0; lvl < depth; ++lvl) {
    const size_t cells = den.size();
    std::vector<i64> nvals(cells * ns * d * n0), nden(cells * ns), nrn(cells * ns),
        nrd(cells * ns);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (long long c = 0; c < static_cast<long long>(cells); ++c) {
      for (int i = 0; i < ns; ++i) {
        const size_t child = c * ns + i;
        nden[child] = den[c] * scal[i];
        nrn[child] = wrn[c] * rnum[i];
        nrd[child] = wrd[c] * rden[i];
        const i64* mat = &mats[static_cast<size_t>(i) * n0 * n0];
        for (int f = 0; f < d; ++f) {
          const i64* u = &vals[(c * d + f) * n0];
          i64* out = &nvals[(child * d + f) * n0];
          for (int j = 0; j < n0; ++j) {
            i64 acc = 0;
            for (int k = 0; k < n0; ++k) acc += mat[j * n0 + k] * u[k];
            out[j] = acc;
          }
        }
      }
    }
    vals = std::move(nvals);
    den = std::move(nden);
    wrn = std::move(nrn);
    wrd = std::move(nrd);
  }

  // --- emit exact Gram entries: 2 E0 / r_w with all scales restored ---
  CellGramField out;
  out.level = m;
  out.d = d;
  const size_t cells = den.size();
  out.gram.resize(cells * d * d);
  const i64 sdi = sd.get_si();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (long long c = 0; c < static_cast<long long>(cells); ++c) {
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        const i64* u = &vals[(c * d + i) * n0];
        const i64* v = &vals[(c * d + j) * n0];
        i128 e = 0;
        for (int k = 0; k < n0; ++k) {
          i128 inner = 0;
          for (int l = 0; l < n0; ++l) inner += (i128)dmat[k * n0 + l] * v[l];
          e += (i128)u[k] * inner;
        }
        // nu = 2 * (e / (sd * den^2)) * (rden_w / rnum_w)
        Int num = mpz_from_i128(2 * e) * wrd[c];
        Int dd = Int(sdi) * den[c];
        dd *= den[c];
        dd *= wrn[c];
        Rat g(num, dd);
        g.canonicalize();
        out.gram[(c * d + i) * d + j] = g;
        if (i != j) out.gram[(c * d + j) * d + i] = out.gram[(c * d + i) * d + j];
      }
  }
  return out;
}

RefinementCheckReport check_measure_refinement(const PcfModel& model,
                                               const PiecewiseHarmonicFunction& f,
                                               int max_m) {
  const int ns = model.symbol_count();
  const int n0 = model.boundary_count();
  const std::vector<PiecewiseHarmonicFunction> fs{f};

  StartState st = start_state(model, fs);
  if (max_m <= st.level) throw std::invalid_argument("refinement check: need max_m > level");

  RefinementCheckReport rep;
  rep.max_level = max_m;

  // same integerization as gram_field, specialized to one function
  Int sd(1);
  for (const Rat& q : model.harmonic().d_matrix.a) {
    Int den = q.get_den();
    mpz_lcm(sd.get_mpz_t(), sd.get_mpz_t(), den.get_mpz_t());
  }
  Int q0(1);
  for (const QVec& u : st.cell_vectors) q0 = lcm_denominators(u, q0);

  bool ok = fits_i64(sd) && fits_i64(q0);
  std::vector<i64> mats(static_cast<size_t>(ns) * n0 * n0);
  std::vector<i64> dmat(static_cast<size_t>(n0) * n0);
  std::vector<i64> scal(ns), rnum(ns), rden(ns);
  long double max_row_sum = 1.0L, max_d = 1.0L, max_start = 1.0L;
  if (ok) {
    for (int k = 0; k < n0 && ok; ++k)
      for (int l = 0; l < n0; ++l) {
        Rat v = -model.harmonic().d_matrix.at(k, l) * Rat(sd);
        if (!fits_i64(Int(v.get_num()))) { ok = false; break; }
        dmat[k * n0 + l] = v.get_num().get_si();
        max_d = std::max(max_d, (long double)std::abs(dmat[k * n0 + l]));
      }
    for (int i = 0; i < ns && ok; ++i) {
      Int ei = lcm_denominators(model.extender().cell_matrix[i].a, Int(1));
      if (!fits_i64(ei)) { ok = false; break; }
      scal[i] = ei.get_si();
      const Rat& ri = model.harmonic().r[i];
      if (!fits_i64(Int(ri.get_num())) || !fits_i64(Int(ri.get_den()))) { ok = false; break; }
      rnum[i] = ri.get_num().get_si();
      rden[i] = ri.get_den().get_si();
      long double row_max = 0.0L;
      for (int j = 0; j < n0; ++j) {
        long double row = 0.0L;
        for (int k = 0; k < n0; ++k) {
          Rat v = model.extender().cell_matrix[i].at(j, k) * Rat(ei);
          if (!fits_i64(Int(v.get_num()))) { ok = false; break; }
          mats[(static_cast<size_t>(i) * n0 + j) * n0 + k] = v.get_num().get_si();
          row += std::abs((long double)v.get_num().get_si());
        }
        row_max = std::max(row_max, row);
        if (!ok) break;
      }
      max_row_sum = std::max(max_row_sum, row_max);
    }
  }

  const size_t start_cells = st.cell_vectors.size();
  std::vector<i64> vals;
  if (ok) {
    vals.resize(start_cells * n0);
    const Rat q0r((Int(q0)));
    for (size_t c = 0; c < start_cells && ok; ++c)
      for (int k = 0; k < n0; ++k) {
        Rat v = st.cell_vectors[c][k] * q0r;
        if (!fits_i64(Int(v.get_num()))) { ok = false; break; }
        vals[c * n0 + k] = v.get_num().get_si();
        max_start = std::max(max_start, (long double)std::abs(vals[c * n0 + k]));
      }
  }
  if (ok) {
    long double vbound = max_start;
    for (int j = st.level; j < max_m; ++j) vbound *= max_row_sum;
    if (vbound > 4.6e18L) ok = false;
    if (ok && vbound * vbound * (long double)(n0 * n0) * max_d > 1.7e37L) ok = false;
  }

  if (!ok) {
    // mpq fallback: straight table comparison level by level
    std::vector<Rat> prev;
    for (int m = st.level + 1; m <= max_m; ++m) {
      std::vector<Rat> cur = gram_field_reference(model, fs, m).gram;
      if (m > st.level + 1) {
        for (size_t w = 0; w < prev.size(); ++w) {
          Rat s = 0;
          for (int i = 0; i < ns; ++i) s += cur[w * ns + i];
          if (s != prev[w]) {
            rep.fail_level = m - 1;
            rep.fail_parent = static_cast<long>(w);
            return rep;
          }
        }
      }
      prev = std::move(cur);
    }
    rep.ok = true;
    return rep;
  }

  // integer identity per parent: with P = prod_i s_i^2 rnum_i and
  // Q_i = P / (s_i^2 rnum_i), the child sum holds iff
  //   sum_i E_{w i} rden_i Q_i == E_w P
  Int p_all(1);
  for (int i = 0; i < ns; ++i) p_all *= Int(scal[i]) * scal[i] * rnum[i];
  std::vector<Int> q_sym(ns);
  for (int i = 0; i < ns; ++i) {
    q_sym[i] = p_all / (Int(scal[i]) * scal[i] * rnum[i]);
    q_sym[i] *= rden[i];
  }

  auto e0_int = [&](const i64* u) {
    i128 e = 0;
    for (int k = 0; k < n0; ++k) {
      i128 inner = 0;
      for (int l = 0; l < n0; ++l) inner += (i128)dmat[k * n0 + l] * u[l];
      e += (i128)u[k] * inner;
    }
    return e;
  };

  for (int lvl = st.level; lvl < max_m; ++lvl) {
    const size_t cells = vals.size() / n0;
    std::vector<i64> nvals(cells * ns * n0);
    long long bad = -1;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long c = 0; c < static_cast<long long>(cells); ++c) {
      Int lhs(0);
      for (int i = 0; i < ns; ++i) {
        const i64* mat = &mats[static_cast<size_t>(i) * n0 * n0];
        i64* out = &nvals[(c * ns + i) * n0];
        const i64* u = &vals[c * n0];
        for (int j = 0; j < n0; ++j) {
          i64 acc = 0;
          for (int k = 0; k < n0; ++k) acc += mat[j * n0 + k] * u[k];
          out[j] = acc;
        }
        lhs += mpz_from_i128(e0_int(out)) * q_sym[i];
      }
      Int rhs = mpz_from_i128(e0_int(&vals[c * n0])) * p_all;
      if (lhs != rhs) {
#ifdef _OPENMP
#pragma omp critical
#endif
        bad = (bad < 0 || c < bad) ? c : bad;
      }
    }
    if (bad >= 0) {
      rep.fail_level = lvl;
      rep.fail_parent = static_cast<long>(bad);
      return rep;
    }
    vals = std::move(nvals);
  }
  rep.ok = true;
  return rep;
}

}  // namespace fractal
