#include "fractal/carpet.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fractal {
namespace {

// Face-adjacency connectivity of a cell list (shared (D-1)-face = coords
// differ by 1 in exactly one place). The list must be sorted.
bool face_connected(const std::vector<std::vector<int>>& cells) {
  if (cells.size() <= 1) return true;
  const int d = static_cast<int>(cells[0].size());
  std::vector<int> seen(cells.size(), 0);
  std::vector<size_t> stack{0};
  seen[0] = 1;
  size_t reached = 1;
  while (!stack.empty()) {
    const std::vector<int> cur = cells[stack.back()];
    stack.pop_back();
    std::vector<int> nb = cur;
    for (int k = 0; k < d; ++k) {
      for (int step : {-1, 1}) {
        nb[k] = cur[k] + step;
        auto it = std::lower_bound(cells.begin(), cells.end(), nb);
        if (it != cells.end() && *it == nb) {
          size_t idx = static_cast<size_t>(it - cells.begin());
          if (!seen[idx]) {
            seen[idx] = 1;
            ++reached;
            stack.push_back(idx);
          }
        }
      }
      nb[k] = cur[k];
    }
  }
  return reached == cells.size();
}

// (ND) on the level-m refinement of the level-1 cells: every 2x...x2 block
// of the l^m grid must meet the refined set in a face-connected piece.
bool nondiagonal_refinement(const CarpetGenerator& g, int m) {
  const int d = g.dim;
  const long side = static_cast<long>(std::llround(std::pow(g.l, m)));
  const long coarse = side / g.l;  // l^{m-1}

  auto present = [&](const std::vector<long>& c) {
    std::vector<int> parent(d);
    for (int k = 0; k < d; ++k) parent[k] = static_cast<int>(c[k] / coarse);
    return g.contains(parent);
  };

  // iterate over block anchors j in {0..side-2}^d
  std::vector<long> anchor(d, 0);
  while (true) {
    std::vector<std::vector<int>> block;
    for (int mask = 0; mask < (1 << d); ++mask) {
      std::vector<long> c(d);
      for (int k = 0; k < d; ++k) c[k] = anchor[k] + ((mask >> k) & 1);
      if (present(c)) {
        std::vector<int> ci(d);
        for (int k = 0; k < d; ++k) ci[k] = static_cast<int>(c[k]);
        block.push_back(std::move(ci));
      }
    }
    std::sort(block.begin(), block.end());
    if (!face_connected(block)) return false;

    int k = 0;
    while (k < d && ++anchor[k] > side - 2) anchor[k++] = 0;
    if (k == d) break;
  }
  return true;
}

void require_nonempty(const CarpetGenerator& g) {
  if (g.dim < 2 || g.l < 3) throw std::invalid_argument("carpet: need dim >= 2, l >= 3");
  for (const auto& c : g.cells) {
    if (static_cast<int>(c.size()) != g.dim)
      throw std::invalid_argument("carpet: cell arity mismatch");
    for (int v : c)
      if (v < 0 || v >= g.l) throw std::invalid_argument("carpet: cell out of range");
  }
}

}  // namespace

bool CarpetGenerator::contains(const std::vector<int>& c) const {
  return std::binary_search(cells.begin(), cells.end(), c);
}

bool check_symmetry(const CarpetGenerator& g) {
  require_nonempty(g);
  const int d = g.dim;
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (int flips = 0; flips < (1 << d); ++flips) {
      for (const auto& c : g.cells) {
        std::vector<int> img(d);
        for (int k = 0; k < d; ++k) {
          int v = c[perm[k]];
          if ((flips >> k) & 1) v = g.l - 1 - v;
          img[k] = v;
        }
        if (!g.contains(img)) return false;
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return true;
}

bool check_connectedness(const CarpetGenerator& g) {
  require_nonempty(g);
  if (g.cells.empty()) return false;
  if (!face_connected(g.cells)) return false;
  bool low = false, high = false;
  for (const auto& c : g.cells) {
    if (c[0] == 0) low = true;
    if (c[0] == g.l - 1) high = true;
  }
  return low && high;  // connected + both opposite faces touched = crossing path
}

bool check_nondiagonality(const CarpetGenerator& g) {
  require_nonempty(g);
  return nondiagonal_refinement(g, 2);
}

bool check_nondiagonality_brute(const CarpetGenerator& g, int max_m) {
  require_nonempty(g);
  for (int m = 1; m <= max_m; ++m)
    if (!nondiagonal_refinement(g, m)) return false;
  return true;
}

bool check_nondiagonality_rectangles(const CarpetGenerator& g) {
  require_nonempty(g);
  const int d = g.dim;
  // every box with edge lengths in {1,2} on the level-1 grid must meet the
  // generator in a face-connected piece
  std::vector<int> len(d, 1);
  while (true) {
    std::vector<int> anchor(d, 0);
    bool anchors_left = true;
    while (anchors_left) {
      std::vector<std::vector<int>> box;
      std::vector<int> c(d);
      int mask_count = 1;
      for (int k = 0; k < d; ++k) mask_count *= len[k];
      for (int idx = 0; idx < mask_count; ++idx) {
        int t = idx;
        for (int k = 0; k < d; ++k) {
          c[k] = anchor[k] + t % len[k];
          t /= len[k];
        }
        if (g.contains(c)) box.push_back(c);
      }
      std::sort(box.begin(), box.end());
      if (!face_connected(box)) return false;

      int k = 0;
      while (k < d && ++anchor[k] > g.l - len[k]) anchor[k++] = 0;
      anchors_left = k < d;
    }
    int k = 0;
    while (k < d && ++len[k] > 2) len[k++] = 1;
    if (k == d) break;
  }
  return true;
}

bool check_borders(const CarpetGenerator& g) {
  require_nonempty(g);
  std::vector<int> c(g.dim, 0);
  for (int k = 0; k < g.l; ++k) {
    c[0] = k;
    if (!g.contains(c)) return false;
  }
  return true;
}

CarpetCheckReport check_carpet(const CarpetGenerator& g) {
  CarpetCheckReport rep;
  long full = 1;
  for (int k = 0; k < g.dim; ++k) full *= g.l;
  rep.proper = g.cell_count() >= 2 && g.cell_count() < full;
  rep.symmetry = check_symmetry(g);
  rep.connectedness = check_connectedness(g);
  rep.nondiagonality = check_nondiagonality(g);
  rep.borders = check_borders(g);
  return rep;
}

PreCarpetGraph build_pre_carpet(const CarpetGenerator& g, int n, int64_t vertex_cap) {
  require_nonempty(g);
  if (n < 1) throw std::invalid_argument("build_pre_carpet: level must be >= 1");
  double count = std::pow(static_cast<double>(g.cell_count()), n);
  if (count > static_cast<double>(vertex_cap))
    throw std::runtime_error("build_pre_carpet: vertex cap exceeded");

  const int d = g.dim;
  // iterate the generator: level-k cell c expands to c*l + s for s in G
  std::vector<std::vector<int>> cells = g.cells;
  for (int lvl = 2; lvl <= n; ++lvl) {
    std::vector<std::vector<int>> next;
    next.reserve(cells.size() * g.cells.size());
    std::vector<int> c(d);
    for (const auto& parent : cells)
      for (const auto& s : g.cells) {
        for (int k = 0; k < d; ++k) c[k] = parent[k] * g.l + s[k];
        next.push_back(c);
      }
    cells = std::move(next);
  }
  std::sort(cells.begin(), cells.end());

  PreCarpetGraph graph;
  graph.level = n;
  graph.num_vertices = static_cast<int64_t>(cells.size());
  graph.row_ptr.assign(cells.size() + 1, 0);

  const long side = static_cast<long>(std::llround(std::pow(g.l, n)));
  std::vector<std::vector<int64_t>> adj(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) {
    std::vector<int> nb = cells[i];
    for (int k = 0; k < d; ++k) {
      nb[k] = cells[i][k] + 1;  // only +1: each edge found once, mirrored below
      auto it = std::lower_bound(cells.begin(), cells.end(), nb);
      if (it != cells.end() && *it == nb) {
        int64_t j = static_cast<int64_t>(it - cells.begin());
        adj[i].push_back(j);
        adj[j].push_back(static_cast<int64_t>(i));
      }
      nb[k] = cells[i][k];
    }
    if (cells[i][0] == 0) graph.face_low.push_back(static_cast<int64_t>(i));
    if (cells[i][0] == side - 1) graph.face_high.push_back(static_cast<int64_t>(i));
  }
  for (size_t i = 0; i < cells.size(); ++i)
    graph.row_ptr[i + 1] = graph.row_ptr[i] + static_cast<int64_t>(adj[i].size());
  graph.col_idx.resize(static_cast<size_t>(graph.row_ptr.back()));
  for (size_t i = 0; i < cells.size(); ++i) {
    std::sort(adj[i].begin(), adj[i].end());
    std::copy(adj[i].begin(), adj[i].end(), graph.col_idx.begin() + graph.row_ptr[i]);
  }
  return graph;
}

namespace {

// y = L x restricted to free vertices (graph Laplacian, unit conductances);
// fixed vertices contribute through the right-hand side instead.
void laplacian_apply(const PreCarpetGraph& g, const std::vector<int64_t>& free_of,
                     const std::vector<int64_t>& vert_of, const std::vector<double>& x,
                     std::vector<double>& y, bool parallel) {
  const int64_t nf = static_cast<int64_t>(vert_of.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (int64_t i = 0; i < nf; ++i) {
    const int64_t v = vert_of[i];
    double acc = static_cast<double>(g.degree(v)) * x[i];
    for (int64_t e = g.row_ptr[v]; e < g.row_ptr[v + 1]; ++e) {
      int64_t j = free_of[g.col_idx[e]];
      if (j >= 0) acc -= x[j];
    }
    y[i] = acc;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b, bool parallel) {
  double s = 0.0;
  const int64_t n = static_cast<int64_t>(a.size());
#pragma omp parallel for schedule(static) reduction(+ : s) if (parallel)
  for (int64_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LaplaceSolveResult effective_resistance(const PreCarpetGraph& graph,
                                        const std::vector<int64_t>& face_a,
                                        const std::vector<int64_t>& face_b,
                                        double rel_tol, int max_iter, bool parallel) {
  if (face_a.empty() || face_b.empty())
    throw std::invalid_argument("effective_resistance: empty boundary set");

  const int64_t n = graph.num_vertices;
  std::vector<double> fixed(n, -1.0);  // -1 free, else boundary potential
  for (int64_t v : face_a) fixed[v] = 1.0;
  for (int64_t v : face_b) {
    if (fixed[v] == 1.0)
      throw std::invalid_argument("effective_resistance: boundary sets overlap");
    fixed[v] = 0.0;
  }

  std::vector<int64_t> free_of(n, -1), vert_of;
  for (int64_t v = 0; v < n; ++v)
    if (fixed[v] < 0.0) {
      free_of[v] = static_cast<int64_t>(vert_of.size());
      vert_of.push_back(v);
    }
  const int64_t nf = static_cast<int64_t>(vert_of.size());

  // rhs_i = sum of boundary potentials adjacent to free vertex i
  std::vector<double> b(nf, 0.0);
  for (int64_t i = 0; i < nf; ++i) {
    const int64_t v = vert_of[i];
    for (int64_t e = graph.row_ptr[v]; e < graph.row_ptr[v + 1]; ++e) {
      int64_t w = graph.col_idx[e];
      if (fixed[w] >= 0.0) b[i] += fixed[w];
    }
  }

  LaplaceSolveResult res;
  std::vector<double> x(nf, 0.0), r = b, z(nf), p(nf), ap(nf);
  std::vector<double> inv_diag(nf);
  for (int64_t i = 0; i < nf; ++i)
    inv_diag[i] = 1.0 / static_cast<double>(graph.degree(vert_of[i]));

  const double bnorm = std::sqrt(std::max(dot(b, b, parallel), 1e-300));
  for (int64_t i = 0; i < nf; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z, parallel);
  int it = 0;
  double rel = std::sqrt(dot(r, r, parallel)) / bnorm;
  while (rel > rel_tol && it < max_iter && nf > 0) {
    laplacian_apply(graph, free_of, vert_of, p, ap, parallel);
    double alpha = rz / dot(p, ap, parallel);
#pragma omp parallel for schedule(static) if (parallel)
    for (int64_t i = 0; i < nf; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      z[i] = inv_diag[i] * r[i];
    }
    double rz_new = dot(r, z, parallel);
    double beta = rz_new / rz;
    rz = rz_new;
#pragma omp parallel for schedule(static) if (parallel)
    for (int64_t i = 0; i < nf; ++i) p[i] = z[i] + beta * p[i];
    ++it;
    rel = std::sqrt(dot(r, r, parallel)) / bnorm;
  }

  res.iterations = it;
  res.residual = rel;
  res.converged = rel <= rel_tol;
  res.potential.assign(n, 0.0);
  for (int64_t v = 0; v < n; ++v)
    res.potential[v] = fixed[v] >= 0.0 ? fixed[v] : x[free_of[v]];

  double energy = 0.0;
  for (int64_t v = 0; v < n; ++v)
    for (int64_t e = graph.row_ptr[v]; e < graph.row_ptr[v + 1]; ++e) {
      int64_t w = graph.col_idx[e];
      if (w > v) {
        double diff = res.potential[v] - res.potential[w];
        energy += diff * diff;
      }
    }
  res.energy = energy;
  res.resistance = energy > 0.0 ? 1.0 / energy : 0.0;  // unit potential gap
  return res;
}

ResistanceScaling resistance_scaling(const CarpetGenerator& g, int n_min, int n_max,
                                     double rel_tol, int64_t vertex_cap, bool parallel) {
  if (n_min < 1 || n_max < n_min)
    throw std::invalid_argument("resistance_scaling: bad level range");
  ResistanceScaling sc;
  for (int n = n_min; n <= n_max; ++n) {
    PreCarpetGraph graph = build_pre_carpet(g, n, vertex_cap);
    LaplaceSolveResult r =
        effective_resistance(graph, graph.face_low, graph.face_high, rel_tol, 200000, parallel);
    if (!r.converged) throw std::runtime_error("resistance_scaling: solver did not converge");
    sc.levels.push_back(n);
    sc.resistance.push_back(r.resistance);
  }
  for (size_t i = 1; i < sc.resistance.size(); ++i)
    sc.rho.push_back(sc.resistance[i] / sc.resistance[i - 1]);
  if (!sc.rho.empty()) sc.r_hat = 1.0 / sc.rho.back();
  return sc;
}

DimensionReport dimension_report(const CarpetGenerator& g, double r_hat) {
  require_nonempty(g);
  const double m = static_cast<double>(g.cell_count());
  const double l = static_cast<double>(g.l);
  if (!(r_hat > 1.0 / m && r_hat <= m / (l * l)))
    throw std::invalid_argument("dimension_report: r_hat outside (1/M, M/l^2]");

  DimensionReport rep;
  rep.r_hat = r_hat;
  rep.d_h = std::log(m) / std::log(l);
  rep.d_w = std::log(m / r_hat) / std::log(l);
  rep.d_s = 2.0 * std::log(m) / std::log(m / r_hat);
  rep.identity_residual = std::abs(rep.d_h - rep.d_w * rep.d_s / 2.0);

  constexpr double kIntTol = 1e-9;
  if (rep.d_s < 2.0 - kIntTol) {
    rep.d_m_bound = 1;
    rep.branch = "d_s < 2";
  } else if (rep.d_s <= 2.0 + kIntTol) {
    rep.d_m_bound = 2;
    rep.branch = "d_s = 2";
  } else {
    rep.d_m_bound = static_cast<int>(std::floor(rep.d_s));
    rep.branch = std::abs(rep.d_s - std::round(rep.d_s)) <= kIntTol
                     ? "d_s > 2, integer (bound taken as d_s)"
                     : "d_s > 2, floor";
  }
  rep.caveat =
      "r_hat comes from finite pre-carpet resistances; the report carries "
      "no error bound for the limiting renormalization factor";
  return rep;
}

}  // namespace fractal
