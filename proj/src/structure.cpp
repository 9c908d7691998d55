#include "fractal/structure.hpp"

#include <stdexcept>

namespace fractal {

std::vector<Word> cells_at_level(const PcfStructure& s, int m) {
  if (m < 0) throw std::invalid_argument("cells_at_level: m < 0");
  const int ns = s.symbol_count();
  const size_t n = cell_count(m, ns);
  std::vector<Word> out;
  out.reserve(n);
  for (size_t r = 0; r < n; ++r) out.push_back(word_at(m, r, ns));
  return out;
}

VertexTable build_vertex_table(const PcfStructure& s, int m) {
  if (m < 0) throw std::invalid_argument("build_vertex_table: m < 0");
  const int ns = s.symbol_count();
  const int n0 = s.boundary_count();

  VertexTable t;
  t.level = m;
  std::map<QVec, int> ids;
  for (int k = 0; k < n0; ++k) {
    if (!ids.emplace(s.boundary[k], k).second)
      throw std::runtime_error("duplicate boundary vertex");
    t.coords.push_back(s.boundary[k]);
  }

  t.cell_ids.resize(cell_count(m, ns));

  // DFS over words carrying the composed map psi_w.
  std::vector<int> cell(n0);
  auto visit = [&](auto&& self, const Word& w, const AffineMap& map) -> void {
    if (w.level() == m) {
      std::set<int> distinct;
      for (int k = 0; k < n0; ++k) {
        QVec p = map.apply(s.boundary[k]);
        auto it = ids.find(p);
        int id;
        if (it == ids.end()) {
          id = static_cast<int>(t.coords.size());
          ids.emplace(p, id);
          t.coords.push_back(std::move(p));
        } else {
          id = it->second;
        }
        cell[k] = id;
        distinct.insert(id);
      }
      if (static_cast<int>(distinct.size()) != n0)
        throw std::runtime_error("inconsistent gluing: contraction collapses model points (cell " +
                                 w.str() + ")");
      t.cell_ids[word_rank(w, ns)] = cell;
      return;
    }
    for (int i = 0; i < ns; ++i)
      self(self, w.child(static_cast<uint8_t>(i)), map.compose(s.maps[i]));
  };
  AffineMap id;
  id.linear = QMat::identity(s.dim);
  id.offset.assign(s.dim, Rat(0));
  visit(visit, Word(), id);

  t.num_vertices = static_cast<int>(t.coords.size());
  return t;
}

std::set<Word> neighbor_set(const PcfStructure& s, const Word& w, int n) {
  if (n < 0) throw std::invalid_argument("neighbor_set: n < 0");
  if (w.empty()) throw std::invalid_argument("neighbor_set: empty word");
  std::set<Word> current{w};
  if (n == 0) return current;

  const int ns = s.symbol_count();
  const int m = w.level();
  VertexTable t = build_vertex_table(s, m);

  std::vector<std::set<size_t>> touching(t.num_vertices);
  for (size_t r = 0; r < t.cell_ids.size(); ++r)
    for (int id : t.cell_ids[r]) touching[id].insert(r);

  for (int step = 0; step < n; ++step) {
    std::set<Word> next = current;
    for (const Word& v : current)
      for (int id : t.cell_ids[word_rank(v, ns)])
        for (size_t r : touching[id]) next.insert(word_at(m, r, ns));
    if (next == current) break;  // saturated
    current = std::move(next);
  }
  return current;
}

std::string validate_structure(const PcfStructure& s) {
  if (s.symbol_count() < 2) return "symbol count must be at least 2";
  if (s.dim < 1) return "dimension must be positive";
  if (s.boundary_count() < 2) return "boundary vertex set must have at least 2 points";
  for (int i = 0; i < s.symbol_count(); ++i) {
    const AffineMap& m = s.maps[i];
    if (m.linear.rows != s.dim || m.linear.cols != s.dim ||
        static_cast<int>(m.offset.size()) != s.dim)
      return "map " + std::to_string(i) + " has wrong shape";
  }
  for (const QVec& p : s.boundary)
    if (static_cast<int>(p.size()) != s.dim) return "boundary point has wrong dimension";
  if (s.weights) {
    if (static_cast<int>(s.weights->theta.size()) != s.symbol_count())
      return "measure weights must have one entry per symbol";
    Rat total = 0;
    for (const Rat& th : s.weights->theta) {
      if (th <= 0) return "measure weights must be positive";
      total += th;
    }
    if (total != 1) return "measure weights must sum to 1";
  }
  try {
    build_vertex_table(s, 1);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace fractal
