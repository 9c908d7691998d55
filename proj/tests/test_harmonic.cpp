#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <map>
#include <random>

#include "fractal/presets.hpp"

using namespace fractal;

namespace {

Rat rnd_rat(std::mt19937& rng) {
  Rat q(static_cast<int>(rng() % 201) - 100, static_cast<int>(1 + rng() % 12));
  q.canonicalize();
  return q;
}

// Maps vertex ids of V_m into V_{m+1} by exact coordinate equality.
std::vector<int> embed_ids(const PcfStructure& s, const VertexTable& coarse,
                           const VertexTable& fine) {
  std::map<QVec, int> lookup;
  for (int v = 0; v < fine.num_vertices; ++v) lookup[fine.coords[v]] = v;
  std::vector<int> ids(coarse.num_vertices);
  for (int v = 0; v < coarse.num_vertices; ++v) ids[v] = lookup.at(coarse.coords[v]);
  return ids;
}

// Independent oracle: minimize E^(m) over interior vertices by exact dense
// solve of the normal equations (no use of the extension matrices).
QVec minimization_oracle(const PcfModel& model, const QVec& boundary, int m) {
  GraphForm g = assemble_graph_form(model.structure(), model.harmonic(), m);
  const int n0 = model.boundary_count();
  const int n = g.n;
  const int ni = n - n0;
  QMat h(ni, ni);
  QVec rhs(ni);
  for (int i = 0; i < ni; ++i) {
    for (const auto& [j, v] : g.rows[n0 + i]) {
      if (j >= n0)
        h.at(i, j - n0) = v;
      else
        rhs[i] -= v * boundary[j];
    }
  }
  QVec interior = solve_linear(h, rhs);
  QVec full(n);
  for (int i = 0; i < n0; ++i) full[i] = boundary[i];
  for (int i = 0; i < ni; ++i) full[n0 + i] = interior[i];
  return full;
}

}  // namespace

TEST_CASE("triangle Laplacian passes (D1)-(D3); broken matrices do not") {
  auto rep = validate_harmonic_structure_matrix(pcf_preset("sg2").harmonic.d_matrix);
  CHECK(rep.valid());

  QMat pos = QMat::identity(3);  // positive definite, not a Laplacian
  CHECK_FALSE(validate_harmonic_structure_matrix(pos).valid());

  QMat neg(3, 3);  // zero matrix: kernel too large, (D2) fails
  CHECK_FALSE(validate_harmonic_structure_matrix(neg).valid());

  QMat asym = pcf_preset("sg2").harmonic.d_matrix;
  asym.at(0, 1) += 1;
  CHECK_FALSE(validate_harmonic_structure_matrix(asym).symmetric);

  QMat negoff(2, 2);  // off-diagonal negative breaks (D3)
  negoff.at(0, 0) = -1;
  negoff.at(1, 1) = -1;
  negoff.at(0, 1) = -1;
  negoff.at(1, 0) = -1;
  CHECK_FALSE(validate_harmonic_structure_matrix(negoff).d3_offdiag_nonneg);
}

TEST_CASE("fixed point holds exactly for sg2 and sg3, and fails for wrong r") {
  for (const char* name : {"sg2", "sg3"}) {
    auto p = pcf_preset(name);
    VerifyResult res = verify_harmonic_structure(p.structure, p.harmonic);
    CHECK(res.ok);
    for (const Rat& v : res.residual.a) CHECK(v == 0);

    auto bad = p.harmonic;
    bad.r.assign(bad.r.size(), Rat(1, 2));
    CHECK_FALSE(verify_harmonic_structure(p.structure, bad).ok);
  }
}

TEST_CASE("trace of E^(m+1) onto V_m reproduces E^(m) for m <= 3") {
  auto p = pcf_preset("sg2");
  for (int m = 0; m <= 3; ++m) {
    GraphForm coarse = assemble_graph_form(p.structure, p.harmonic, m);
    GraphForm fine = assemble_graph_form(p.structure, p.harmonic, m + 1);
    VertexTable vtc = build_vertex_table(p.structure, m);
    VertexTable vtf = build_vertex_table(p.structure, m + 1);
    std::vector<int> keep = embed_ids(p.structure, vtc, vtf);
    // trace_form wants ascending keep ids; map outputs back through a sort
    std::vector<int> order(keep.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return keep[a] < keep[b]; });
    std::vector<int> sorted;
    for (int i : order) sorted.push_back(keep[i]);
    GraphForm traced = trace_form(fine, sorted);
    QMat td = traced.dense(), cd = coarse.dense();
    for (size_t a = 0; a < order.size(); ++a)
      for (size_t b = 0; b < order.size(); ++b)
        CHECK(td.at(static_cast<int>(a), static_cast<int>(b)) ==
              cd.at(order[a], order[b]));
  }
}

TEST_CASE("restriction never increases energy (exact)") {
  auto p = pcf_preset("sg2");
  std::mt19937 rng(3);
  for (int m = 0; m <= 2; ++m) {
    GraphForm coarse = assemble_graph_form(p.structure, p.harmonic, m);
    GraphForm fine = assemble_graph_form(p.structure, p.harmonic, m + 1);
    VertexTable vtc = build_vertex_table(p.structure, m);
    VertexTable vtf = build_vertex_table(p.structure, m + 1);
    std::vector<int> ids = embed_ids(p.structure, vtc, vtf);
    for (int trial = 0; trial < 5; ++trial) {
      QVec u(vtf.num_vertices);
      for (Rat& v : u) v = rnd_rat(rng);
      QVec restr(vtc.num_vertices);
      for (int i = 0; i < vtc.num_vertices; ++i) restr[i] = u[ids[i]];
      CHECK(coarse.evaluate(restr, restr) <= fine.evaluate(u, u));
    }
  }
}

TEST_CASE("harmonic extension equals the dense minimization oracle") {
  std::mt19937 rng(17);
  for (const char* name : {"sg2", "sg3"}) {
    auto p = pcf_preset(name);
    PcfModel model(p.structure, p.harmonic);
    for (int m = 1; m <= 2; ++m)
      for (int trial = 0; trial < 3; ++trial) {
        QVec b(3);
        for (Rat& v : b) v = rnd_rat(rng);
        PiecewiseHarmonicFunction f = model.harmonic_extension(b, m);
        QVec oracle = minimization_oracle(model, b, m);
        REQUIRE(f.values.size() == oracle.size());
        for (size_t i = 0; i < oracle.size(); ++i) CHECK(f.values[i] == oracle[i]);
      }
  }
}

TEST_CASE("maximum principle: extensions stay inside the boundary range") {
  auto p = pcf_preset("sg2");
  PcfModel model(p.structure, p.harmonic);
  std::mt19937 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    QVec b(3);
    for (Rat& v : b) v = rnd_rat(rng);
    Rat lo = std::min({b[0], b[1], b[2]}), hi = std::max({b[0], b[1], b[2]});
    PiecewiseHarmonicFunction f = model.harmonic_extension(b, 4);
    for (const Rat& v : f.values) {
      CHECK(v >= lo);
      CHECK(v <= hi);
    }
  }
}

TEST_CASE("energy is level-independent and decomposes cellwise (Eq. 4.3 pattern)") {
  auto p = pcf_preset("sg2");
  PcfModel model(p.structure, p.harmonic);
  std::mt19937 rng(41);
  QVec b(3);
  for (Rat& v : b) v = rnd_rat(rng);
  PiecewiseHarmonicFunction f = model.harmonic_extension(b, 0);
  Rat e = model.energy(f);

  for (int m = 1; m <= 4; ++m) {
    PiecewiseHarmonicFunction fm = model.extend(f, m);
    GraphForm g = assemble_graph_form(p.structure, p.harmonic, m);
    CHECK(g.evaluate(fm.values, fm.values) == e);

    // cell decomposition: E(f) = sum_w r_w^{-1} E(pullback(f, w))
    Rat total = 0;
    for (const Word& w : cells_at_level(p.structure, m))
      total += model.energy(model.pullback(fm, w)) / p.harmonic.r_word(w);
    CHECK(total == e);
  }
}

TEST_CASE("pullbacks of harmonic functions are harmonic with the cell boundary values") {
  auto p = pcf_preset("sg2");
  PcfModel model(p.structure, p.harmonic);
  PiecewiseHarmonicFunction h = model.harmonic_extension({Rat(1), Rat(0), Rat(0)}, 2);
  Word w = Word::parse("0", 3);
  PiecewiseHarmonicFunction pb = model.pullback(h, w);
  // worked example: boundary values of the pullback by "0" are (1, 2/5, 2/5)
  QVec expect{Rat(1), Rat(2, 5), Rat(2, 5)};
  QVec got{pb.values[0], pb.values[1], pb.values[2]};  // V_0 ids are stable
  CHECK(got == expect);
  // and the pullback coincides with the harmonic extension of its boundary
  PiecewiseHarmonicFunction ref = model.harmonic_extension(expect, pb.level);
  CHECK(pb.values == ref.values);
}

TEST_CASE("mutual energy is bilinear and satisfies exact Cauchy-Schwarz") {
  auto p = pcf_preset("sg2");
  PcfModel model(p.structure, p.harmonic);
  std::mt19937 rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    QVec a(3), b(3);
    for (Rat& v : a) v = rnd_rat(rng);
    for (Rat& v : b) v = rnd_rat(rng);
    auto f = model.harmonic_extension(a, 0);
    auto g = model.harmonic_extension(b, 0);
    Rat efg = model.mutual_energy(f, g);
    CHECK(efg == model.mutual_energy(g, f));
    CHECK(efg * efg <= model.energy(f) * model.energy(g));

    // bilinearity: E(f + g) = E(f) + 2 E(f,g) + E(g)
    QVec sum(3);
    for (int i = 0; i < 3; ++i) sum[i] = a[i] + b[i];
    auto fg = model.harmonic_extension(sum, 0);
    CHECK(model.energy(fg) == model.energy(f) + 2 * efg + model.energy(g));
  }
}

TEST_CASE("scalar renormalization recovers the known uniform weights") {
  for (auto [name, expect] : {std::pair<const char*, Rat>{"sg2", Rat(3, 5)},
                              {"sg3", Rat(7, 15)}}) {
    auto p = pcf_preset(name);
    RenormResult res = solve_renormalization_scalar(p.structure, p.harmonic.d_matrix);
    CHECK(res.converged);
    CHECK(res.exact);
    CHECK(res.r_exact == expect);
  }
}
