#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "fractal/presets.hpp"
#include "fractal/structure.hpp"

using namespace fractal;

TEST_CASE("word ordering, ranks and parsing round-trip") {
  CHECK(Word::parse("012", 3).str() == "012");
  CHECK(Word::parse("-", 3).empty());
  CHECK(Word().str() == "-");
  CHECK_THROWS(Word::parse("3", 3));
  CHECK_THROWS(Word::parse("0x", 3));

  for (int level = 0; level <= 4; ++level)
    for (size_t rank = 0; rank < cell_count(level, 3); ++rank) {
      Word w = word_at(level, rank, 3);
      CHECK(w.level() == level);
      CHECK(word_rank(w, 3) == rank);
    }

  Word a = Word::parse("01", 3), b = Word::parse("02", 3);
  CHECK(a < b);
  CHECK(a.child(2) == Word::parse("012", 3));
  CHECK(a.concat(b) == Word::parse("0102", 3));
}

TEST_CASE("gasket vertex tables glue to the known counts") {
  auto p = pcf_preset("sg2");
  // |V_m| = 3 (3^m + 1) / 2 for the triangle gasket
  for (int m = 0; m <= 5; ++m) {
    VertexTable vt = build_vertex_table(p.structure, m);
    size_t pw = cell_count(m, 3);
    CHECK(vt.num_vertices == static_cast<int>(3 * (pw + 1) / 2));
    CHECK(vt.cell_ids.size() == pw);
    // V_0 ids are stable across levels
    for (int i = 0; i < 3; ++i) CHECK(vt.coords[i] == p.structure.boundary[i]);
    // every cell carries a full distinct boundary image
    for (const auto& ids : vt.cell_ids) {
      std::set<int> uniq(ids.begin(), ids.end());
      CHECK(uniq.size() == 3);
    }
  }
}

TEST_CASE("cells_at_level enumerates lexicographically without duplicates") {
  auto p = pcf_preset("sg3");
  auto cells = cell_count(2, p.structure.symbol_count());
  auto words = cells_at_level(p.structure, 2);
  CHECK(words.size() == cells);
  for (size_t i = 1; i < words.size(); ++i) CHECK(words[i - 1] < words[i]);
}

TEST_CASE("neighbor sets grow monotonically and saturate") {
  auto p = pcf_preset("sg2");
  Word w = Word::parse("00", 3);
  auto n0 = neighbor_set(p.structure, w, 0);
  CHECK(n0 == std::set<Word>{w});
  auto n1 = neighbor_set(p.structure, w, 1);
  auto n2 = neighbor_set(p.structure, w, 2);
  CHECK(n1.size() > n0.size());
  for (const Word& x : n1) CHECK(n2.count(x) == 1);
  // at level 1 every cell touches every other cell of the gasket
  auto all = neighbor_set(p.structure, Word::parse("0", 3), 1);
  CHECK(all.size() == 3);
}

TEST_CASE("measure weights multiply along words") {
  auto p = pcf_preset("sg2");
  REQUIRE(p.structure.weights.has_value());
  const auto& th = *p.structure.weights;
  Rat total = 0;
  for (const Rat& t : th.theta) total += t;
  CHECK(total == 1);
  CHECK(th.weight(Word::parse("01", 3)) == th.theta[0] * th.theta[1]);
  CHECK(th.weight(Word()) == 1);
}

TEST_CASE("validate_structure reports the first violation") {
  auto good = pcf_preset("sg2").structure;
  CHECK(validate_structure(good).empty());

  auto bad = good;
  bad.maps.clear();
  CHECK_FALSE(validate_structure(bad).empty());

  bad = good;
  bad.weights->theta[0] = Rat(-1, 3);
  CHECK_FALSE(validate_structure(bad).empty());

  bad = good;
  bad.weights->theta[0] = Rat(1, 2);  // no longer sums to 1
  CHECK_FALSE(validate_structure(bad).empty());

  bad = good;
  bad.boundary.resize(1);
  CHECK_FALSE(validate_structure(bad).empty());
}

TEST_CASE("degenerate contraction fails the gluing build") {
  auto p = pcf_preset("sg2");
  auto bad = p.structure;
  // collapse one map to a constant: images coincide, gluing breaks
  for (Rat& v : bad.maps[0].linear.a) v = 0;
  CHECK_THROWS(build_vertex_table(bad, 1));
}
