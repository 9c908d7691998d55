#include "fractal/config.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace fractal {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

const json& field(const json& j, const char* key, const std::string& who) {
  auto it = j.find(key);
  if (it == j.end()) fail(who + ": missing field '" + key + "'");
  return *it;
}

Rat rat_of(const json& j, const std::string& who) {
  try {
    if (j.is_string()) return parse_rat(j.get<std::string>());
    if (j.is_number_integer()) return Rat(j.get<long>());
  } catch (const std::exception& e) {
    fail(who + ": " + e.what());
  }
  fail(who + ": expected a rational string \"p/q\" or an integer");
}

QVec vec_of(const json& j, const std::string& who) {
  if (!j.is_array()) fail(who + ": expected an array");
  QVec v;
  for (size_t i = 0; i < j.size(); ++i)
    v.push_back(rat_of(j[i], who + "[" + std::to_string(i) + "]"));
  return v;
}

QMat mat_of(const json& j, const std::string& who) {
  if (!j.is_array() || j.empty()) fail(who + ": expected a nonempty array of rows");
  QMat m(static_cast<int>(j.size()), static_cast<int>(j[0].size()));
  for (size_t i = 0; i < j.size(); ++i) {
    QVec row = vec_of(j[i], who + " row " + std::to_string(i));
    if (static_cast<int>(row.size()) != m.cols) fail(who + ": ragged rows");
    for (int k = 0; k < m.cols; ++k) m.at(static_cast<int>(i), k) = row[k];
  }
  return m;
}

}  // namespace

PcfStructure parse_structure(const json& j) {
  PcfStructure s;
  s.name = j.value("name", "custom");
  s.dim = field(j, "dim", "structure").get<int>();

  const json& maps = field(j, "maps", "structure");
  if (!maps.is_array()) fail("structure: 'maps' must be an array");
  for (size_t i = 0; i < maps.size(); ++i) {
    const std::string who = "structure map " + std::to_string(i);
    AffineMap m;
    m.linear = mat_of(field(maps[i], "linear", who), who + " linear");
    m.offset = vec_of(field(maps[i], "offset", who), who + " offset");
    s.maps.push_back(std::move(m));
  }

  const json& boundary = field(j, "boundary", "structure");
  if (!boundary.is_array()) fail("structure: 'boundary' must be an array");
  for (size_t i = 0; i < boundary.size(); ++i)
    s.boundary.push_back(vec_of(boundary[i], "boundary point " + std::to_string(i)));

  if (j.contains("weights")) {
    SelfSimilarWeights w;
    w.theta = vec_of(j["weights"], "structure weights");
    s.weights = std::move(w);
  }

  std::string err = validate_structure(s);
  if (!err.empty()) fail("structure '" + s.name + "': " + err);
  return s;
}

HarmonicStructure parse_harmonic(const json& j, int boundary_count) {
  HarmonicStructure hs;
  hs.d_matrix = mat_of(field(j, "d", "harmonic"), "harmonic D");
  if (hs.d_matrix.rows != boundary_count || hs.d_matrix.cols != boundary_count)
    fail("harmonic D: order must equal the boundary size (" +
         std::to_string(boundary_count) + ")");
  for (const json& x : field(j, "r", "harmonic")) hs.r.push_back(rat_of(x, "harmonic r"));
  for (size_t i = 0; i < hs.r.size(); ++i)
    if (hs.r[i] <= 0 || hs.r[i] >= 1)
      fail("harmonic r[" + std::to_string(i) + "]: must lie in (0,1) (regularity)");
  ValidityReport rep = validate_harmonic_structure_matrix(hs.d_matrix);
  if (!rep.valid()) fail("harmonic D: " + rep.detail);
  return hs;
}

CarpetGenerator parse_carpet(const json& j) {
  CarpetGenerator g;
  g.name = j.value("name", "custom");
  g.dim = field(j, "dim", "carpet").get<int>();
  g.l = field(j, "l", "carpet").get<int>();
  if (g.dim < 2) fail("carpet '" + g.name + "': dim must be >= 2");
  if (g.l < 3) fail("carpet '" + g.name + "': l must be >= 3");
  for (const json& c : field(j, "cells", "carpet")) {
    std::vector<int> cell = c.get<std::vector<int>>();
    if (static_cast<int>(cell.size()) != g.dim)
      fail("carpet '" + g.name + "': cell arity != dim");
    for (int v : cell)
      if (v < 0 || v >= g.l) fail("carpet '" + g.name + "': cell coordinate out of [0,l)");
    g.cells.push_back(std::move(cell));
  }
  std::sort(g.cells.begin(), g.cells.end());
  for (size_t i = 1; i < g.cells.size(); ++i)
    if (g.cells[i] == g.cells[i - 1]) fail("carpet '" + g.name + "': duplicate cell");
  if (g.cells.size() < 2) fail("carpet '" + g.name + "': need at least 2 cells");
  return g;
}

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  if (j.contains("structure")) {
    cfg.structure = parse_structure(j["structure"]);
    if (j.contains("harmonic"))
      cfg.harmonic = parse_harmonic(j["harmonic"], cfg.structure->boundary_count());
  } else if (j.contains("harmonic")) {
    fail("config: 'harmonic' block requires a 'structure' block");
  }
  if (j.contains("carpet")) cfg.carpet = parse_carpet(j["carpet"]);
  if (!cfg.structure && !cfg.carpet)
    fail("config: need a 'structure' or 'carpet' block");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

namespace {
json vec_json(const QVec& v) {
  json a = json::array();
  for (const Rat& x : v) a.push_back(rat_str(x));
  return a;
}
json mat_json(const QMat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(rat_str(m.at(i, j)));
    rows.push_back(row);
  }
  return rows;
}
}  // namespace

json structure_json(const PcfStructure& s) {
  json j;
  j["name"] = s.name;
  j["dim"] = s.dim;
  j["maps"] = json::array();
  for (const AffineMap& m : s.maps)
    j["maps"].push_back({{"linear", mat_json(m.linear)}, {"offset", vec_json(m.offset)}});
  j["boundary"] = json::array();
  for (const QVec& p : s.boundary) j["boundary"].push_back(vec_json(p));
  if (s.weights) j["weights"] = vec_json(s.weights->theta);
  return j;
}

json harmonic_json(const HarmonicStructure& h) {
  json j;
  j["d"] = mat_json(h.d_matrix);
  json r = json::array();
  for (const Rat& x : h.r) r.push_back(rat_str(x));
  j["r"] = r;
  return j;
}

json carpet_json(const CarpetGenerator& g) {
  json j;
  j["name"] = g.name;
  j["dim"] = g.dim;
  j["l"] = g.l;
  j["cells"] = g.cells;
  return j;
}

}  // namespace fractal
