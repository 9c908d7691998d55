#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "fractal/config.hpp"
#include "fractal/io.hpp"
#include "fractal/presets.hpp"

using namespace fractal;
using nlohmann::json;

TEST_CASE("structure and harmonic blocks round-trip through their loaders") {
  for (const char* name : {"sg2", "sg3"}) {
    PcfPreset p = pcf_preset(name);
    json j;
    j["structure"] = structure_json(p.structure);
    j["harmonic"] = harmonic_json(p.harmonic);
    RunConfig cfg = parse_config(j);
    REQUIRE(cfg.structure.has_value());
    REQUIRE(cfg.harmonic.has_value());
    CHECK(cfg.structure->boundary == p.structure.boundary);
    CHECK(cfg.structure->dim == p.structure.dim);
    REQUIRE(cfg.structure->maps.size() == p.structure.maps.size());
    for (size_t i = 0; i < p.structure.maps.size(); ++i) {
      CHECK(cfg.structure->maps[i].linear == p.structure.maps[i].linear);
      CHECK(cfg.structure->maps[i].offset == p.structure.maps[i].offset);
    }
    CHECK(cfg.harmonic->d_matrix == p.harmonic.d_matrix);
    CHECK(cfg.harmonic->r == p.harmonic.r);
  }
}

TEST_CASE("carpet block round-trips") {
  CarpetGenerator g = carpet_preset("carpet3d");
  json j;
  j["carpet"] = carpet_json(g);
  RunConfig cfg = parse_config(j);
  REQUIRE(cfg.carpet.has_value());
  CHECK(cfg.carpet->cells == g.cells);
  CHECK(cfg.carpet->l == g.l);
  CHECK(cfg.carpet->dim == g.dim);
}

TEST_CASE("loader reports the first violated invariant with the offending entity") {
  PcfPreset p = pcf_preset("sg2");
  json base;
  base["structure"] = structure_json(p.structure);
  base["harmonic"] = harmonic_json(p.harmonic);

  auto expect_throw_with = [&](json j, const std::string& needle) {
    try {
      parse_config(j);
      FAIL_CHECK("expected a validation error mentioning '" << needle << "'");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  json j = base;
  j["harmonic"]["r"][0] = "7/5";  // out of (0,1)
  expect_throw_with(j, "r[0]");

  j = base;
  j["harmonic"]["d"][0][0] = "2";  // destroys nonpositive-definiteness
  expect_throw_with(j, "harmonic D");

  j = base;
  j["structure"]["maps"][0].erase("offset");
  expect_throw_with(j, "offset");

  j = base;
  j["structure"]["boundary"][0][0] = "1/0";
  expect_throw_with(j, "boundary point 0");

  j = base;
  j.erase("structure");
  expect_throw_with(j, "structure");

  json c;
  c["carpet"] = carpet_json(carpet_preset("carpet2d"));
  c["carpet"]["cells"].push_back({4, 4});  // out of [0, l)
  expect_throw_with(c, "out of [0,l)");
}

TEST_CASE("config files load from disk and reject malformed JSON") {
  const std::string path = "test_config_tmp.json";
  {
    json j;
    j["structure"] = structure_json(pcf_preset("sg2").structure);
    j["harmonic"] = harmonic_json(pcf_preset("sg2").harmonic);
    std::ofstream out(path);
    out << j.dump(2);
  }
  RunConfig cfg = load_config(path);
  CHECK(cfg.structure.has_value());
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config(path), std::invalid_argument);
  CHECK_THROWS_AS(load_config("no/such/file.json"), std::invalid_argument);
  std::remove(path.c_str());
}

TEST_CASE("CSV formatting round-trips, including quoting") {
  CsvTable t;
  t.header = {"word", "value", "note"};
  t.rows = {{"012", "2/5", "plain"},
            {"0", "-1/3", "has,comma"},
            {"-", "0", "has \"quotes\""},
            {"1", "7", "line\nbreak"}};
  CsvTable back = csv_parse(csv_format(t));
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("atomic writers leave the final file and no temp behind") {
  const std::string path = "test_io_tmp.csv";
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{"1", "2"}};
  write_csv(path, t);
  CsvTable back = read_csv(path);
  CHECK(back.rows == t.rows);
  std::ifstream tmp(path + ".tmp");
  CHECK_FALSE(tmp.good());
  std::remove(path.c_str());
}

TEST_CASE("plot data and manifests") {
  CHECK_THROWS(write_plot_data("x.dat", {1.0}, {}));
  const std::string path = "test_manifest_tmp.json";
  RunManifest m;
  m.version = "0.0.0";
  m.subcommand = "test";
  m.input_hash = fnv1a("abc");
  m.invariants = json{{"ok", true}};
  write_manifest(path, m);
  std::ifstream in(path);
  json j;
  in >> j;
  CHECK(j["subcommand"] == "test");
  CHECK(j["input_hash"].get<uint64_t>() == fnv1a("abc"));
  std::remove(path.c_str());
}

TEST_CASE("fnv1a matches the published test vectors") {
  CHECK(fnv1a("") == 14695981039346656037ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("preset registries reject unknown names") {
  CHECK_THROWS(pcf_preset("sg9"));
  CHECK_THROWS(carpet_preset("sg2"));
  CHECK(pcf_preset_names().size() >= 2);
  CHECK(carpet_preset_names().size() >= 2);
}
