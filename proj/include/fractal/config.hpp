#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fractal/carpet.hpp"
#include "fractal/harmonic.hpp"
#include "fractal/structure.hpp"

#include "json.hpp"

namespace fractal {

// Parsed run configuration. A config file may carry a p.c.f. structure
// with its harmonic block, a carpet generator, or both; presets fill the
// same slots. Loaders throw std::invalid_argument naming the first
// violated invariant and the offending entity.
struct RunConfig {
  std::optional<PcfStructure> structure;
  std::optional<HarmonicStructure> harmonic;
  std::optional<CarpetGenerator> carpet;
};

PcfStructure parse_structure(const nlohmann::json& j);
HarmonicStructure parse_harmonic(const nlohmann::json& j, int boundary_count);
CarpetGenerator parse_carpet(const nlohmann::json& j);

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Serializers; load(serialize(x)) round-trips exactly.
nlohmann::json structure_json(const PcfStructure& s);
nlohmann::json harmonic_json(const HarmonicStructure& h);
nlohmann::json carpet_json(const CarpetGenerator& g);

}  // namespace fractal
