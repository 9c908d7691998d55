#pragma once

#include <string>
#include <vector>

#include "fractal/carpet.hpp"
#include "fractal/harmonic.hpp"
#include "fractal/structure.hpp"

namespace fractal {

struct PcfPreset {
  PcfStructure structure;
  HarmonicStructure harmonic;
};

// Shipped p.c.f. presets: "sg2" (Sierpinski gasket, r = 3/5) and "sg3"
// (level-3 gasket, r = 7/15), both on the right-triangle rational model
// with the symmetric triangle Laplacian as D.
PcfPreset pcf_preset(const std::string& name);

// Carpet presets: "carpet2d" (3x3 minus center) and "carpet3d" (the
// three-dimensional standard carpet, 20 of 27 cells).
CarpetGenerator carpet_preset(const std::string& name);

std::vector<std::string> pcf_preset_names();
std::vector<std::string> carpet_preset_names();

}  // namespace fractal
