#include "fractal/presets.hpp"

#include <stdexcept>

namespace fractal {
namespace {

QMat triangle_laplacian() {
  QMat d(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d.at(i, j) = i == j ? Rat(-2) : Rat(1);
  return d;
}

AffineMap scaled_shift(const Rat& scale, const QVec& shift) {
  AffineMap m;
  const int dim = static_cast<int>(shift.size());
  m.linear = QMat(dim, dim);
  for (int i = 0; i < dim; ++i) m.linear.at(i, i) = scale;
  m.offset = shift;
  return m;
}

// Right-triangle model of the gasket family: corners (0,0), (1,0), (0,1).
// The geometry is combinatorial; rational corners keep gluing exact.
PcfStructure gasket_structure(int subdivision) {
  PcfStructure s;
  s.dim = 2;
  s.boundary = {{Rat(0), Rat(0)}, {Rat(1), Rat(0)}, {Rat(0), Rat(1)}};
  const Rat h(1, subdivision);
  // upward sub-triangles, bottom row first; map order fixes word semantics
  std::vector<std::pair<int, int>> offsets;
  for (int y = 0; y < subdivision; ++y)
    for (int x = 0; x + y < subdivision; ++x) offsets.emplace_back(x, y);
  for (auto [x, y] : offsets) {
    // two-argument mpq construction does not canonicalize; repair before use
    Rat ox(x, subdivision), oy(y, subdivision);
    ox.canonicalize();
    oy.canonicalize();
    s.maps.push_back(scaled_shift(h, {ox, oy}));
  }
  s.weights = SelfSimilarWeights{std::vector<Rat>(s.maps.size(),
                                                  Rat(1, (long)s.maps.size()))};
  return s;
}

}  // namespace

PcfPreset pcf_preset(const std::string& name) {
  if (name == "sg2") {
    PcfPreset p;
    p.structure = gasket_structure(2);
    p.structure.name = "sg2";
    p.harmonic = {triangle_laplacian(), std::vector<Rat>(3, Rat(3, 5))};
    return p;
  }
  if (name == "sg3") {
    PcfPreset p;
    p.structure = gasket_structure(3);
    p.structure.name = "sg3";
    p.harmonic = {triangle_laplacian(), std::vector<Rat>(6, Rat(7, 15))};
    return p;
  }
  throw std::invalid_argument("unknown p.c.f. preset: " + name);
}

CarpetGenerator carpet_preset(const std::string& name) {
  CarpetGenerator g;
  g.name = name;
  if (name == "carpet2d") {
    g.dim = 2;
    g.l = 3;
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y)
        if (!(x == 1 && y == 1)) g.cells.push_back({x, y});
    return g;
  }
  if (name == "carpet3d") {
    g.dim = 3;
    g.l = 3;
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y)
        for (int z = 0; z < 3; ++z) {
          int ones = (x == 1) + (y == 1) + (z == 1);
          if (ones <= 1) g.cells.push_back({x, y, z});
        }
    return g;
  }
  throw std::invalid_argument("unknown carpet preset: " + name);
}

std::vector<std::string> pcf_preset_names() { return {"sg2", "sg3"}; }
std::vector<std::string> carpet_preset_names() { return {"carpet2d", "carpet3d"}; }

}  // namespace fractal
