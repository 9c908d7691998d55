// Benchmark: parallel kernels against their serial reference
// implementations. Not a correctness test (the unit tests cover bit-exact
// agreement); this reports wall time side by side.
#include <chrono>
#include <cstdio>
#include <random>

#include "fractal/carpet.hpp"
#include "fractal/kernels.hpp"
#include "fractal/presets.hpp"

using namespace fractal;

namespace {

using clock_type = std::chrono::steady_clock;

template <typename F>
double timed(F&& fn) {
  auto t0 = clock_type::now();
  fn();
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

}  // namespace

int main() {
  std::mt19937 rng(42);
  auto rnd = [&rng]() {
    Rat q(static_cast<int>(rng() % 2001) - 1000, static_cast<int>(1 + rng() % 50));
    q.canonicalize();
    return q;
  };

  // the gram reference is the exact-mpq serial path, so its gap includes the
  // integer fast path as well as threading; the CG rows isolate threading
  std::printf("%-44s %10s %10s %8s\n", "workload", "ref[s]", "kernel[s]", "speedup");

  for (const char* name : {"sg2", "sg3"}) {
    auto p = pcf_preset(name);
    PcfModel model(p.structure, p.harmonic);
    std::vector<PiecewiseHarmonicFunction> fs;
    for (int i = 0; i < 3; ++i) {
      QVec b(3);
      for (Rat& x : b) x = rnd();
      fs.push_back(model.harmonic_extension(b, 0));
    }
    const int m = std::string(name) == "sg2" ? 8 : 6;
    double ts = timed([&] { gram_field_reference(model, fs, m); });
    double tp = timed([&] { gram_field(model, fs, m); });
    std::printf("%s gram field, d=3, level %d%*s %10.3f %10.3f %7.2fx\n", name, m,
                static_cast<int>(20 - std::string(name).size()), "", ts, tp, ts / tp);
  }

  {
    CarpetGenerator g = carpet_preset("carpet2d");
    PreCarpetGraph graph = build_pre_carpet(g, 6);
    double ts = timed([&] {
      effective_resistance(graph, graph.face_low, graph.face_high, 1e-10, 200000, false);
    });
    double tp = timed([&] {
      effective_resistance(graph, graph.face_low, graph.face_high, 1e-10, 200000, true);
    });
    std::printf("%-44s %10.3f %10.3f %7.2fx\n", "carpet2d resistance CG, level 6", ts, tp,
                ts / tp);
  }
  return 0;
}
