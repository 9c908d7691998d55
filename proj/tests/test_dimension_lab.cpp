#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "fractal/dimension_lab.hpp"
#include "fractal/presets.hpp"

using namespace fractal;

namespace {

std::vector<PiecewiseHarmonicFunction> unit_basis(const PcfModel& model) {
  std::vector<PiecewiseHarmonicFunction> fs;
  for (int i = 0; i + 1 < model.boundary_count(); ++i) {
    QVec e(model.boundary_count(), Rat(0));
    e[i] = 1;
    fs.push_back(model.harmonic_extension(e, 0));
  }
  return fs;
}

std::vector<double> random_spd(int d, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(static_cast<size_t>(d) * d);
  for (double& v : a) v = u(rng);
  std::vector<double> l(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) l[i * d + j] += a[k * d + i] * a[k * d + j];
      if (i == j) l[i * d + j] += 0.5;  // keep it away from singular
    }
  return l;
}

}  // namespace

TEST_CASE("symmetric eigenvalues match hand values for d = 1, 2, 3 and Jacobi for d = 4") {
  CHECK(sym_eigenvalues({7.0}, 1)[0] == doctest::Approx(7.0));

  auto e2 = sym_eigenvalues({2, 1, 1, 2}, 2);
  CHECK(e2[0] == doctest::Approx(3.0));
  CHECK(e2[1] == doctest::Approx(1.0));

  // diag(5, 2, -1) conjugated stays at those eigenvalues; use a plain diagonal
  auto e3 = sym_eigenvalues({5, 0, 0, 0, 2, 0, 0, 0, -1}, 3);
  CHECK(e3[0] == doctest::Approx(5.0));
  CHECK(e3[1] == doctest::Approx(2.0));
  CHECK(e3[2] == doctest::Approx(-1.0));

  // full 3x3: [[2,1,0],[1,2,1],[0,1,2]] has eigenvalues 2, 2 +- sqrt(2)
  auto f3 = sym_eigenvalues({2, 1, 0, 1, 2, 1, 0, 1, 2}, 3);
  CHECK(f3[0] == doctest::Approx(2.0 + std::sqrt(2.0)));
  CHECK(f3[1] == doctest::Approx(2.0));
  CHECK(f3[2] == doctest::Approx(2.0 - std::sqrt(2.0)));

  // 4x4 checked against the invariants trace and sum of squares
  std::mt19937 rng(31);
  std::vector<double> l = random_spd(4, rng);
  auto e4 = sym_eigenvalues(l, 4);
  double tr = 0, fr = 0, etr = 0, efr = 0;
  for (int i = 0; i < 4; ++i) {
    tr += l[i * 4 + i];
    etr += e4[i];
    efr += e4[i] * e4[i];
    for (int j = 0; j < 4; ++j) fr += l[i * 4 + j] * l[i * 4 + j];
  }
  CHECK(etr == doctest::Approx(tr).epsilon(1e-10));
  CHECK(efr == doctest::Approx(fr).epsilon(1e-10));
  for (double v : e4) CHECK(v > 0.0);
}

TEST_CASE("rank spectrum on the gasket: rank-2 mass decreases with level") {
  auto p = pcf_preset("sg2");
  PcfModel model(p.structure, p.harmonic);
  auto fs = unit_basis(model);
  double last = 1.0;
  for (int m : {2, 4, 6}) {
    RankSpectrumReport rep = rank_spectrum(model, fs, m, 0.01);
    CHECK(rep.total_mass > 0.0);
    CHECK(rep.max_rank == 2);
    CHECK(rep.mass_ratio_above_eps < last);
    // the histogram is a probability vector
    double sum = 0.0;
    for (double v : rep.rank_mass) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    last = rep.mass_ratio_above_eps;
  }
  CHECK_THROWS(rank_spectrum(model, fs, 2, 0.0));
  CHECK_THROWS(rank_spectrum(model, fs, 2, 1.0));
}

TEST_CASE("renormalize_pair turns a constant phi field into the identity") {
  std::mt19937 rng(37);
  for (int d : {2, 3}) {
    std::vector<double> l = random_spd(d, rng);
    Recombination rec = renormalize_pair(l, d);

    // synthetic field: every cell carries L, unit mass
    PhiCellField phi;
    phi.level = 1;
    phi.d = d;
    const int cells = 4;
    phi.defined.assign(cells, 1);
    phi.kusuoka_mass.assign(cells, Rat(1, cells));
    QMat lm(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        // nearest rational to keep the field exactly constant
        lm.at(i, j) = Rat(static_cast<long>(std::llround(l[i * d + j] * (1 << 20))),
                          1 << 20);
        lm.at(i, j).canonicalize();
      }
    phi.matrices.assign(cells, lm);

    auto out = transform_phi_field(phi, rec);
    for (const auto& g : out)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          CHECK(std::abs(g[i * d + j] - (i == j ? 1.0 : 0.0)) < 1e-5);
    // with the exact L (not the rational rounding) the residual is ~1e-12:
    // apply the transform by hand
    std::vector<double> tg(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            s += rec.transform[a * d + i] * l[a * d + b] * rec.transform[b * d + j];
        tg[i * d + j] = s;
      }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        CHECK(std::abs(tg[i * d + j] - (i == j ? 1.0 : 0.0)) < 1e-12);
  }

  CHECK_THROWS(renormalize_pair({1.0, 2.0, 2.0, 1.0}, 2));   // indefinite
  CHECK_THROWS(renormalize_pair({1.0, 2.0, 3.0, 4.0}, 2));   // not symmetric
}

TEST_CASE("blowup search descends a nested word path toward an invertible target") {
  auto p = pcf_preset("sg2");
  PcfModel model(p.structure, p.harmonic);
  auto fs = unit_basis(model);
  BlowupTrace trace = blowup_search(model, fs, 1e-6, 4);
  CHECK_FALSE(trace.degenerate);
  CHECK(trace.d == 2);
  CHECK(trace.steps.size() == 4);
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    CHECK(trace.steps[i].word.level() == static_cast<int>(i) + 1);
    CHECK(trace.steps[i].descend_score >= 0.0);
    CHECK(trace.steps[i].descend_score <= 1.0);
    if (i > 0) {
      // words nest: each step extends the previous one
      const auto& a = trace.steps[i - 1].word.symbols;
      const auto& b = trace.steps[i].word.symbols;
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
  CHECK(trace.level_candidate_mass.size() == 4);
  for (double m : trace.level_candidate_mass) CHECK(m > 0.0);

  // an impossible determinant threshold reports degeneracy honestly
  BlowupTrace dead = blowup_search(model, fs, 1e9, 2);
  CHECK(dead.degenerate);
}

TEST_CASE("index report estimates 1 for the gasket pair (Thm. 4.4 pattern)") {
  auto p = pcf_preset("sg2");
  PcfModel model(p.structure, p.harmonic);
  auto fs = unit_basis(model);
  nlohmann::json rep = index_report(model, fs, {2, 4, 6}, {0.05, 0.01});
  CHECK(rep["index_estimate"].get<int>() == 1);
  CHECK(rep["zero_form"].get<bool>() == false);

  // degenerate basis of constants: index 0
  auto c = model.harmonic_extension({Rat(2), Rat(2), Rat(2)}, 0);
  nlohmann::json zero = index_report(model, {c, c}, {2}, {0.01});
  CHECK(zero["index_estimate"].get<int>() == 0);
  CHECK(zero["zero_form"].get<bool>() == true);
}
