#include <cstdlib>
#include <chrono>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "fractal/config.hpp"
#include "fractal/dimension_lab.hpp"
#include "fractal/energy_measures.hpp"
#include "fractal/io.hpp"
#include "fractal/presets.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using namespace fractal;
using nlohmann::json;

struct Shared {
  std::string preset;
  std::string config_path;
  std::string out_dir = ".";
};

void add_shared(CLI::App* cmd, Shared& sh, bool carpet = false) {
  cmd->add_option("--preset", sh.preset,
                  carpet ? "carpet preset (carpet2d, carpet3d)" : "p.c.f. preset (sg2, sg3)");
  cmd->add_option("--config", sh.config_path, "config file (JSON)");
  cmd->add_option("--out", sh.out_dir, "output directory")->capture_default_str();
}

std::string out_path(const Shared& sh, const std::string& name) {
  return sh.out_dir + "/" + name;
}

// Model + the canonical JSON of its inputs (hashed into the manifest).
struct LoadedModel {
  PcfModel model;
  json source;
};

LoadedModel load_model(const Shared& sh) {
  if (!sh.preset.empty()) {
    PcfPreset p = pcf_preset(sh.preset);
    json src;
    src["structure"] = structure_json(p.structure);
    src["harmonic"] = harmonic_json(p.harmonic);
    return {PcfModel(std::move(p.structure), std::move(p.harmonic)), std::move(src)};
  }
  if (sh.config_path.empty())
    throw std::invalid_argument("need --preset or --config");
  RunConfig cfg = load_config(sh.config_path);
  if (!cfg.structure) throw std::invalid_argument("config has no 'structure' block");
  if (!cfg.harmonic) throw std::invalid_argument("config has no 'harmonic' block");
  json src;
  src["structure"] = structure_json(*cfg.structure);
  src["harmonic"] = harmonic_json(*cfg.harmonic);
  return {PcfModel(std::move(*cfg.structure), std::move(*cfg.harmonic)), std::move(src)};
}

CarpetGenerator load_carpet(const Shared& sh) {
  if (!sh.preset.empty()) return carpet_preset(sh.preset);
  if (sh.config_path.empty())
    throw std::invalid_argument("need --preset or --config");
  RunConfig cfg = load_config(sh.config_path);
  if (!cfg.carpet) throw std::invalid_argument("config has no 'carpet' block");
  return *cfg.carpet;
}

QVec parse_vector(const std::string& text) {
  QVec v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(parse_rat(item));
  if (v.empty()) throw std::invalid_argument("empty vector literal");
  return v;
}

std::vector<QVec> parse_basis(const std::string& text, int n0) {
  std::vector<QVec> basis;
  if (text.empty()) {
    // default: the first n0-1 boundary unit vectors, a harmonic basis mod constants
    for (int i = 0; i + 1 < n0; ++i) {
      QVec e(n0, Rat(0));
      e[i] = 1;
      basis.push_back(std::move(e));
    }
    return basis;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';'))
    if (!item.empty()) basis.push_back(parse_vector(item));
  for (const QVec& b : basis)
    if (static_cast<int>(b.size()) != n0)
      throw std::invalid_argument("basis vector size != boundary size");
  if (basis.empty()) throw std::invalid_argument("empty basis");
  return basis;
}

std::vector<PiecewiseHarmonicFunction> harmonic_basis(const PcfModel& model,
                                                      const std::vector<QVec>& vecs) {
  std::vector<PiecewiseHarmonicFunction> fs;
  for (const QVec& v : vecs) fs.push_back(model.harmonic_extension(v, 0));
  return fs;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw std::invalid_argument("empty level list");
  return out;
}

std::string dbl_str(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void emit_manifest(const Shared& sh, const std::string& subcommand, const json& source,
                   const json& invariants,
                   std::chrono::steady_clock::time_point start) {
  RunManifest m;
  m.version = kVersion;
  m.subcommand = subcommand;
  m.input_hash = fnv1a(source.dump());
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.invariants = invariants;
  write_manifest(out_path(sh, "manifest.json"), m);
}

int run(int argc, char** argv) {
  CLI::App app{"martingale-dimension toolkit for self-similar fractals"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

#ifdef _OPENMP
  if (const char* t = std::getenv("FRACTOOL_THREADS")) {
    int n = std::atoi(t);
    if (n > 0) omp_set_num_threads(n);
  }
#endif

  // ---- verify-hs ----
  Shared vh;
  CLI::App* cmd_vh = app.add_subcommand("verify-hs", "check the harmonic-structure fixed point");
  add_shared(cmd_vh, vh);

  // ---- extend ----
  Shared ex;
  std::string ex_boundary = "1,0,0";
  int ex_level = 1;
  CLI::App* cmd_ex = app.add_subcommand("extend", "harmonic extension of boundary values");
  add_shared(cmd_ex, ex);
  cmd_ex->add_option("--boundary", ex_boundary, "boundary values, comma-separated rationals")
      ->capture_default_str();
  cmd_ex->add_option("--level", ex_level, "target level")->capture_default_str();

  // ---- energy-table ----
  Shared et;
  std::string et_basis;
  int et_level = 2;
  CLI::App* cmd_et = app.add_subcommand("energy-table", "cell energy measures of a basis");
  add_shared(cmd_et, et);
  cmd_et->add_option("--basis", et_basis, "boundary vectors, ';'-separated");
  cmd_et->add_option("--level", et_level, "cell level")->capture_default_str();

  // ---- phi-field ----
  Shared pf;
  std::string pf_basis;
  int pf_level = 2;
  CLI::App* cmd_pf = app.add_subcommand("phi-field", "normalized density matrices per cell");
  add_shared(cmd_pf, pf);
  cmd_pf->add_option("--basis", pf_basis, "boundary vectors, ';'-separated");
  cmd_pf->add_option("--level", pf_level, "cell level")->capture_default_str();

  // ---- rank-spectrum ----
  Shared rs;
  std::string rs_basis, rs_levels = "2,4";
  double rs_eps = 0.01;
  CLI::App* cmd_rs = app.add_subcommand("rank-spectrum", "eps-rank statistics per level");
  add_shared(cmd_rs, rs);
  cmd_rs->add_option("--basis", rs_basis, "boundary vectors, ';'-separated");
  cmd_rs->add_option("--levels", rs_levels, "comma-separated levels")->capture_default_str();
  cmd_rs->add_option("--eps", rs_eps, "rank threshold in (0,1)")->capture_default_str();

  // ---- blowup ----
  Shared bu;
  std::string bu_basis;
  double bu_a = 0.01;
  int bu_level = 4;
  CLI::App* cmd_bu = app.add_subcommand("blowup", "greedy descent toward a target density matrix");
  add_shared(cmd_bu, bu);
  cmd_bu->add_option("--basis", bu_basis, "boundary vectors, ';'-separated");
  cmd_bu->add_option("--a", bu_a, "determinant threshold")->capture_default_str();
  cmd_bu->add_option("--level", bu_level, "maximum level")->capture_default_str();

  // ---- index-report ----
  Shared ir;
  std::string ir_basis, ir_levels = "2,4", ir_eps = "0.01";
  CLI::App* cmd_ir = app.add_subcommand("index-report", "index (martingale dimension) evidence");
  add_shared(cmd_ir, ir);
  cmd_ir->add_option("--basis", ir_basis, "boundary vectors, ';'-separated");
  cmd_ir->add_option("--levels", ir_levels, "comma-separated levels")->capture_default_str();
  cmd_ir->add_option("--eps", ir_eps, "comma-separated thresholds")->capture_default_str();

  // ---- carpet ----
  CLI::App* cmd_carpet = app.add_subcommand("carpet", "generalized Sierpinski carpet tools");
  cmd_carpet->require_subcommand(1);

  Shared cc;
  CLI::App* cmd_cc = cmd_carpet->add_subcommand("check", "generator condition checks");
  add_shared(cmd_cc, cc, true);

  Shared cr;
  std::string cr_levels = "1..4";
  double cr_tol = 1e-10;
  CLI::App* cmd_cr = cmd_carpet->add_subcommand("resistance", "pre-carpet resistance scaling");
  add_shared(cmd_cr, cr, true);
  cmd_cr->add_option("--levels", cr_levels, "level range a..b")->capture_default_str();
  cmd_cr->add_option("--tol", cr_tol, "CG relative tolerance")->capture_default_str();

  Shared cd;
  std::string cd_levels = "1..4";
  double cd_tol = 1e-10;
  CLI::App* cmd_cd = cmd_carpet->add_subcommand("dims", "dimension report from resistance scaling");
  add_shared(cmd_cd, cd, true);
  cmd_cd->add_option("--levels", cd_levels, "level range a..b")->capture_default_str();
  cmd_cd->add_option("--tol", cd_tol, "CG relative tolerance")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  const auto start = std::chrono::steady_clock::now();

  auto parse_range = [](const std::string& s) {
    auto pos = s.find("..");
    if (pos == std::string::npos) throw std::invalid_argument("level range must be a..b");
    return std::pair<int, int>(std::stoi(s.substr(0, pos)), std::stoi(s.substr(pos + 2)));
  };

  if (cmd_vh->parsed()) {
    LoadedModel lm = load_model(vh);
    VerifyResult res = verify_harmonic_structure(lm.model.structure(), lm.model.harmonic());
    json rep;
    rep["ok"] = res.ok;
    json rows = json::array();
    for (int i = 0; i < res.residual.rows; ++i) {
      json row = json::array();
      for (int j = 0; j < res.residual.cols; ++j) row.push_back(rat_str(res.residual.at(i, j)));
      rows.push_back(row);
    }
    rep["residual"] = rows;
    write_json(out_path(vh, "verify_hs.json"), rep);
    emit_manifest(vh, "verify-hs", lm.source, json{{"fixed_point", res.ok}}, start);
    std::cout << "residual:\n";
    for (int i = 0; i < res.residual.rows; ++i) {
      for (int j = 0; j < res.residual.cols; ++j)
        std::cout << rat_str(res.residual.at(i, j)) << (j + 1 < res.residual.cols ? " " : "\n");
    }
    if (!res.ok) {
      std::cerr << "violated invariant: trace_form(E^(1), V_0) != E^(0)\n";
      return 1;
    }
    return 0;
  }

  if (cmd_ex->parsed()) {
    LoadedModel lm = load_model(ex);
    QVec b = parse_vector(ex_boundary);
    if (static_cast<int>(b.size()) != lm.model.boundary_count())
      throw std::invalid_argument("boundary vector size != boundary size");
    if (ex_level < 0) throw std::invalid_argument("level must be >= 0");
    PiecewiseHarmonicFunction f = lm.model.harmonic_extension(b, ex_level);
    const VertexTable& vt = lm.model.vertex_table(ex_level);
    CsvTable t;
    t.header = {"vertex"};
    for (int k = 0; k < lm.model.structure().dim; ++k) t.header.push_back("x" + std::to_string(k));
    t.header.push_back("value");
    t.header.push_back("value_decimal");
    for (int v = 0; v < vt.num_vertices; ++v) {
      std::vector<std::string> row{std::to_string(v)};
      for (const Rat& c : vt.coords[v]) row.push_back(rat_str(c));
      row.push_back(rat_str(f.values[v]));
      row.push_back(dbl_str(rat_dbl(f.values[v])));
      t.rows.push_back(std::move(row));
    }
    write_csv(out_path(ex, "extend.csv"), t);
    json src = lm.source;
    src["boundary"] = ex_boundary;
    src["level"] = ex_level;
    emit_manifest(ex, "extend", src,
                  json{{"energy", rat_str(lm.model.energy(f))}}, start);
    std::cout << csv_format(t);
    return 0;
  }

  struct BasisRun {
    LoadedModel lm;
    std::vector<PiecewiseHarmonicFunction> fs;
  };
  auto load_basis = [&](const Shared& sh, const std::string& basis_text) {
    LoadedModel lm = load_model(sh);
    std::vector<PiecewiseHarmonicFunction> fs =
        harmonic_basis(lm.model, parse_basis(basis_text, lm.model.boundary_count()));
    return BasisRun{std::move(lm), std::move(fs)};
  };

  if (cmd_et->parsed() || cmd_pf->parsed()) {
    const bool phi_mode = cmd_pf->parsed();
    const Shared& sh = phi_mode ? pf : et;
    const int level = phi_mode ? pf_level : et_level;
    BasisRun br = load_basis(sh, phi_mode ? pf_basis : et_basis);
    LoadedModel& lm = br.lm;
    std::vector<PiecewiseHarmonicFunction>& fs = br.fs;
    if (level < 1) throw std::invalid_argument("level must be >= 1");

    const int d = static_cast<int>(fs.size());
    PhiCellField phi = phi_field(lm.model, fs, level);
    std::vector<Word> words = cells_at_level(lm.model.structure(), level);

    CsvTable t;
    t.header = {"word", "nu", "nu_decimal"};
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        t.header.push_back("nu_" + std::to_string(i) + std::to_string(j));
        t.header.push_back("phi_" + std::to_string(i) + std::to_string(j) + "_decimal");
      }
    for (int i = 0; i < d; ++i) t.header.push_back("lambda" + std::to_string(i + 1));

    for (size_t c = 0; c < words.size(); ++c) {
      std::vector<std::string> row{words[c].str(), rat_str(phi.kusuoka_mass[c]),
                                   dbl_str(rat_dbl(phi.kusuoka_mass[c]))};
      const Rat& mass = phi.kusuoka_mass[c];
      std::vector<double> pm(static_cast<size_t>(d) * d, 0.0);
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
          // nu_{ij}(K_w) recovered from phi * mass (phi stores gram/mass)
          Rat nu_ij = phi.defined[c] ? Rat(phi.matrices[c].at(i, j) * mass) : Rat(0);
          row.push_back(rat_str(nu_ij));
          double p = phi.defined[c] ? rat_dbl(phi.matrices[c].at(i, j)) : 0.0;
          pm[static_cast<size_t>(i) * d + j] = pm[static_cast<size_t>(j) * d + i] = p;
          row.push_back(dbl_str(p));
        }
      std::vector<double> ev = sym_eigenvalues(pm, d);
      for (double v : ev) row.push_back(dbl_str(v));
      t.rows.push_back(std::move(row));
    }
    const std::string file = phi_mode ? "phi_field.csv" : "energy_table.csv";
    write_csv(out_path(sh, file), t);

    Rat total_mass = 0;
    for (const Rat& v : phi.kusuoka_mass) total_mass += v;
    json summary;
    summary["level"] = level;
    summary["d"] = d;
    summary["total_mass"] = rat_str(total_mass);
    bool traces_ok = true;
    for (size_t c = 0; c < words.size(); ++c)
      if (phi.defined[c]) {
        Rat tr = 0;
        for (int i = 0; i < d; ++i) tr += phi.matrices[c].at(i, i);
        if (tr != d) traces_ok = false;
      }
    summary["trace_normalized"] = traces_ok;
    write_json(out_path(sh, phi_mode ? "phi_field.json" : "energy_table.json"), summary);
    json src = lm.source;
    src["level"] = level;
    src["d"] = d;
    emit_manifest(sh, phi_mode ? "phi-field" : "energy-table", src,
                  json{{"trace_normalized", traces_ok}}, start);
    if (!traces_ok) {
      std::cerr << "violated invariant: trace(phi) != d on a positive-mass cell\n";
      return 2;
    }
    return 0;
  }

  if (cmd_rs->parsed()) {
    BasisRun br = load_basis(rs, rs_basis);
    LoadedModel& lm = br.lm;
    std::vector<PiecewiseHarmonicFunction>& fs = br.fs;
    std::vector<int> levels = parse_int_list(rs_levels);

    json summary;
    summary["epsilon"] = rs_eps;
    std::vector<double> xs, ys;
    json per_level = json::array();
    for (int m : levels) {
      if (m < 1) throw std::invalid_argument("levels must be >= 1");
      RankSpectrumReport rep = rank_spectrum(lm.model, fs, m, rs_eps);
      json e;
      e["level"] = m;
      e["max_rank"] = rep.max_rank;
      e["rank_mass"] = rep.rank_mass;
      e["mass_ratio_above_eps"] = rep.mass_ratio_above_eps;
      per_level.push_back(e);
      xs.push_back(m);
      ys.push_back(rep.mass_ratio_above_eps);

      CsvTable t;
      t.header = {"word", "eps_rank"};
      for (int i = 0; i < rep.d; ++i) t.header.push_back("lambda" + std::to_string(i + 1));
      std::vector<Word> words = cells_at_level(lm.model.structure(), m);
      for (size_t c = 0; c < words.size(); ++c) {
        std::vector<std::string> row{words[c].str(), std::to_string(rep.eps_rank[c])};
        if (rep.eps_rank[c] >= 0)
          for (double v : rep.eigenvalues[c]) row.push_back(dbl_str(v));
        else
          for (int i = 0; i < rep.d; ++i) row.push_back("0");
        t.rows.push_back(std::move(row));
      }
      write_csv(out_path(rs, "rank_spectrum_m" + std::to_string(m) + ".csv"), t);
    }
    summary["levels"] = per_level;
    write_json(out_path(rs, "rank_spectrum.json"), summary);
    write_plot_data(out_path(rs, "rank_spectrum.dat"), xs, ys);
    json src = lm.source;
    src["levels"] = levels;
    src["eps"] = rs_eps;
    emit_manifest(rs, "rank-spectrum", src, json::object(), start);
    std::cout << summary.dump(2) << "\n";
    return 0;
  }

  if (cmd_bu->parsed()) {
    BasisRun br = load_basis(bu, bu_basis);
    LoadedModel& lm = br.lm;
    BlowupTrace trace = blowup_search(lm.model, br.fs, bu_a, bu_level);

    CsvTable t;
    t.header = {"word", "det", "dist_to_target", "descend_score"};
    for (const BlowupStep& s : trace.steps)
      t.rows.push_back({s.word.str(), dbl_str(s.det), dbl_str(s.dist_to_target),
                        dbl_str(s.descend_score)});
    write_csv(out_path(bu, "blowup.csv"), t);

    json rep;
    rep["degenerate"] = trace.degenerate;
    rep["failure_depth"] = trace.failure_depth;
    rep["det_threshold"] = trace.det_threshold;
    rep["level_candidate_mass"] = trace.level_candidate_mass;
    rep["target"] = trace.target;
    write_json(out_path(bu, "blowup.json"), rep);
    json src = lm.source;
    src["a"] = bu_a;
    src["level"] = bu_level;
    emit_manifest(bu, "blowup", src, json{{"degenerate", trace.degenerate}}, start);
    std::cout << rep.dump(2) << "\n";
    return 0;
  }

  if (cmd_ir->parsed()) {
    BasisRun br = load_basis(ir, ir_basis);
    LoadedModel& lm = br.lm;
    std::vector<PiecewiseHarmonicFunction>& fs = br.fs;
    std::vector<int> levels = parse_int_list(ir_levels);
    std::vector<double> epsilons;
    {
      std::stringstream ss(ir_eps);
      std::string item;
      while (std::getline(ss, item, ',')) epsilons.push_back(std::stod(item));
    }
    if (epsilons.empty()) throw std::invalid_argument("empty epsilon list");
    for (double e : epsilons)
      if (e <= 0.0 || e >= 1.0) throw std::invalid_argument("epsilons must lie in (0,1)");

    json rep = index_report(lm.model, fs, levels, epsilons);
    write_json(out_path(ir, "index_report.json"), rep);
    // plot data: level vs mass(lambda2/lambda1 > eps) for the first epsilon
    std::vector<double> xs, ys;
    for (const json& lvl : rep["levels"]) {
      xs.push_back(lvl["level"].get<double>());
      ys.push_back(lvl["spectra"][0]["mass_ratio_above_eps"].get<double>());
    }
    write_plot_data(out_path(ir, "index_report.dat"), xs, ys);
    json src = lm.source;
    src["levels"] = levels;
    src["eps"] = epsilons;
    emit_manifest(ir, "index-report", src,
                  json{{"index_estimate", rep["index_estimate"]}}, start);
    std::cout << rep.dump(2) << "\n";
    return 0;
  }

  if (cmd_cc->parsed()) {
    CarpetGenerator g = load_carpet(cc);
    CarpetCheckReport rep = check_carpet(g);
    json j;
    j["name"] = g.name;
    j["symmetry"] = rep.symmetry;
    j["connectedness"] = rep.connectedness;
    j["nondiagonality"] = rep.nondiagonality;
    j["borders"] = rep.borders;
    j["proper"] = rep.proper;
    j["all"] = rep.all();
    write_json(out_path(cc, "carpet_check.json"), j);
    emit_manifest(cc, "carpet check", carpet_json(g), j, start);
    std::cout << j.dump(2) << "\n";
    if (!rep.all()) {
      const char* first = !rep.proper           ? "proper (2 <= M < l^D)"
                          : !rep.symmetry       ? "symmetry"
                          : !rep.connectedness  ? "connectedness"
                          : !rep.nondiagonality ? "nondiagonality"
                                                : "borders";
      std::cerr << "violated invariant: " << first << "\n";
      return 1;
    }
    return 0;
  }

  if (cmd_cr->parsed() || cmd_cd->parsed()) {
    const bool dims_mode = cmd_cd->parsed();
    const Shared& sh = dims_mode ? cd : cr;
    auto [lo, hi] = parse_range(dims_mode ? cd_levels : cr_levels);
    double tol = dims_mode ? cd_tol : cr_tol;
    CarpetGenerator g = load_carpet(sh);
    ResistanceScaling sc = resistance_scaling(g, lo, hi, tol);

    CsvTable t;
    t.header = {"level", "resistance", "rho"};
    for (size_t i = 0; i < sc.levels.size(); ++i)
      t.rows.push_back({std::to_string(sc.levels[i]), dbl_str(sc.resistance[i]),
                        i > 0 ? dbl_str(sc.rho[i - 1]) : std::string()});
    write_csv(out_path(sh, "resistance.csv"), t);
    std::vector<double> xs(sc.levels.begin(), sc.levels.end());
    write_plot_data(out_path(sh, "resistance.dat"), xs, sc.resistance);

    json src = carpet_json(g);
    src["levels"] = {lo, hi};
    if (!dims_mode) {
      emit_manifest(sh, "carpet resistance", src, json{{"r_hat", sc.r_hat}}, start);
      std::cout << csv_format(t);
      return 0;
    }
    DimensionReport rep = dimension_report(g, sc.r_hat);
    json j;
    j["d_h"] = rep.d_h;
    j["d_w"] = rep.d_w;
    j["d_s"] = rep.d_s;
    j["r_hat"] = rep.r_hat;
    j["d_m_bound"] = rep.d_m_bound;
    j["branch"] = rep.branch;
    j["identity_residual"] = rep.identity_residual;
    j["caveat"] = rep.caveat;
    write_json(out_path(sh, "dimension_report.json"), j);
    emit_manifest(sh, "carpet dims", src, json{{"d_m_bound", rep.d_m_bound}}, start);
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
