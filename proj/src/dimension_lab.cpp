#include "fractal/dimension_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fractal {
namespace {

std::vector<double> jacobi_eigenvalues(std::vector<double> a, int d, double tol = 1e-12) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) off += a[i * d + j] * a[i * d + j];
    if (off < tol * tol) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        double apq = a[p * d + q];
        if (std::abs(apq) < 1e-300) continue;
        double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < d; ++k) {
          double akp = a[k * d + p], akq = a[k * d + q];
          a[k * d + p] = c * akp - s * akq;
          a[k * d + q] = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          double apk = a[p * d + k], aqk = a[q * d + k];
          a[p * d + k] = c * apk - s * aqk;
          a[q * d + k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(d);
  for (int i = 0; i < d; ++i) ev[i] = a[i * d + i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

double frob_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double det_sym(const std::vector<double>& a, int d) {
  if (d == 1) return a[0];
  if (d == 2) return a[0] * a[3] - a[1] * a[2];
  if (d == 3)
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
  // LU with partial pivoting
  std::vector<double> m = a;
  double det = 1.0;
  for (int c = 0; c < d; ++c) {
    int piv = c;
    for (int i = c + 1; i < d; ++i)
      if (std::abs(m[i * d + c]) > std::abs(m[piv * d + c])) piv = i;
    if (m[piv * d + c] == 0.0) return 0.0;
    if (piv != c) {
      for (int j = 0; j < d; ++j) std::swap(m[piv * d + j], m[c * d + j]);
      det = -det;
    }
    det *= m[c * d + c];
    for (int i = c + 1; i < d; ++i) {
      double f = m[i * d + c] / m[c * d + c];
      for (int j = c; j < d; ++j) m[i * d + j] -= f * m[c * d + j];
    }
  }
  return det;
}

std::vector<double> phi_to_double(const QMat& m) {
  std::vector<double> out(m.a.size());
  for (size_t i = 0; i < m.a.size(); ++i) out[i] = rat_dbl(m.a[i]);
  return out;
}

}  // namespace

std::vector<double> sym_eigenvalues(const std::vector<double>& a, int d) {
  if (d == 1) return {a[0]};
  if (d == 2) {
    double tr = a[0] + a[3];
    double disc = std::sqrt(std::max(0.0, (a[0] - a[3]) * (a[0] - a[3]) + 4.0 * a[1] * a[1]));
    return {(tr + disc) / 2.0, (tr - disc) / 2.0};
  }
  if (d == 3) {
    // trigonometric solution of the characteristic cubic
    double p1 = a[1] * a[1] + a[2] * a[2] + a[5] * a[5];
    double q = (a[0] + a[4] + a[8]) / 3.0;
    double p2 = (a[0] - q) * (a[0] - q) + (a[4] - q) * (a[4] - q) +
                (a[8] - q) * (a[8] - q) + 2.0 * p1;
    if (p2 <= 1e-300) return {q, q, q};
    double p = std::sqrt(p2 / 6.0);
    std::vector<double> b(9);
    for (int i = 0; i < 9; ++i) b[i] = (a[i] - (i % 4 == 0 ? q : 0.0)) / p;
    double r = det_sym(b, 3) / 2.0;
    r = std::clamp(r, -1.0, 1.0);
    double phi = std::acos(r) / 3.0;
    double e1 = q + 2.0 * p * std::cos(phi);
    double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    double e2 = 3.0 * q - e1 - e3;
    std::vector<double> ev{e1, e2, e3};
    std::sort(ev.rbegin(), ev.rend());
    return ev;
  }
  return jacobi_eigenvalues(a, d);
}

RankSpectrumReport rank_spectrum_from_phi(const PhiCellField& phi, double epsilon) {
  if (epsilon <= 0.0 || epsilon >= 1.0)
    throw std::invalid_argument("rank_spectrum: epsilon must be in (0,1)");
  RankSpectrumReport rep;
  rep.level = phi.level;
  rep.d = phi.d;
  rep.epsilon = epsilon;
  const size_t cells = phi.matrices.size();
  rep.eigenvalues.resize(cells);
  rep.eps_rank.assign(cells, -1);
  rep.rank_mass.assign(phi.d + 1, 0.0);

  double total = 0.0, above = 0.0;
  for (size_t c = 0; c < cells; ++c) total += rat_dbl(phi.kusuoka_mass[c]);
  rep.total_mass = total;

  for (size_t c = 0; c < cells; ++c) {
    if (!phi.defined[c]) continue;
    std::vector<double> ev = sym_eigenvalues(phi_to_double(phi.matrices[c]), phi.d);
    double mass = rat_dbl(phi.kusuoka_mass[c]);
    int rank = 0;
    for (double v : ev)
      if (v > epsilon * ev[0]) ++rank;
    rep.eps_rank[c] = rank;
    rep.max_rank = std::max(rep.max_rank, rank);
    rep.rank_mass[rank] += mass;
    if (phi.d >= 2 && ev[0] > 0.0 && ev[1] / ev[0] > epsilon) above += mass;
    rep.eigenvalues[c] = std::move(ev);
  }
  if (total > 0.0) {
    for (double& v : rep.rank_mass) v /= total;
    rep.mass_ratio_above_eps = above / total;
  }
  return rep;
}

RankSpectrumReport rank_spectrum(const PcfModel& model,
                                 const std::vector<PiecewiseHarmonicFunction>& fs, int m,
                                 double epsilon, bool parallel) {
  return rank_spectrum_from_phi(phi_field(model, fs, m, parallel), epsilon);
}

BlowupTrace blowup_search(const PcfModel& model,
                          const std::vector<PiecewiseHarmonicFunction>& fs,
                          double det_threshold, int max_level,
                          std::vector<double> shrink_schedule, bool parallel) {
  const int d = static_cast<int>(fs.size());
  const int ns = model.symbol_count();
  BlowupTrace trace;
  trace.d = d;
  trace.det_threshold = det_threshold;
  if (max_level < 1) throw std::invalid_argument("blowup_search: max_level < 1");
  if (shrink_schedule.empty())
    for (int lvl = 1; lvl <= max_level; ++lvl) shrink_schedule.push_back(1.0 / (lvl + 1));

  std::vector<PhiCellField> fields(max_level + 1);
  for (int lvl = 1; lvl <= max_level; ++lvl)
    fields[lvl] = phi_field(model, fs, lvl, parallel);

  // nu-mass of the high-determinant set per level
  std::vector<std::vector<double>> dets(max_level + 1);
  for (int lvl = 1; lvl <= max_level; ++lvl) {
    const PhiCellField& f = fields[lvl];
    double total = 0.0, cand = 0.0;
    dets[lvl].assign(f.matrices.size(), 0.0);
    for (size_t c = 0; c < f.matrices.size(); ++c) {
      double mass = rat_dbl(f.kusuoka_mass[c]);
      total += mass;
      if (!f.defined[c]) continue;
      dets[lvl][c] = det_sym(phi_to_double(f.matrices[c]), d);
      if (dets[lvl][c] >= det_threshold) cand += mass;
    }
    trace.level_candidate_mass.push_back(total > 0.0 ? cand / total : 0.0);
    if (trace.failure_depth < 0 && trace.level_candidate_mass.back() == 0.0)
      trace.failure_depth = lvl;
  }
  if (trace.level_candidate_mass[0] == 0.0) {
    trace.degenerate = true;  // nothing invertible even at level 1
    return trace;
  }

  // target L: nu-weighted cluster center of the deepest nonempty candidate
  // set (exact medoid when small, nearest-to-weighted-mean beyond).
  int deepest = max_level;
  while (deepest > 1 && trace.level_candidate_mass[deepest - 1] == 0.0) --deepest;
  {
    const PhiCellField& f = fields[deepest];
    std::vector<size_t> cand;
    for (size_t c = 0; c < f.matrices.size(); ++c)
      if (f.defined[c] && dets[deepest][c] >= det_threshold) cand.push_back(c);
    std::vector<std::vector<double>> mats(cand.size());
    std::vector<double> mass(cand.size());
    for (size_t k = 0; k < cand.size(); ++k) {
      mats[k] = phi_to_double(f.matrices[cand[k]]);
      mass[k] = rat_dbl(f.kusuoka_mass[cand[k]]);
    }
    constexpr size_t kMedoidCap = 4096;
    size_t best = 0;
    if (cand.size() <= kMedoidCap) {
      double best_cost = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < cand.size(); ++i) {
        double cost = 0.0;
        for (size_t j = 0; j < cand.size(); ++j) cost += mass[j] * frob_dist(mats[i], mats[j]);
        if (cost < best_cost) { best_cost = cost; best = i; }
      }
    } else {
      std::vector<double> mean(static_cast<size_t>(d) * d, 0.0);
      double tot = 0.0;
      for (size_t j = 0; j < cand.size(); ++j) {
        tot += mass[j];
        for (size_t e = 0; e < mean.size(); ++e) mean[e] += mass[j] * mats[j][e];
      }
      for (double& v : mean) v /= tot;
      double best_cost = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < cand.size(); ++i) {
        double dist = frob_dist(mats[i], mean);
        if (dist < best_cost) { best_cost = dist; best = i; }
      }
    }
    trace.target = mats[best];
  }

  // greedy descent, lexicographic tie-break; scores come from the deepest field
  const PhiCellField& fine = fields[max_level];
  std::vector<double> fine_dist(fine.matrices.size(), 0.0);
  for (size_t c = 0; c < fine.matrices.size(); ++c)
    if (fine.defined[c]) fine_dist[c] = frob_dist(phi_to_double(fine.matrices[c]), trace.target);

  size_t cur_rank = 0;
  Word cur;
  for (int lvl = 1; lvl <= max_level; ++lvl) {
    const double radius = shrink_schedule[std::min<size_t>(lvl - 1, shrink_schedule.size() - 1)];
    const size_t span = cell_count(max_level - lvl, ns);
    double best_score = -1.0;
    int best_child = 0;
    for (int i = 0; i < ns; ++i) {
      size_t lo = (cur_rank * ns + i) * span;
      double tot = 0.0, in = 0.0;
      for (size_t c = lo; c < lo + span; ++c) {
        double mass = rat_dbl(fine.kusuoka_mass[c]);
        tot += mass;
        if (fine.defined[c] && fine_dist[c] <= radius) in += mass;
      }
      double score = tot > 0.0 ? in / tot : 0.0;
      if (score > best_score) { best_score = score; best_child = i; }
    }
    cur_rank = cur_rank * ns + best_child;
    cur = cur.child(static_cast<uint8_t>(best_child));

    BlowupStep step;
    step.word = cur;
    const PhiCellField& f = fields[lvl];
    step.phi = phi_to_double(f.matrices[cur_rank]);
    step.det = f.defined[cur_rank] ? det_sym(step.phi, d) : 0.0;
    step.dist_to_target = frob_dist(step.phi, trace.target);
    step.descend_score = best_score;
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

Recombination renormalize_pair(const std::vector<double>& l_matrix, int d) {
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (std::abs(l_matrix[i * d + j] - l_matrix[j * d + i]) > 1e-12)
        throw std::invalid_argument("renormalize_pair: matrix not symmetric");

  // Jacobi with accumulated rotations; columns of U are eigenvectors.
  std::vector<double> a = l_matrix;
  std::vector<double> u(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) u[i * d + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) off += a[i * d + j] * a[i * d + j];
    if (off < 1e-26) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        double apq = a[p * d + q];
        if (std::abs(apq) < 1e-300) continue;
        double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < d; ++k) {
          double akp = a[k * d + p], akq = a[k * d + q];
          a[k * d + p] = c * akp - s * akq;
          a[k * d + q] = s * akp + c * akq;
          double ukp = u[k * d + p], ukq = u[k * d + q];
          u[k * d + p] = c * ukp - s * ukq;
          u[k * d + q] = s * ukp + c * ukq;
        }
        for (int k = 0; k < d; ++k) {
          double apk = a[p * d + k], aqk = a[q * d + k];
          a[p * d + k] = c * apk - s * aqk;
          a[q * d + k] = s * apk + c * aqk;
        }
      }
  }

  Recombination rec;
  rec.d = d;
  rec.rotation = u;
  rec.lambda.resize(d);
  for (int i = 0; i < d; ++i) {
    rec.lambda[i] = a[i * d + i];
    if (rec.lambda[i] <= 0.0)
      throw std::invalid_argument("renormalize_pair: matrix not positive definite");
  }
  rec.transform.resize(static_cast<size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      rec.transform[i * d + j] = u[i * d + j] / std::sqrt(rec.lambda[j]);
  return rec;
}

std::vector<std::vector<double>> transform_phi_field(const PhiCellField& phi,
                                                     const Recombination& rec) {
  const int d = rec.d;
  std::vector<std::vector<double>> out(phi.matrices.size());
  for (size_t c = 0; c < phi.matrices.size(); ++c) {
    out[c].assign(static_cast<size_t>(d) * d, 0.0);
    if (!phi.defined[c]) continue;
    std::vector<double> g = phi_to_double(phi.matrices[c]);
    std::vector<double> tg(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += rec.transform[k * d + i] * g[k * d + j];
        tg[i * d + j] = s;
      }
    std::vector<double>& res = out[c];
    double trace = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += tg[i * d + k] * rec.transform[k * d + j];
        res[i * d + j] = s;
        if (i == j) trace += s;
      }
    if (trace > 0.0)
      for (double& v : res) v *= d / trace;
  }
  return out;
}

nlohmann::json index_report(const PcfModel& model,
                            const std::vector<PiecewiseHarmonicFunction>& basis,
                            const std::vector<int>& levels,
                            const std::vector<double>& epsilons, bool parallel) {
  nlohmann::json rep;
  rep["basis_size"] = basis.size();
  rep["note"] =
      "cell-resolution estimate of the index (martingale dimension); "
      "rank statistics at finite level are evidence, not a proof";

  bool all_zero = true;
  for (const auto& f : basis)
    if (model.energy(f) != 0) all_zero = false;
  rep["zero_form"] = all_zero;
  if (all_zero) {
    rep["index_estimate"] = 0;
    rep["levels"] = nlohmann::json::array();
    return rep;
  }

  nlohmann::json out_levels = nlohmann::json::array();
  int estimate = 0;
  int deepest = *std::max_element(levels.begin(), levels.end());
  for (int m : levels) {
    PhiCellField phi = phi_field(model, basis, m, parallel);
    nlohmann::json lvl;
    lvl["level"] = m;
    for (double eps : epsilons) {
      RankSpectrumReport r = rank_spectrum_from_phi(phi, eps);
      nlohmann::json e;
      e["epsilon"] = eps;
      e["max_eps_rank"] = r.max_rank;
      e["rank_mass"] = r.rank_mass;
      e["mass_ratio_above_eps"] = r.mass_ratio_above_eps;
      lvl["spectra"].push_back(e);
      if (m == deepest) {
        // majority rank at the deepest level: smallest k carrying at least
        // half the nu-mass; the max over epsilons is the reported estimate
        double cum = 0.0;
        int k = 0;
        for (; k < r.d; ++k) {
          cum += r.rank_mass[k];
          if (cum >= 0.5) break;
        }
        estimate = std::max(estimate, k);
      }
    }
    out_levels.push_back(lvl);
  }
  rep["levels"] = out_levels;
  rep["index_estimate"] = estimate;
  return rep;
}

}  // namespace fractal
