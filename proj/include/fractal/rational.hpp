#pragma once

#include <gmpxx.h>

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace fractal {

// All p.c.f. computations run on exact rationals; floating point is
// confined to eigenvalue extraction and the carpet solvers.
using Rat = mpq_class;
using Int = mpz_class;

inline Rat parse_rat(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t.empty()) throw std::invalid_argument("empty rational literal");
  Rat q;
  if (q.set_str(t, 10) != 0)
    throw std::invalid_argument("bad rational literal: '" + text + "'");
  // check before canonicalize(): GMP divides by the denominator there
  if (q.get_den() == 0) throw std::invalid_argument("zero denominator: '" + text + "'");
  q.canonicalize();
  return q;
}

inline std::string rat_str(const Rat& q) { return q.get_str(); }

inline double rat_dbl(const Rat& q) { return q.get_d(); }

using QVec = std::vector<Rat>;

struct QMat {
  int rows = 0, cols = 0;
  QVec a;

  QMat() = default;
  QMat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

  Rat& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const Rat& at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static QMat identity(int n) {
    QMat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  QVec apply(const QVec& v) const {
    QVec out(rows);
    for (int i = 0; i < rows; ++i) {
      Rat s = 0;
      for (int j = 0; j < cols; ++j) s += at(i, j) * v[j];
      out[i] = s;
    }
    return out;
  }

  QMat mul(const QMat& o) const {
    QMat out(rows, o.cols);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < cols; ++k) {
        const Rat& x = at(i, k);
        if (x == 0) continue;
        for (int j = 0; j < o.cols; ++j) out.at(i, j) += x * o.at(k, j);
      }
    return out;
  }

  bool operator==(const QMat& o) const {
    return rows == o.rows && cols == o.cols && a == o.a;
  }
};

// Exact dense solve, row pivoting on the first nonzero entry.
// Throws if the matrix is singular.
inline QVec solve_linear(QMat m, QVec b) {
  const int n = m.rows;
  if (m.cols != n || static_cast<int>(b.size()) != n)
    throw std::invalid_argument("solve_linear: shape mismatch");
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int i = col; i < n; ++i)
      if (m.at(i, col) != 0) { piv = i; break; }
    if (piv < 0) throw std::runtime_error("solve_linear: singular matrix");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(m.at(piv, j), m.at(col, j));
      std::swap(b[piv], b[col]);
    }
    const Rat d = m.at(col, col);
    for (int i = 0; i < n; ++i) {
      if (i == col || m.at(i, col) == 0) continue;
      Rat f = m.at(i, col) / d;
      for (int j = col; j < n; ++j) m.at(i, j) -= f * m.at(col, j);
      b[i] -= f * b[col];
    }
  }
  QVec x(n);
  for (int i = 0; i < n; ++i) x[i] = b[i] / m.at(i, i);
  return x;
}

// Best rational approximations of a double via continued fractions,
// cheapest first. Used to recover exact renormalization weights.
inline std::vector<Rat> continued_fraction_convergents(double x, int max_terms = 24) {
  std::vector<Rat> out;
  Int p0 = 1, q0 = 0;
  Int p1(static_cast<long>(std::floor(x))), q1 = 1;
  double frac = x - std::floor(x);
  out.emplace_back(p1, q1);
  for (int k = 1; k < max_terms; ++k) {
    if (frac < 1e-15) break;
    double inv = 1.0 / frac;
    if (inv > 1e15) break;
    long a = static_cast<long>(std::floor(inv));
    frac = inv - std::floor(inv);
    Int p2 = a * p1 + p0, q2 = a * q1 + q0;
    Rat c(p2, q2);
    c.canonicalize();
    out.push_back(c);
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
  }
  return out;
}

}  // namespace fractal
