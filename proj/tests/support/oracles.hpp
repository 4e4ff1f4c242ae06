#pragma once

// Cross-checking oracles for the test suite, deliberately built on different
// algorithms than the library under test:
//   * solve_lp       dense two-phase simplex with Dantzig pricing (the library
//                    only ever runs a phase-1 with Bland's rule);
//   * max_entropy    primal projected-gradient ascent over the feasible
//                    polytope (the library solves the dual product form).
// Agreement between the two sides is therefore meaningful evidence.

#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "maxent/feasibility.hpp"
#include "maxent/linalg.hpp"

namespace oracle {

using maxent::Matrix;
using maxent::Vector;

enum class LpStatus { optimal, infeasible, unbounded, stalled };

struct LpResult {
  LpStatus status = LpStatus::stalled;
  Vector x;
  double objective = 0.0;
};

// min c^t x  subject to  a x = b, x >= 0
inline LpResult solve_lp(const Matrix& a, const Vector& b, const Vector& c) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t nc = n + m;
  Matrix t(m, nc + 1, 0.0);
  std::vector<double> sign(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (b[i] < 0.0) sign[i] = -1.0;
    for (std::size_t j = 0; j < n; ++j) t(i, j) = sign[i] * a(i, j);
    t(i, n + i) = 1.0;
    t(i, nc) = sign[i] * b[i];
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

  Vector cost(nc, 0.0);
  for (std::size_t j = n; j < nc; ++j) cost[j] = 1.0;

  auto objective = [&]() {
    double obj = 0.0;
    for (std::size_t i = 0; i < m; ++i) obj += cost[basis[i]] * t(i, nc);
    return obj;
  };
  auto pivot = [&](std::size_t row, std::size_t col) {
    const double piv = t(row, col);
    for (std::size_t j = 0; j <= nc; ++j) t(row, j) /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row) continue;
      const double f = t(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= nc; ++j) t(i, j) -= f * t(row, j);
    }
    basis[row] = col;
  };
  // Dantzig pricing, switching to Bland after a degenerate stretch; returns
  // optimal / unbounded / stalled
  auto run = [&](bool allow_artificial) {
    long stalled = 0;
    double last_obj = objective();
    for (long iter = 0; iter < 200000; ++iter) {
      std::size_t entering = nc;
      double best = -1e-9;
      const std::size_t limit = allow_artificial ? nc : n;
      for (std::size_t j = 0; j < limit; ++j) {
        double r = cost[j];
        for (std::size_t i = 0; i < m; ++i)
          if (cost[basis[i]] != 0.0) r -= cost[basis[i]] * t(i, j);
        if (r < best) {
          best = r;
          entering = j;
          if (stalled > 100) break;  // Bland: first improving column
        }
      }
      if (entering == nc) return LpStatus::optimal;
      std::size_t row = m;
      double best_ratio = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (t(i, entering) <= 1e-11) continue;
        const double ratio = t(i, nc) / t(i, entering);
        if (row == m || ratio < best_ratio - 1e-12 ||
            (ratio <= best_ratio + 1e-12 && basis[i] < basis[row])) {
          best_ratio = std::min(row == m ? ratio : best_ratio, ratio);
          row = i;
        }
      }
      if (row == m) return LpStatus::unbounded;
      pivot(row, entering);
      const double obj = objective();
      stalled = obj < last_obj - 1e-12 ? 0 : stalled + 1;
      last_obj = obj;
    }
    return LpStatus::stalled;
  };

  LpResult out;
  const LpStatus ph1 = run(true);
  if (ph1 != LpStatus::optimal) {
    out.status = LpStatus::stalled;
    return out;
  }
  if (objective() > 1e-9) {
    out.status = LpStatus::infeasible;
    return out;
  }
  // drive leftover artificials out of the basis where possible
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    std::size_t col = n;
    for (std::size_t j = 0; j < n && col == n; ++j)
      if (std::fabs(t(i, j)) > 1e-9) col = j;
    if (col < n) pivot(i, col);
  }
  for (std::size_t j = 0; j < n; ++j) cost[j] = c[j];
  for (std::size_t j = n; j < nc; ++j) cost[j] = 0.0;
  const LpStatus ph2 = run(false);
  if (ph2 != LpStatus::optimal) {
    out.status = ph2;
    return out;
  }
  out.status = LpStatus::optimal;
  out.x = Vector(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) out.x[basis[i]] = std::max(0.0, t(i, nc));
  out.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) out.objective += c[j] * out.x[j];
  return out;
}

// ---- brute-force entropy maximiser ----------------------------------------

struct BruteForce {
  bool interior = false;  // false: some allowed cell is zero on the whole polytope
  Matrix p_hat;
  double h_Z = 0.0;
  double grad_norm = 0.0;
  long iterations = 0;
};

// Maximise h(Z) = sum_t pihat(t) sum_s -z(t,s) log z(t,s) over the polytope
// { z >= 0 supported in L, rows sum to 1, pihat-stationarity }. Variables are
// the allowed cells only; steps are projected on the constraint null space via
// a Gram-Schmidt basis; feasibility of the start point comes from averaging
// the per-cell maximising LP vertices.
inline BruteForce max_entropy(const Vector& pihat, const Matrix& comm,
                              long max_iter = 2000000, double grad_tol = 1e-11) {
  const std::size_t ell = pihat.size();
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t t = 0; t < ell; ++t)
    for (std::size_t s = 0; s < ell; ++s)
      if (comm(t, s) == 1.0) cells.push_back({t, s});
  const std::size_t k = cells.size();

  // equality constraints on the allowed-cell vector
  Matrix e(2 * ell, k, 0.0);
  Vector d(2 * ell, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    e(cells[c].first, c) = 1.0;
    e(ell + cells[c].second, c) = pihat[cells[c].first];
  }
  for (std::size_t r = 0; r < ell; ++r) {
    d[r] = 1.0;
    d[ell + r] = pihat[r];
  }

  BruteForce out;

  // start point: average of the vertices maximising each coordinate
  Vector z(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    Vector cost(k, 0.0);
    cost[c] = -1.0;
    const LpResult r = solve_lp(e, d, cost);
    if (r.status != LpStatus::optimal || -r.objective < 1e-6) return out;  // degenerate
    for (std::size_t j = 0; j < k; ++j) z[j] += r.x[j];
  }
  for (double& x : z) x /= static_cast<double>(k);
  out.interior = true;

  // orthonormal basis of the constraint row space (two Gram-Schmidt passes)
  std::vector<Vector> basis;
  for (std::size_t r = 0; r < 2 * ell; ++r) {
    Vector q(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) q[c] = e(r, c);
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& p : basis) {
        double dot = 0.0;
        for (std::size_t c = 0; c < k; ++c) dot += q[c] * p[c];
        for (std::size_t c = 0; c < k; ++c) q[c] -= dot * p[c];
      }
    double norm = 0.0;
    for (double x : q) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-10) continue;
    for (double& x : q) x /= norm;
    basis.push_back(std::move(q));
  }

  auto value = [&](const Vector& w) {
    double f = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      if (w[c] > 0.0) f -= pihat[cells[c].first] * w[c] * std::log(w[c]);
    return f;
  };
  auto gradient = [&](const Vector& w) {
    Vector g(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
      g[c] = pihat[cells[c].first] * (-std::log(w[c]) - 1.0);
    return g;
  };
  auto project = [&](Vector g) {
    for (const Vector& p : basis) {
      double dot = 0.0;
      for (std::size_t c = 0; c < k; ++c) dot += g[c] * p[c];
      for (std::size_t c = 0; c < k; ++c) g[c] -= dot * p[c];
    }
    return g;
  };

  double step = 0.1;
  double f = value(z);
  long iter = 0;
  for (; iter < max_iter; ++iter) {
    const Vector g = project(gradient(z));
    double gnorm = 0.0, gsq = 0.0;
    for (double x : g) {
      gnorm = std::max(gnorm, std::fabs(x));
      gsq += x * x;
    }
    out.grad_norm = gnorm;
    if (gnorm <= grad_tol) break;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Vector trial(k);
      bool positive = true;
      for (std::size_t c = 0; c < k; ++c) {
        trial[c] = z[c] + step * g[c];
        if (trial[c] <= 0.0) positive = false;
      }
      if (positive) {
        const double ft = value(trial);
        if (ft >= f + 1e-4 * step * gsq) {
          z = std::move(trial);
          f = ft;
          step *= 2.0;
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  out.iterations = iter;

  out.p_hat = Matrix(ell, ell, 0.0);
  for (std::size_t c = 0; c < k; ++c) out.p_hat(cells[c].first, cells[c].second) = z[c];
  out.h_Z = f;
  return out;
}

// ---- random instances ------------------------------------------------------

inline Vector random_pihat(std::mt19937_64& gen, std::size_t ell) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Vector v(ell);
  double total = 0.0;
  for (double& x : v) total += x = u(gen);
  for (double& x : v) x /= total;
  return v;
}

inline Matrix random_pattern(std::mt19937_64& gen, std::size_t ell, bool force_diagonal,
                             double density = 0.55) {
  std::bernoulli_distribution coin(density);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Matrix l(ell, ell, 0.0);
    for (std::size_t r = 0; r < ell; ++r)
      for (std::size_t c = 0; c < ell; ++c) l(r, c) = coin(gen) ? 1.0 : 0.0;
    if (force_diagonal)
      for (std::size_t r = 0; r < ell; ++r) l(r, r) = 1.0;
    if (maxent::strongly_connected(l)) return l;
  }
  return Matrix::identity(ell);
}

struct Instance {
  Vector pihat;
  Matrix comm;
};

// Feasible, nondegenerate instance: every allowed cell can be strictly
// positive somewhere on the polytope, so the strictly positive maxent kernel
// exists. The forced diagonal already guarantees feasibility.
inline Instance random_feasible_instance(std::mt19937_64& gen, std::size_t ell = 3) {
  while (true) {
    Instance ins{random_pihat(gen, ell), random_pattern(gen, ell, true)};
    const maxent::LinearSystem sys = maxent::build_system(ins.pihat, ins.comm);
    bool ok = true;
    for (std::size_t t = 0; t < ell && ok; ++t)
      for (std::size_t s = 0; s < ell && ok; ++s) {
        if (ins.comm(t, s) != 1.0) continue;
        Vector cost(ell * ell, 0.0);
        cost[maxent::cell_index(t, s, ell)] = -1.0;
        const LpResult r = solve_lp(sys.d, sys.b, cost);
        if (r.status != LpStatus::optimal || -r.objective < 1e-4) ok = false;
      }
    if (ok) return ins;
  }
}

}  // namespace oracle
