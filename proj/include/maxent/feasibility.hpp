#pragma once

// Feasibility of a support-constrained completion, decided exactly.
//
// Column-stack the candidate kernel as p(t + s*ell) = Phat(t, s) (0-based).
// Stack three row blocks into D (3*ell rows, ell^2 columns):
//   A(r, t + s*ell) = 1{t = r}                row sums        A p = 1
//   B(r, t + s*ell) = pihat(t) 1{s = r}       stationarity    B p = pihat
//   C(r, t + s*ell) = (1 - L(t, r)) 1{s = r}  forbidden mass  C p = 0
// A stochastic kernel with stationary pihat supported inside L exists iff
// D p = b, p >= 0 is solvable with b = (1, pihat, 0). Otherwise a Farkas
// vector y = (u, v, w) exists with D^t y >= 0 and b^t y < 0, which reads
//   sum_r u(r) + pihat(r) v(r) < 0
//   u(t) + v(s) pihat(t) + w(s) (1 - L(t, s)) >= 0  for all t, s.
// Since w only touches forbidden cells, it can always be rebuilt as
// w(s) = max_t |u(t)| + |v(s)| pihat(t); so a certificate is really a pair
// (u, v) satisfying the inequalities on the allowed cells only.
//
// The solver is a dense phase-1 simplex with Bland's rule (no cycling) and
// artificial variables. Feasible: the phase-1 optimum is ~0 and the basic
// solution is the witness. Infeasible: the phase-1 dual, negated, is the
// Farkas vector; v is kept and u is rebuilt as the smallest vector satisfying
// the allowed-cell inequalities for that v, which makes them hold as exact
// floating-point comparisons (the binding cell evaluates to (-p) + p = 0).
// (u, v) is then scaled to sup-norm 1 and u rebuilt once more.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "maxent/errors.hpp"
#include "maxent/linalg.hpp"

namespace maxent {

inline constexpr double kFeasibilityTol = 1e-9;

struct LinearSystem {
  Matrix d;
  Vector b;
  std::size_t ell = 0;
};

inline std::size_t cell_index(std::size_t t, std::size_t s, std::size_t ell) {
  return t + s * ell;
}

inline LinearSystem build_system(const Vector& pihat, const Matrix& comm) {
  const std::size_t ell = pihat.size();
  if (ell == 0) throw StructuralError("pihat is empty");
  if (comm.rows() != ell || comm.cols() != ell)
    throw StructuralError("communication matrix has the wrong shape");
  for (double x : comm.data())
    if (x != 0.0 && x != 1.0) throw StructuralError("communication matrix must be 0-1");
  double mass = 0.0;
  for (double x : pihat) {
    if (!(x > 0.0)) throw StructuralError("pihat must be strictly positive");
    mass += x;
  }
  if (std::fabs(mass - 1.0) > 1e-9)
    throw StructuralError("pihat must be normalised to total mass 1");

  LinearSystem sys;
  sys.ell = ell;
  sys.d = Matrix(3 * ell, ell * ell, 0.0);
  sys.b = Vector(3 * ell, 0.0);
  for (std::size_t r = 0; r < ell; ++r) {
    for (std::size_t s = 0; s < ell; ++s) sys.d(r, cell_index(r, s, ell)) = 1.0;
    sys.b[r] = 1.0;
  }
  for (std::size_t r = 0; r < ell; ++r) {
    for (std::size_t t = 0; t < ell; ++t)
      sys.d(ell + r, cell_index(t, r, ell)) = pihat[t];
    sys.b[ell + r] = pihat[r];
  }
  for (std::size_t r = 0; r < ell; ++r)
    for (std::size_t t = 0; t < ell; ++t)
      sys.d(2 * ell + r, cell_index(t, r, ell)) = 1.0 - comm(t, r);
  return sys;
}

inline Vector encode_matrix(const Matrix& p_hat) {
  const std::size_t ell = p_hat.rows();
  Vector p(ell * ell, 0.0);
  for (std::size_t t = 0; t < ell; ++t)
    for (std::size_t s = 0; s < ell; ++s) p[cell_index(t, s, ell)] = p_hat(t, s);
  return p;
}

inline Matrix decode_matrix(const Vector& p, std::size_t ell) {
  Matrix m(ell, ell, 0.0);
  for (std::size_t t = 0; t < ell; ++t)
    for (std::size_t s = 0; s < ell; ++s) m(t, s) = p[cell_index(t, s, ell)];
  return m;
}

struct FarkasCertificate {
  Vector u;
  Vector v;
  Vector w;
};

enum class Feasibility { feasible, infeasible };

struct FeasibilityOutcome {
  Feasibility verdict = Feasibility::feasible;
  std::optional<Matrix> witness;
  std::optional<FarkasCertificate> certificate;
  long iterations = 0;
};

namespace detail {

struct Phase1Outcome {
  double objective = 0.0;
  Vector x;       // structural values, valid when objective ~ 0
  Vector farkas;  // y with A^t y >= 0 (up to pivot eps) and b^t y = -objective
  long iterations = 0;
};

// Phase-1 simplex, Bland's rule throughout: entering column is the smallest
// index with negative reduced cost, leaving row breaks ratio ties by smallest
// basic index. Artificial columns double as a record of B^{-1}, which is how
// the dual vector is read off at termination.
inline Phase1Outcome phase1_simplex(const Matrix& a, const Vector& b) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t nc = n + m;
  const double enter_eps = 1e-10;
  const double pivot_eps = 1e-11;

  Vector sign(m, 1.0);
  Matrix t(m, nc + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (b[i] < 0.0) sign[i] = -1.0;
    for (std::size_t j = 0; j < n; ++j) t(i, j) = sign[i] * a(i, j);
    t(i, n + i) = 1.0;
    t(i, nc) = sign[i] * b[i];
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

  auto cost = [n](std::size_t col) { return col >= n ? 1.0 : 0.0; };

  long iters = 0;
  const long cap = 1000000;
  while (true) {
    if (++iters > cap) throw IndeterminateError("phase-1 simplex exceeded its pivot cap");
    // reduced costs r_j = cost(j) - sum_i cost(basis[i]) t(i, j)
    std::size_t entering = nc;
    for (std::size_t j = 0; j < nc && entering == nc; ++j) {
      double r = cost(j);
      for (std::size_t i = 0; i < m; ++i)
        if (cost(basis[i]) != 0.0) r -= t(i, j);
      if (r < -enter_eps) entering = j;
    }
    if (entering == nc) break;  // optimal

    double best_ratio = 0.0;
    std::size_t row = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (t(i, entering) <= pivot_eps) continue;
      const double ratio = t(i, nc) / t(i, entering);
      if (row == m) {
        best_ratio = ratio;
        row = i;
        continue;
      }
      const double fuzz = 1e-12 * (1.0 + std::fabs(best_ratio));
      if (ratio < best_ratio - fuzz) {
        best_ratio = ratio;
        row = i;
      } else if (ratio <= best_ratio + fuzz && basis[i] < basis[row]) {
        best_ratio = std::min(best_ratio, ratio);
        row = i;
      }
    }
    if (row == m)
      throw IndeterminateError("phase-1 simplex found an unbounded direction");

    const double piv = t(row, entering);
    for (std::size_t j = 0; j <= nc; ++j) t(row, j) /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row) continue;
      const double f = t(i, entering);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= nc; ++j) t(i, j) -= f * t(row, j);
    }
    basis[row] = entering;
  }

  Phase1Outcome out;
  out.iterations = iters;
  for (std::size_t i = 0; i < m; ++i)
    if (cost(basis[i]) != 0.0) out.objective += t(i, nc);
  out.x = Vector(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) out.x[basis[i]] = t(i, nc);
  // dual of the sign-flipped system, then negate and unflip for Farkas form
  out.farkas = Vector(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double y_i = 0.0;
    for (std::size_t k = 0; k < m; ++k)
      if (cost(basis[k]) != 0.0) y_i += t(k, n + i);
    out.farkas[i] = -sign[i] * y_i;
  }
  return out;
}

}  // namespace detail

inline bool diagonal_shortcut(const Matrix& comm) {
  for (std::size_t i = 0; i < comm.rows(); ++i)
    if (comm(i, i) != 1.0) return false;
  return true;
}

inline FeasibilityOutcome solve_feasibility(const LinearSystem& sys) {
  const std::size_t ell = sys.ell;
  const auto ph = detail::phase1_simplex(sys.d, sys.b);

  FeasibilityOutcome out;
  out.iterations = ph.iterations;
  // pihat is recoverable from the middle block of b
  Vector pihat(ell, 0.0);
  for (std::size_t r = 0; r < ell; ++r) pihat[r] = sys.b[ell + r];
  // the forbidden pattern is recoverable from the bottom block of D
  auto forbidden = [&](std::size_t t, std::size_t s) {
    return sys.d(2 * ell + s, cell_index(t, s, ell)) != 0.0;
  };

  if (ph.objective <= kFeasibilityTol) {
    Vector x = ph.x;
    for (double& v : x) {
      if (v < 0.0) {
        if (v < -1e-11) throw IndeterminateError("witness left the nonnegative orthant");
        v = 0.0;
      }
    }
    double res = 0.0;
    const Vector dx = mat_vec(sys.d, x);
    for (std::size_t i = 0; i < dx.size(); ++i)
      res = std::max(res, std::fabs(dx[i] - sys.b[i]));
    if (res > kFeasibilityTol)
      throw IndeterminateError("witness residual " + format_double(res) +
                               " exceeds tolerance");
    out.verdict = Feasibility::feasible;
    out.witness = decode_matrix(x, ell);
    return out;
  }

  // Farkas branch: phase-1 optimum > 1e-9, so b^t y <= -1e-9 with margin.
  Vector u(ell), v(ell);
  for (std::size_t r = 0; r < ell; ++r) {
    u[r] = ph.farkas[r];
    v[r] = ph.farkas[ell + r];
  }
  // Given v, the tightest admissible u is u(t) = -min over allowed s of
  // v(s) pihat(t). Rebuilding u that way absorbs the pivot roundoff and makes
  // the allowed-cell inequalities exact: the binding cell computes (-p) + p
  // with the identical product p, and every other cell rounds a nonnegative
  // difference of such products. Rows without allowed cells keep the dual u.
  auto rebuild_u = [&]() {
    for (std::size_t t = 0; t < ell; ++t) {
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < ell; ++s)
        if (!forbidden(t, s)) lo = std::min(lo, v[s] * pihat[t]);
      if (lo < std::numeric_limits<double>::infinity()) u[t] = -lo;
    }
  };
  rebuild_u();
  double rest1 = 0.0;
  for (std::size_t r = 0; r < ell; ++r) rest1 += u[r] + pihat[r] * v[r];
  if (!(rest1 < 0.0))
    throw IndeterminateError("certificate lost strictness after roundoff shift");
  const double scale = std::max(sup_norm(u), sup_norm(v));
  if (!(scale > 0.0)) throw IndeterminateError("degenerate certificate scale");
  for (double& x : u) x /= scale;
  for (double& x : v) x /= scale;
  rebuild_u();  // the division re-rounded u; restore exactness for the scaled v
  Vector w(ell, 0.0);
  for (std::size_t s = 0; s < ell; ++s) {
    double bound = 0.0;
    for (std::size_t t = 0; t < ell; ++t)
      bound = std::max(bound, std::fabs(u[t]) + std::fabs(v[s]) * pihat[t]);
    w[s] = bound;
  }
  // final verification of both certificate inequalities
  for (std::size_t t = 0; t < ell; ++t)
    for (std::size_t s = 0; s < ell; ++s) {
      const double base = u[t] + v[s] * pihat[t];
      if (!forbidden(t, s) && base < 0.0)
        throw IndeterminateError("certificate fails an allowed-cell inequality");
      if (forbidden(t, s) && base + w[s] < 0.0)
        throw IndeterminateError("certificate fails a forbidden-cell inequality");
    }
  double rest1_scaled = 0.0;
  for (std::size_t r = 0; r < ell; ++r) rest1_scaled += u[r] + pihat[r] * v[r];
  if (!(rest1_scaled < 0.0))
    throw IndeterminateError("certificate strict inequality failed verification");

  out.verdict = Feasibility::infeasible;
  out.certificate = FarkasCertificate{std::move(u), std::move(v), std::move(w)};
  return out;
}

inline FeasibilityOutcome solve_feasibility(const Vector& pihat, const Matrix& comm) {
  return solve_feasibility(build_system(pihat, comm));
}

}  // namespace maxent
