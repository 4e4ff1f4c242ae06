#pragma once

// Maximum-entropy completions of the hidden block.
//
// Writing Phat = P_EE / pi(E) and pihat for the normalised hidden weights, the
// admissible hidden blocks are exactly the stochastic matrices Phat that leave
// pihat invariant (optionally supported on a 0-1 pattern L). The entropy
// contribution of the hidden block decomposes through the normalised pair:
//
//   H'(P_EE) = pi(E)^2 h(Phat, pihat) - pi(E)^2 log pi(E)
//
// so maximising H' means maximising the entropy rate h of the normalised
// chain. Without a support constraint the maximiser is the independence
// completion Phat(d, e) = pihat(e). Under a support pattern L the maximiser
// has the product form Phat(d, e) = alpha(d) beta(e) on allowed edges; the
// scaling loop below finds alpha and beta (it is the same alternating scaling
// that matrix-balancing methods use). With no data at all, only a pattern L,
// the entropy-maximal shift carried by L is obtained from the principal
// eigenpair of L (the Parry construction); with not even a pattern, it is the
// uniform chain.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "maxent/chain.hpp"
#include "maxent/errors.hpp"
#include "maxent/linalg.hpp"

namespace maxent {

inline double neg_xlogx(double x) { return x > 0.0 ? -x * std::log(x) : 0.0; }

// -sum_a w(a) sum_b k(a,b) log k(a,b), with 0 log 0 = 0.
inline double entropy_rate(const Vector& w, const Matrix& k) {
  double h = 0.0;
  for (std::size_t a = 0; a < k.rows(); ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < k.cols(); ++b) row += neg_xlogx(k(a, b));
    h += w[a] * row;
  }
  return h;
}

struct EntropyReport {
  double h_X = 0.0;      // entropy rate of the assembled chain
  double h_Z = 0.0;      // entropy rate of the normalised hidden chain
  double H_prime = 0.0;  // hidden-block contribution to h_X
  double identity_residual = 0.0;  // |H' - (pi(E)^2 h_Z - pi(E)^2 log pi(E))|
  double term_visible = 0.0;
  double term_exit = 0.0;
  double term_hidden = 0.0;
  double decomposition_residual = 0.0;  // |h_X - (visible + exit + hidden)|
};

inline EntropyReport entropy_full(const CompletedChain& chain) {
  const std::size_t nv = chain.num_visible();
  const std::size_t nh = chain.num_hidden();
  const Matrix p = chain.full_matrix();
  EntropyReport rep;
  rep.h_X = entropy_rate(chain.pi, p);

  for (std::size_t i = 0; i < nv; ++i) {
    double row = 0.0;
    for (std::size_t b = 0; b < nv + nh; ++b) row += neg_xlogx(p(i, b));
    rep.term_visible += chain.pi[i] * row;
  }
  double exit_row = 0.0;  // entropy of the common exit law pi_I
  for (std::size_t j = 0; j < nv; ++j) exit_row += neg_xlogx(chain.spec.pi_i[j]);
  rep.term_exit = chain.derived.pi_E_mass * exit_row;
  for (std::size_t d = 0; d < nh; ++d) {
    double row = 0.0;
    for (std::size_t e = 0; e < nh; ++e) row += neg_xlogx(chain.p_ee(d, e));
    rep.term_hidden += chain.derived.pi_e[d] * row;
  }
  rep.H_prime = rep.term_hidden;
  rep.decomposition_residual =
      std::fabs(rep.h_X - (rep.term_visible + rep.term_exit + rep.term_hidden));

  const double me = chain.derived.pi_E_mass;
  Matrix p_hat(nh, nh, 0.0);
  for (std::size_t d = 0; d < nh; ++d)
    for (std::size_t e = 0; e < nh; ++e) p_hat(d, e) = chain.p_ee(d, e) / me;
  rep.h_Z = entropy_rate(chain.derived.pihat_e, p_hat);
  rep.identity_residual =
      std::fabs(rep.H_prime - (me * me * rep.h_Z - me * me * std::log(me)));
  return rep;
}

// Independence completion: P_EE(d, e) = pi_E(e) for every d.
inline CompletedChain complete_bernoulli(const PartialChainSpec& spec,
                                         double tol = kDefaultTol) {
  const DerivedQuantities d = derive_quantities(spec);
  const std::size_t nh = spec.num_hidden();
  Matrix p_ee(nh, nh, 0.0);
  // written as mass * pihat, not as pi_e, so a one-block partitioned solve
  // reproduces these doubles bit for bit
  for (std::size_t r = 0; r < nh; ++r)
    for (std::size_t e = 0; e < nh; ++e) p_ee(r, e) = d.pi_E_mass * d.pihat_e[e];
  return assemble(spec, std::move(p_ee), CompletionMode::bernoulli, tol);
}

struct SolveOptions {
  double tol = 1e-12;       // sup-norm change of beta per sweep
  long max_iter = 100000;   // sweep cap
  std::size_t anchor = 0;   // beta(anchor) is pinned to 1 each sweep
};

struct ScalingResult {
  Matrix p_hat;
  Vector alpha;
  Vector beta;
  std::size_t anchor_index = 0;
  long iterations = 0;
  double residual = 0.0;  // max row-sum / stationarity violation of p_hat
};

namespace detail {

inline double product_form_residual(const Vector& pihat, const Matrix& p_hat) {
  double r = 0.0;
  const std::size_t n = pihat.size();
  for (std::size_t d = 0; d < n; ++d) {
    double s = 0.0;
    for (std::size_t e = 0; e < n; ++e) s += p_hat(d, e);
    r = std::max(r, std::fabs(s - 1.0));
  }
  const Vector flow = vec_mat(pihat, p_hat);
  for (std::size_t e = 0; e < n; ++e) r = std::max(r, std::fabs(flow[e] - pihat[e]));
  return r;
}

}  // namespace detail

// Alternating scaling for the support-constrained completion. Starting from
// beta = 1 it sweeps
//   alpha(d) = 1 / sum_{e in L_d} beta(e)
//   beta(e) <- pihat(e) / sum_{d: L(d,e)=1} pihat(d) alpha(d)
// renormalising beta(anchor) = 1 after each sweep, until the beta change drops
// below tol. Row sums of alpha(d) beta(e) 1{L=1} are 1 by construction; the
// reported residual rechecks both families of constraints on the final matrix.
// Divergence (a scaling passing 1e12, or a change that stops improving for
// 1000 consecutive sweeps) is reported as SolveError: such a support either
// admits no completion or admits one only on the boundary.
inline ScalingResult scale_product_form(const Vector& pihat, const Matrix& comm,
                                        const SolveOptions& opts = {}) {
  const std::size_t n = pihat.size();
  if (comm.rows() != n || comm.cols() != n)
    throw StructuralError("communication matrix has the wrong shape");
  for (double x : comm.data())
    if (x != 0.0 && x != 1.0) throw StructuralError("communication matrix must be 0-1");
  for (double x : pihat)
    if (!(x > 0.0)) throw StructuralError("pihat must be strictly positive");
  if (!strongly_connected(comm))
    throw StructuralError("communication matrix must be irreducible");
  if (opts.anchor >= n) throw StructuralError("anchor index out of range");

  std::vector<std::vector<std::size_t>> succ(n), pred(n);
  for (std::size_t d = 0; d < n; ++d)
    for (std::size_t e = 0; e < n; ++e)
      if (comm(d, e) == 1.0) {
        succ[d].push_back(e);
        pred[e].push_back(d);
      }

  Vector beta(n, 1.0), alpha(n, 0.0);
  auto assemble_p_hat = [&]() {
    for (std::size_t d = 0; d < n; ++d) {
      double denom = 0.0;
      for (std::size_t e : succ[d]) denom += beta[e];
      alpha[d] = 1.0 / denom;
    }
    Matrix p_hat(n, n, 0.0);
    for (std::size_t d = 0; d < n; ++d)
      for (std::size_t e : succ[d]) p_hat(d, e) = alpha[d] * beta[e];
    return p_hat;
  };
  auto bail = [&](long iter) {
    const Matrix p_hat = assemble_p_hat();
    const double res = detail::product_form_residual(pihat, p_hat);
    const auto kind = res <= 1e-3 ? SolveError::Kind::degenerate_support
                                  : SolveError::Kind::infeasible_or_degenerate;
    throw SolveError(kind, iter, res);
  };

  double best_change = std::numeric_limits<double>::infinity();
  long stale = 0;
  bool converged = false;
  long iter = 0;
  while (iter < opts.max_iter) {
    ++iter;
    for (std::size_t d = 0; d < n; ++d) {
      double denom = 0.0;
      for (std::size_t e : succ[d]) denom += beta[e];
      alpha[d] = 1.0 / denom;
    }
    Vector next(n, 0.0);
    for (std::size_t e = 0; e < n; ++e) {
      double inflow = 0.0;
      for (std::size_t d : pred[e]) inflow += pihat[d] * alpha[d];
      next[e] = pihat[e] / inflow;
    }
    const double scale = next[opts.anchor];
    for (double& x : next) x /= scale;
    const double change = sup_diff(next, beta);
    beta = std::move(next);

    bool blown = false;
    for (double x : beta)
      if (!std::isfinite(x) || x > 1e12 || x < 1e-12) blown = true;
    if (blown) bail(iter);

    if (change <= opts.tol) {
      converged = true;
      break;
    }
    if (change < best_change * (1.0 - 1e-3)) {
      best_change = change;
      stale = 0;
    } else if (++stale >= 1000) {
      bail(iter);
    }
  }
  if (!converged) bail(iter);

  ScalingResult out;
  out.p_hat = assemble_p_hat();
  out.alpha = alpha;
  out.beta = beta;
  out.anchor_index = opts.anchor;
  out.iterations = iter;
  out.residual = detail::product_form_residual(pihat, out.p_hat);
  return out;
}

struct MaxentSolution {
  Matrix p_hat;
  Vector alpha;
  Vector beta;
  std::size_t anchor_index = 0;
  long iterations = 0;
  double residual = 0.0;
  double entropy_hZ = 0.0;
  double entropy_Hprime = 0.0;
};

inline MaxentSolution complete_constrained(const PartialChainSpec& spec,
                                           const SolveOptions& opts = {}) {
  if (!spec.comm)
    throw StructuralError("constrained completion requires the communication matrix L");
  const DerivedQuantities d = derive_quantities(spec);
  ScalingResult s = scale_product_form(d.pihat_e, *spec.comm, opts);
  MaxentSolution sol;
  sol.p_hat = std::move(s.p_hat);
  sol.alpha = std::move(s.alpha);
  sol.beta = std::move(s.beta);
  sol.anchor_index = s.anchor_index;
  sol.iterations = s.iterations;
  sol.residual = s.residual;
  sol.entropy_hZ = entropy_rate(d.pihat_e, sol.p_hat);
  const double me = d.pi_E_mass;
  sol.entropy_Hprime = me * me * sol.entropy_hZ - me * me * std::log(me);
  return sol;
}

// Scales the normalised solution back onto the spec and verifies the result.
inline CompletedChain to_completed(const PartialChainSpec& spec,
                                   const MaxentSolution& sol,
                                   double tol = kDefaultTol) {
  const DerivedQuantities d = derive_quantities(spec);
  const std::size_t nh = spec.num_hidden();
  Matrix p_ee(nh, nh, 0.0);
  for (std::size_t r = 0; r < nh; ++r)
    for (std::size_t e = 0; e < nh; ++e) p_ee(r, e) = d.pi_E_mass * sol.p_hat(r, e);
  return assemble(spec, std::move(p_ee), CompletionMode::constrained, tol);
}

struct ParryChain {
  Matrix p_hat;
  Vector stationary;
  double lambda = 0.0;
  double log_lambda = 0.0;
};

// Entropy-maximal shift carried by an irreducible 0-1 pattern: from the
// principal eigenpair L phi = lambda phi, the kernel is
// Phat(d, e) = L(d, e) phi(e) / (lambda phi(d)) and the stationary law is
// nu(d) phi(d) with the left eigenvector nu, normalised so the products sum
// to 1. Its entropy rate is log lambda. Power iteration runs on L + Id,
// which is primitive whenever L is irreducible, so periodic patterns (pure
// cycles) converge too.
inline ParryChain complete_parry(const Matrix& comm) {
  const std::size_t n = comm.rows();
  if (n == 0 || comm.cols() != n)
    throw StructuralError("communication matrix must be square and nonempty");
  for (double x : comm.data())
    if (x != 0.0 && x != 1.0) throw StructuralError("communication matrix must be 0-1");
  if (!strongly_connected(comm))
    throw StructuralError("communication matrix must be irreducible");

  auto principal = [&](bool left) {
    Vector x(n, 1.0 / static_cast<double>(n));
    for (long iter = 0; iter < 200000; ++iter) {
      Vector y = left ? vec_mat(x, comm) : mat_vec(comm, x);
      for (std::size_t i = 0; i < n; ++i) y[i] += x[i];  // shift by identity
      double lo = std::numeric_limits<double>::infinity();
      double hi = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double ratio = y[i] / x[i];
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
      const double norm = sum(y);
      for (double& v : y) v /= norm;
      x = std::move(y);
      if (hi - lo <= 1e-14 * hi) break;
    }
    return x;
  };

  ParryChain out;
  Vector phi = principal(false);
  Vector nu = principal(true);
  const Vector l_phi = mat_vec(comm, phi);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += nu[i] * l_phi[i];
    den += nu[i] * phi[i];
  }
  out.lambda = num / den;
  out.log_lambda = std::log(out.lambda);
  double cross = 0.0;
  for (std::size_t i = 0; i < n; ++i) cross += nu[i] * phi[i];
  for (double& v : nu) v /= cross;

  out.p_hat = Matrix(n, n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    double row = 0.0;
    for (std::size_t e = 0; e < n; ++e)
      if (comm(d, e) == 1.0) row += out.p_hat(d, e) = phi[e] / (out.lambda * phi[d]);
    for (std::size_t e = 0; e < n; ++e) out.p_hat(d, e) /= row;
  }
  out.stationary = Vector(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) out.stationary[d] = nu[d] * phi[d];
  return out;
}

inline Matrix complete_uniform(std::size_t n) {
  if (n == 0) throw StructuralError("cannot build a uniform chain on zero states");
  return Matrix(n, n, 1.0 / static_cast<double>(n));
}

}  // namespace maxent
