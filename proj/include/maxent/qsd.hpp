#pragma once

// Quasi-stationarity diagnostics. For a completed chain, start either half in
// its normalised stationary law and kill on leaving the half. The model makes
// three exact predictions, and the reports measure how far a chain is from
// them (analytically, via matrix powers; nothing is sampled here):
//   * survival is exactly geometric: P(alive after n steps) = rho^n, with
//     rho = pi(I) on the visible side and rho = pi(E) on the hidden side;
//   * the exit state has the opposite half's normalised stationary law;
//   * exit state and exit time are independent.

#include <cmath>
#include <cstddef>

#include "maxent/chain.hpp"
#include "maxent/linalg.hpp"

namespace maxent {

enum class Side { visible, hidden };

struct QsdReport {
  Side side = Side::visible;
  double rho = 0.0;
  Vector survival;                    // survival[n] for n = 0..horizon
  double geometric_residual = 0.0;    // sup_n |survival[n] - rho^n|
  Vector exit_law;
  double exit_law_residual = 0.0;     // against the opposite half's law
  double independence_residual = 0.0; // sup |P(exit=s, time=n) - exit_law(s) P(time=n)|
};

namespace detail {

inline QsdReport qsd_side(Side side, const Vector& start, const Matrix& block,
                          const Matrix& cross, const Vector& opposite_law,
                          double rho, std::size_t horizon) {
  QsdReport rep;
  rep.side = side;
  rep.rho = rho;
  rep.survival.resize(horizon + 1);

  Vector v = start;  // start^t block^n as n advances
  rep.survival[0] = sum(v);
  for (std::size_t n = 1; n <= horizon; ++n) {
    v = vec_mat(v, block);
    rep.survival[n] = sum(v);
  }
  double rho_pow = 1.0;
  for (std::size_t n = 0; n <= horizon; ++n) {
    rep.geometric_residual =
        std::max(rep.geometric_residual, std::fabs(rep.survival[n] - rho_pow));
    rho_pow *= rho;
  }

  // closed form: exit law = start^t cross / (1 - rho)
  rep.exit_law = vec_mat(start, cross);
  for (double& x : rep.exit_law) x /= (1.0 - rho);
  rep.exit_law_residual = sup_diff(rep.exit_law, opposite_law);

  // joint law of (exit state, exit time), compared with the product
  v = start;
  for (std::size_t n = 1; n <= horizon; ++n) {
    const Vector joint = vec_mat(v, cross);  // P(exit = s, time = n)
    const double p_n = rep.survival[n - 1] - rep.survival[n];
    for (std::size_t s = 0; s < joint.size(); ++s)
      rep.independence_residual = std::max(
          rep.independence_residual, std::fabs(joint[s] - rep.exit_law[s] * p_n));
    v = vec_mat(v, block);
  }
  return rep;
}

}  // namespace detail

inline QsdReport qsd_report_visible(const CompletedChain& chain, std::size_t horizon = 50) {
  return detail::qsd_side(Side::visible, chain.derived.pihat_i, chain.spec.p_ii,
                          chain.spec.p_ie, chain.derived.pihat_e,
                          chain.derived.pi_I_mass, horizon);
}

inline QsdReport qsd_report_hidden(const CompletedChain& chain, std::size_t horizon = 50) {
  return detail::qsd_side(Side::hidden, chain.derived.pihat_e, chain.p_ee,
                          chain.spec.p_ei, chain.derived.pihat_i,
                          chain.derived.pi_E_mass, horizon);
}

}  // namespace maxent
