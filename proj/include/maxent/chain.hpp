#pragma once

// Data model for partially specified stationary chains.
//
// The state space splits into a visible part I and a hidden part E. The data
// are the visible transition blocks P_II and P_IE, the hidden-to-visible block
// P_EI, and the unnormalised stationary weights pi_I of the visible states
// (their total mass is strictly between 0 and 1; the remainder sits on E).
// The model assumes:
//   * every hidden state exits to the visible part with the law pi_I itself,
//     i.e. every row of P_EI equals pi_I^t (uniform exit law);
//   * pi_I^t P_II = pi(I) pi_I^t, so the visible block kills mass at the
//     constant rate pi(I).
// From these, the hidden stationary weights follow as
//   pi_E(e) = pi(I)^{-1} sum_i pi_I(i) P_IE(i, e),
// and any admissible hidden block P_EE must have constant row sums pi(E) and
// leave pi_E invariant: pi_E^t P_EE = pi(E) pi_E^t.

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maxent/errors.hpp"
#include "maxent/linalg.hpp"

namespace maxent {

inline constexpr double kDefaultTol = 1e-9;  // sup-norm residual tolerance

struct StateSpace {
  std::vector<std::string> visible;
  std::vector<std::string> hidden;
};

struct PartialChainSpec {
  StateSpace states;
  Matrix p_ii;  // |I| x |I|
  Matrix p_ie;  // |I| x |E|
  Matrix p_ei;  // |E| x |I|
  Vector pi_i;  // length |I|, unnormalised
  std::optional<Matrix> comm;  // optional 0-1 communication structure on E
  std::optional<std::vector<std::vector<std::size_t>>> partition;  // hidden indices

  std::size_t num_visible() const { return states.visible.size(); }
  std::size_t num_hidden() const { return states.hidden.size(); }
};

inline void check_dimensions(const PartialChainSpec& spec) {
  const std::size_t nv = spec.num_visible();
  const std::size_t nh = spec.num_hidden();
  if (nv == 0) throw StructuralError("visible state set is empty");
  if (nh == 0) throw StructuralError("hidden state set is empty");
  std::set<std::string> labels;
  for (const auto& l : spec.states.visible)
    if (!labels.insert(l).second) throw StructuralError("duplicate state label '" + l + "'");
  for (const auto& l : spec.states.hidden)
    if (!labels.insert(l).second) throw StructuralError("duplicate state label '" + l + "'");
  auto expect = [](const Matrix& m, std::size_t r, std::size_t c, const char* name) {
    if (m.rows() != r || m.cols() != c)
      throw StructuralError(std::string(name) + " has the wrong shape");
    for (double x : m.data())
      if (!(x >= 0.0)) throw StructuralError(std::string(name) + " has a negative or NaN entry");
  };
  expect(spec.p_ii, nv, nv, "P_II");
  expect(spec.p_ie, nv, nh, "P_IE");
  expect(spec.p_ei, nh, nv, "P_EI");
  if (spec.pi_i.size() != nv) throw StructuralError("pi_I has the wrong length");
  for (double x : spec.pi_i)
    if (!(x >= 0.0)) throw StructuralError("pi_I has a negative or NaN entry");
  if (spec.comm) {
    if (spec.comm->rows() != nh || spec.comm->cols() != nh)
      throw StructuralError("L has the wrong shape");
    for (double x : spec.comm->data())
      if (x != 0.0 && x != 1.0) throw StructuralError("L must be a 0-1 matrix");
  }
  if (spec.partition) {
    for (const auto& block : *spec.partition) {
      if (block.empty()) throw StructuralError("partition contains an empty block");
      for (std::size_t e : block)
        if (e >= nh) throw StructuralError("partition references an unknown hidden state");
    }
  }
}

struct CheckResult {
  std::string name;
  bool pass;
  double residual;
};

struct ValidationReport {
  double tol = kDefaultTol;
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  const CheckResult* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

// Validation reports; it never throws on a hypothesis failure. Shape problems
// still throw, because no hypothesis can even be stated about misshapen data.
inline ValidationReport validate_hypotheses(const PartialChainSpec& spec,
                                            double tol = kDefaultTol) {
  check_dimensions(spec);
  const std::size_t nv = spec.num_visible();
  const std::size_t nh = spec.num_hidden();
  ValidationReport report;
  report.tol = tol;
  auto add = [&](std::string name, double residual, bool pass) {
    report.checks.push_back({std::move(name), pass, residual});
  };
  auto add_tol = [&](std::string name, double residual) {
    add(std::move(name), residual, residual <= tol);
  };

  // rows of [P_II | P_IE] are probability vectors
  double r_rows = 0.0;
  for (std::size_t i = 0; i < nv; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < nv; ++j) s += spec.p_ii(i, j);
    for (std::size_t e = 0; e < nh; ++e) s += spec.p_ie(i, e);
    r_rows = std::max(r_rows, std::fabs(s - 1.0));
  }
  add_tol("markov-rows", r_rows);

  const double mass = sum(spec.pi_i);
  {
    const bool ok = mass > 0.0 && mass < 1.0;
    const double residual = ok ? 0.0 : std::max(0.0, -mass) + std::max(0.0, mass - 1.0);
    add("pi-mass", residual, ok);
  }
  {
    double mn = spec.pi_i.empty() ? 0.0 : spec.pi_i[0];
    for (double x : spec.pi_i) mn = std::min(mn, x);
    add("pi-positive", std::max(0.0, -mn), mn > 0.0);
  }

  // every hidden row exits with the visible stationary weights
  double r_exit = 0.0;
  for (std::size_t d = 0; d < nh; ++d)
    for (std::size_t i = 0; i < nv; ++i)
      r_exit = std::max(r_exit, std::fabs(spec.p_ei(d, i) - spec.pi_i[i]));
  add_tol("exit-law-rows", r_exit);

  // pi_I^t P_II = pi(I) pi_I^t
  const Vector left = vec_mat(spec.pi_i, spec.p_ii);
  double r_eig = 0.0;
  for (std::size_t j = 0; j < nv; ++j)
    r_eig = std::max(r_eig, std::fabs(left[j] - mass * spec.pi_i[j]));
  add_tol("visible-eigenvector", r_eig);

  const bool irr = strongly_connected(spec.p_ii);
  add("visible-irreducible", irr ? 0.0 : 1.0, irr);

  double max_exit = 0.0;
  for (double x : spec.p_ie.data()) max_exit = std::max(max_exit, x);
  add("labyrinth-reachable", max_exit > 0.0 ? 0.0 : 1.0, max_exit > 0.0);

  if (spec.comm) {
    bool ok = true;
    if (spec.partition) {
      // the pattern only needs to connect states inside each labyrinth
      for (const auto& block : *spec.partition) {
        Matrix sub(block.size(), block.size(), 0.0);
        for (std::size_t a = 0; a < block.size(); ++a)
          for (std::size_t b = 0; b < block.size(); ++b)
            sub(a, b) = (*spec.comm)(block[a], block[b]);
        if (!strongly_connected(sub)) ok = false;
      }
    } else {
      ok = strongly_connected(*spec.comm);
    }
    add("comm-irreducible", ok ? 0.0 : 1.0, ok);
  }
  if (spec.partition) {
    std::vector<int> covered(nh, 0);
    bool ok = true;
    for (const auto& block : *spec.partition)
      for (std::size_t e : block)
        if (++covered[e] > 1) ok = false;
    for (int c : covered)
      if (c != 1) ok = false;
    add("partition-valid", ok ? 0.0 : 1.0, ok);
  }
  return report;
}

struct DerivedQuantities {
  double pi_I_mass = 0.0;  // pi(I)
  double pi_E_mass = 0.0;  // pi(E) = 1 - pi(I)
  Vector pi_e;             // unnormalised hidden weights
  Vector pihat_i;          // pi_I / pi(I)
  Vector pihat_e;          // pi_E normalised to total 1
};

// Requires that the validation checks "exit-law-rows" and "visible-eigenvector"
// pass within tolerance; the caller is responsible for having run them.
inline DerivedQuantities derive_quantities(const PartialChainSpec& spec) {
  check_dimensions(spec);
  DerivedQuantities d;
  d.pi_I_mass = sum(spec.pi_i);
  d.pi_E_mass = 1.0 - d.pi_I_mass;
  if (d.pi_I_mass <= 0.0 || d.pi_I_mass >= 1.0)
    throw DegeneracyError("pi_I mass must lie strictly between 0 and 1");
  d.pi_e = vec_mat(spec.pi_i, spec.p_ie);
  for (double& x : d.pi_e) x /= d.pi_I_mass;
  for (std::size_t e = 0; e < d.pi_e.size(); ++e)
    if (d.pi_e[e] <= 0.0)
      throw DegeneracyError("hidden state '" + spec.states.hidden[e] +
                            "' receives no stationary mass (zero column in P_IE)");
  d.pihat_i = normalized(spec.pi_i);
  d.pihat_e = normalized(d.pi_e);
  return d;
}

enum class CompletionMode { bernoulli, constrained, parry, uniform, external };

inline const char* to_string(CompletionMode m) {
  switch (m) {
    case CompletionMode::bernoulli: return "bernoulli";
    case CompletionMode::constrained: return "constrained";
    case CompletionMode::parry: return "parry";
    case CompletionMode::uniform: return "uniform";
    case CompletionMode::external: return "external";
  }
  return "unknown";
}

struct CompletedChain {
  PartialChainSpec spec;
  Matrix p_ee;
  CompletionMode mode = CompletionMode::external;
  Vector pi;  // full stationary vector, visible states first
  DerivedQuantities derived;

  std::size_t num_visible() const { return spec.num_visible(); }
  std::size_t num_hidden() const { return spec.num_hidden(); }

  Matrix full_matrix() const {
    const std::size_t nv = num_visible();
    const std::size_t nh = num_hidden();
    Matrix p(nv + nh, nv + nh, 0.0);
    for (std::size_t i = 0; i < nv; ++i) {
      for (std::size_t j = 0; j < nv; ++j) p(i, j) = spec.p_ii(i, j);
      for (std::size_t e = 0; e < nh; ++e) p(i, nv + e) = spec.p_ie(i, e);
    }
    for (std::size_t d = 0; d < nh; ++d) {
      for (std::size_t j = 0; j < nv; ++j) p(nv + d, j) = spec.p_ei(d, j);
      for (std::size_t e = 0; e < nh; ++e) p(nv + d, nv + e) = p_ee(d, e);
    }
    return p;
  }
};

// Glues a hidden block onto a spec and verifies the stationarity identities:
//   hidden-row-mass     every row of P_EE sums to pi(E)
//   hidden-stationarity pi_E^t P_EE = pi(E) pi_E^t
//   row-sums            every row of the assembled matrix sums to 1
//   stationarity        pi^t P = pi^t for the assembled matrix
// Throws CompletionInvalidError naming the first identity that fails.
inline CompletedChain assemble(const PartialChainSpec& spec, Matrix p_ee,
                               CompletionMode mode = CompletionMode::external,
                               double tol = kDefaultTol) {
  check_dimensions(spec);
  const std::size_t nh = spec.num_hidden();
  if (p_ee.rows() != nh || p_ee.cols() != nh)
    throw StructuralError("P_EE has the wrong shape");
  for (double x : p_ee.data())
    if (!(x >= 0.0)) throw StructuralError("P_EE has a negative or NaN entry");

  CompletedChain chain;
  chain.spec = spec;
  chain.p_ee = std::move(p_ee);
  chain.mode = mode;
  chain.derived = derive_quantities(spec);
  chain.pi = concat(spec.pi_i, chain.derived.pi_e);

  const double mass_e = chain.derived.pi_E_mass;
  double r = 0.0;
  for (std::size_t d = 0; d < nh; ++d) {
    double s = 0.0;
    for (std::size_t e = 0; e < nh; ++e) s += chain.p_ee(d, e);
    r = std::max(r, std::fabs(s - mass_e));
  }
  if (r > tol) throw CompletionInvalidError("hidden-row-mass", r);

  const Vector flow = vec_mat(chain.derived.pi_e, chain.p_ee);
  r = 0.0;
  for (std::size_t e = 0; e < nh; ++e)
    r = std::max(r, std::fabs(flow[e] - mass_e * chain.derived.pi_e[e]));
  if (r > tol) throw CompletionInvalidError("hidden-stationarity", r);

  const Matrix p = chain.full_matrix();
  const Vector rows = row_sums(p);
  r = 0.0;
  for (double s : rows) r = std::max(r, std::fabs(s - 1.0));
  if (r > tol) throw CompletionInvalidError("row-sums", r);

  const Vector through = vec_mat(chain.pi, p);
  r = sup_diff(through, chain.pi);
  if (r > tol) throw CompletionInvalidError("stationarity", r);

  return chain;
}

}  // namespace maxent
