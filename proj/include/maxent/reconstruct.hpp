#pragma once

// Splice reconstruction of the full chain from its visible skeleton.
//
// Collapsing the labyrinth of a completed chain gives the visible skeleton
//   Q(i, j) = P(i, j) + P(i, E) pihat_I(j),
// stochastic and stationary for pihat_I, together with the gate probabilities
//   theta(i, j) = P(i, j) / Q(i, j)   (0 where Q vanishes):
// given a skeleton step i -> j, theta(i, j) is the chance the original chain
// made it in one step rather than through the labyrinth. The splice sampler
// runs the skeleton and re-inflates the hidden excursions:
//   * gate open  (prob theta): emit j directly;
//   * gate closed: enter the labyrinth at U ~ P(i, .)/P(i, E), then keep
//     walking inside E with kernel P_EE / pi(E), exiting with probability
//     pi(I) at each step (the exit law is uniform over steps because every
//     hidden row exits with total mass pi(I)); then emit j.
// The process starts stationary: a killed excursion drawn from pihat_E fills
// positions [0, S_0) and the first visible state W(S_0) is drawn from
// pihat_I. The output law equals that of the direct chain; compare_laws
// checks four statistics of a long trace against it.
//
// Determinism: one generator, seeded once, consumed in a fixed documented
// order. Initial segment: pihat_E draw for the (unemitted) seed state, then
// per step: exit test, then (if staying) the within-labyrinth draw; finally
// the pihat_I draw for W(S_0). Per skeleton step: the Q-row draw, then the
// gate draw, then (closed gate only) the entry draw, then per excursion step
// an exit test followed, while staying, by the within-labyrinth draw. Every
// categorical draw inverts the row's running CDF on a single uniform.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "maxent/chain.hpp"
#include "maxent/errors.hpp"
#include "maxent/linalg.hpp"
#include "maxent/stats.hpp"

namespace maxent {

struct SkeletonKernel {
  Matrix q;
  Matrix theta;
};

inline SkeletonKernel build_skeleton(const CompletedChain& chain) {
  const std::size_t nv = chain.num_visible();
  const std::size_t nh = chain.num_hidden();
  SkeletonKernel k;
  k.q = Matrix(nv, nv, 0.0);
  k.theta = Matrix(nv, nv, 0.0);
  Vector exit_mass(nv, 0.0);
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t e = 0; e < nh; ++e) exit_mass[i] += chain.spec.p_ie(i, e);
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t j = 0; j < nv; ++j) {
      const double q = chain.spec.p_ii(i, j) + exit_mass[i] * chain.derived.pihat_i[j];
      k.q(i, j) = q;
      k.theta(i, j) = q > 0.0 ? chain.spec.p_ii(i, j) / q : 0.0;
    }
  // the skeleton must again be stationary for pihat_I
  const Vector flow = vec_mat(chain.derived.pihat_i, k.q);
  const double r = sup_diff(flow, chain.derived.pihat_i);
  if (r > kDefaultTol) throw CompletionInvalidError("skeleton-stationarity", r);
  return k;
}

enum class SegmentKind { visible_step, excursion };

struct Segment {
  SegmentKind kind = SegmentKind::visible_step;
  std::size_t begin = 0;
  std::size_t end = 0;  // half-open [begin, end)
};

struct SpliceTrace {
  std::vector<std::size_t> w;  // global state indices, visible states first
  std::vector<std::size_t> renewal_times;
  std::vector<Segment> segments;
  std::uint64_t seed = 0;
};

namespace detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Inverts the CDF of the (possibly unnormalised) weight row.
  std::size_t categorical(const double* w, std::size_t n, double total) {
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += w[k];
      if (u < acc) return k;
    }
    for (std::size_t k = n; k-- > 0;)
      if (w[k] > 0.0) return k;
    throw std::logic_error("categorical draw over an all-zero row");
  }

  std::size_t categorical(const Vector& w, double total) {
    return categorical(w.data(), w.size(), total);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace detail

inline SpliceTrace simulate_splice(const CompletedChain& chain,
                                   const SkeletonKernel& kernel, std::size_t steps,
                                   std::uint64_t seed) {
  if (steps == 0) throw StructuralError("a trace needs at least one step");
  const std::size_t nv = chain.num_visible();
  const std::size_t nh = chain.num_hidden();
  const double mass_i = chain.derived.pi_I_mass;
  const double mass_e = chain.derived.pi_E_mass;
  Vector exit_mass(nv, 0.0);
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t e = 0; e < nh; ++e) exit_mass[i] += chain.spec.p_ie(i, e);
  double total_exit = 0.0;
  for (double x : exit_mass) total_exit += x;

  detail::Rng rng(seed);
  SpliceTrace tr;
  tr.seed = seed;
  tr.w.reserve(steps + 16);

  std::size_t open_excursion_begin = 0;
  bool in_excursion = false;
  auto emit_hidden = [&](std::size_t e) {
    if (!in_excursion) {
      in_excursion = true;
      open_excursion_begin = tr.w.size();
    }
    tr.w.push_back(nv + e);
  };
  auto emit_visible = [&](std::size_t i) {
    if (in_excursion) {
      tr.segments.push_back({SegmentKind::excursion, open_excursion_begin, tr.w.size()});
      in_excursion = false;
    }
    tr.renewal_times.push_back(tr.w.size());
    tr.segments.push_back({SegmentKind::visible_step, tr.w.size(), tr.w.size() + 1});
    tr.w.push_back(i);
  };

  // stationary start: a killed excursion from pihat_E fills [0, S_0)
  if (total_exit > 0.0) {
    std::size_t z = rng.categorical(chain.derived.pihat_e, 1.0);  // seed state, not emitted
    while (rng.uniform() >= mass_i) {
      z = rng.categorical(&chain.p_ee.data()[z * nh], nh, mass_e);
      emit_hidden(z);
      if (tr.w.size() >= steps) break;
    }
  }
  std::size_t current = rng.categorical(chain.derived.pihat_i, 1.0);
  emit_visible(current);

  while (tr.w.size() < steps) {
    const std::size_t next =
        rng.categorical(&kernel.q.data()[current * nv], nv, 1.0);
    const double gate = rng.uniform();
    if (gate < kernel.theta(current, next)) {
      emit_visible(next);
    } else {
      if (!(exit_mass[current] > 0.0))
        throw std::logic_error("closed gate from a state with no labyrinth exits");
      std::size_t d = rng.categorical(&chain.spec.p_ie.data()[current * nh], nh,
                                      exit_mass[current]);
      emit_hidden(d);
      while (tr.w.size() < steps && rng.uniform() >= mass_i) {
        d = rng.categorical(&chain.p_ee.data()[d * nh], nh, mass_e);
        emit_hidden(d);
      }
      if (tr.w.size() < steps) emit_visible(next);
    }
    current = next;
  }

  if (in_excursion)
    tr.segments.push_back({SegmentKind::excursion, open_excursion_begin, tr.w.size()});
  // clip the overshoot back to the requested horizon
  while (!tr.segments.empty() && tr.segments.back().begin >= steps) tr.segments.pop_back();
  if (!tr.segments.empty() && tr.segments.back().end > steps)
    tr.segments.back().end = steps;
  while (!tr.renewal_times.empty() && tr.renewal_times.back() >= steps)
    tr.renewal_times.pop_back();
  tr.w.resize(steps);
  return tr;
}

inline SpliceTrace simulate_splice(const CompletedChain& chain, std::size_t steps,
                                   std::uint64_t seed) {
  return simulate_splice(chain, build_skeleton(chain), steps, seed);
}

// Plain stationary simulation of the assembled chain, for cross-checks.
inline std::vector<std::size_t> simulate_direct(const CompletedChain& chain,
                                                std::size_t steps, std::uint64_t seed) {
  if (steps == 0) throw StructuralError("a trace needs at least one step");
  const Matrix p = chain.full_matrix();
  const std::size_t n = p.rows();
  detail::Rng rng(seed);
  std::vector<std::size_t> w;
  w.reserve(steps);
  std::size_t a = rng.categorical(chain.pi, sum(chain.pi));
  w.push_back(a);
  const Vector totals = row_sums(p);
  while (w.size() < steps) {
    a = rng.categorical(&p.data()[a * n], n, totals[a]);
    w.push_back(a);
  }
  return w;
}

struct SimStats {
  Matrix empirical_p;
  std::vector<std::size_t> gap_histogram;  // index = renewal gap
  Vector marginal;
  Vector visible_marginal_at_renewals;
};

enum class SimVerdict { pass, fail, inconclusive };

inline const char* to_string(SimVerdict v) {
  switch (v) {
    case SimVerdict::pass: return "pass";
    case SimVerdict::fail: return "fail";
    case SimVerdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct CriterionResult {
  std::string name;
  bool evaluated = false;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
};

struct ComparisonReport {
  SimStats stats;
  std::vector<CriterionResult> criteria;
  SimVerdict verdict = SimVerdict::inconclusive;
};

/// Four checks against the target law on a long trace:
//   transition-sup  every transition with pi(a) P(a,b) >= 1e-3 is within 3
//                   binomial sigma of its empirical frequency
//   gap-geometric   renewal gaps fit Geometric(pi(I)); chi-square, 1% level
//   renewal-law     TV between the visible law at renewal times and pihat_I
//                   is at most 0.01
//   visible-time    the fraction of time spent visible is within 3 sigma of
//                   pi(I)
// Traces shorter than 1e5, or with too few samples behind one of the checks,
// give an inconclusive verdict rather than a pass.
inline ComparisonReport compare_laws(const SpliceTrace& tr, const CompletedChain& chain) {
  const std::size_t nv = chain.num_visible();
  const std::size_t n = nv + chain.num_hidden();
  const std::size_t len = tr.w.size();
  const Matrix p = chain.full_matrix();
  const double mass_i = chain.derived.pi_I_mass;
  const double mass_e = chain.derived.pi_E_mass;

  ComparisonReport rep;

  std::vector<std::size_t> counts(n * n, 0), visits(n, 0), occupancy(n, 0);
  for (std::size_t t = 0; t + 1 < len; ++t) {
    ++counts[tr.w[t] * n + tr.w[t + 1]];
    ++visits[tr.w[t]];
  }
  for (std::size_t t = 0; t < len; ++t) ++occupancy[tr.w[t]];
  rep.stats.empirical_p = Matrix(n, n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    if (visits[a] > 0)
      for (std::size_t b = 0; b < n; ++b)
        rep.stats.empirical_p(a, b) =
            static_cast<double>(counts[a * n + b]) / static_cast<double>(visits[a]);
  rep.stats.marginal = Vector(n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    rep.stats.marginal[a] = static_cast<double>(occupancy[a]) / static_cast<double>(len);

  std::vector<std::size_t> gaps;
  gaps.reserve(tr.renewal_times.size());
  std::size_t max_gap = 0;
  for (std::size_t k = 0; k + 1 < tr.renewal_times.size(); ++k) {
    const std::size_t g = tr.renewal_times[k + 1] - tr.renewal_times[k];
    gaps.push_back(g);
    max_gap = std::max(max_gap, g);
  }
  rep.stats.gap_histogram.assign(max_gap + 1, 0);
  for (std::size_t g : gaps) ++rep.stats.gap_histogram[g];

  rep.stats.visible_marginal_at_renewals = Vector(nv, 0.0);
  for (std::size_t t : tr.renewal_times) ++rep.stats.visible_marginal_at_renewals[tr.w[t]];
  if (!tr.renewal_times.empty())
    for (double& x : rep.stats.visible_marginal_at_renewals)
      x /= static_cast<double>(tr.renewal_times.size());

  if (len < 100000) {
    rep.verdict = SimVerdict::inconclusive;
    return rep;
  }

  bool any_unevaluated = false;

  {  // transition-sup
    CriterionResult c;
    c.name = "transition-sup";
    c.bound = 3.0;
    c.evaluated = true;
    c.pass = true;
    for (std::size_t a = 0; a < n && c.evaluated; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        if (chain.pi[a] * p(a, b) < 1e-3) continue;
        if (visits[a] < 100) {
          c.evaluated = false;
          break;
        }
        const double prob = p(a, b);
        const double sigma =
            std::sqrt(prob * (1.0 - prob) / static_cast<double>(visits[a]));
        const double dev = std::fabs(rep.stats.empirical_p(a, b) - prob);
        if (sigma == 0.0) {
          if (dev > 0.0) c.pass = false;
          continue;
        }
        c.value = std::max(c.value, dev / sigma);
      }
    if (c.value > c.bound) c.pass = false;
    if (!c.evaluated) any_unevaluated = true;
    rep.criteria.push_back(c);
  }

  {  // gap-geometric
    CriterionResult c;
    c.name = "gap-geometric";
    c.bound = 0.01;  // reject below this p-value
    if (gaps.size() < 1000) {
      any_unevaluated = true;
    } else if (mass_e == 0.0) {
      c.evaluated = true;
      c.pass = true;
      for (std::size_t g : gaps)
        if (g != 1) c.pass = false;
      c.value = 1.0;
    } else {
      const double ng = static_cast<double>(gaps.size());
      std::vector<double> expected;
      std::vector<std::size_t> observed;
      double tail_prob = 1.0;
      std::size_t g = 1;
      while (ng * mass_i * std::pow(mass_e, static_cast<double>(g - 1)) >= 5.0) {
        const double prob = mass_i * std::pow(mass_e, static_cast<double>(g - 1));
        expected.push_back(ng * prob);
        std::size_t obs = g < rep.stats.gap_histogram.size()
                              ? rep.stats.gap_histogram[g] : 0;
        observed.push_back(obs);
        tail_prob -= prob;
        ++g;
      }
      std::size_t tail_obs = 0;
      for (std::size_t gg = g; gg < rep.stats.gap_histogram.size(); ++gg)
        tail_obs += rep.stats.gap_histogram[gg];
      if (tail_prob > 0.0) {
        expected.push_back(ng * tail_prob);
        observed.push_back(tail_obs);
      }
      double stat = 0.0;
      for (std::size_t k = 0; k < expected.size(); ++k) {
        const double diff = static_cast<double>(observed[k]) - expected[k];
        stat += diff * diff / expected[k];
      }
      c.evaluated = true;
      c.value = chi_square_pvalue(stat, static_cast<double>(expected.size() - 1));
      c.pass = c.value >= c.bound;
    }
    rep.criteria.push_back(c);
  }

  {  // renewal-law
    CriterionResult c;
    c.name = "renewal-law";
    c.bound = 0.01;
    if (tr.renewal_times.size() < 1000) {
      any_unevaluated = true;
    } else {
      c.evaluated = true;
      c.value = total_variation(rep.stats.visible_marginal_at_renewals,
                                chain.derived.pihat_i);
      c.pass = c.value <= c.bound;
    }
    rep.criteria.push_back(c);
  }

  {  // visible-time
    CriterionResult c;
    c.name = "visible-time";
    c.evaluated = true;
    double visible_time = 0.0;
    for (std::size_t a = 0; a < nv; ++a) visible_time += rep.stats.marginal[a];
    const double sigma = std::sqrt(mass_i * mass_e / static_cast<double>(len));
    c.value = std::fabs(visible_time - mass_i);
    c.bound = 3.0 * sigma;
    c.pass = sigma == 0.0 ? visible_time == mass_i : c.value <= c.bound;
    rep.criteria.push_back(c);
  }

  if (any_unevaluated) {
    rep.verdict = SimVerdict::inconclusive;
    return rep;
  }
  rep.verdict = SimVerdict::pass;
  for (const auto& c : rep.criteria)
    if (!c.pass) rep.verdict = SimVerdict::fail;
  return rep;
}

}  // namespace maxent
