#include <cmath>
#include <cstddef>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "maxent/reconstruct.hpp"
#include "maxent/solver.hpp"
#include "support/fixtures.hpp"

using namespace maxent;
using Catch::Matchers::WithinAbs;

namespace {

void require_segments_tile(const SpliceTrace& tr, std::size_t nv) {
  REQUIRE_FALSE(tr.segments.empty());
  CHECK(tr.segments.front().begin == 0);
  CHECK(tr.segments.back().end == tr.w.size());
  std::size_t cursor = 0;
  for (const Segment& s : tr.segments) {
    CHECK(s.begin == cursor);
    REQUIRE(s.end > s.begin);
    for (std::size_t t = s.begin; t < s.end; ++t) {
      if (s.kind == SegmentKind::excursion)
        CHECK(tr.w[t] >= nv);
      else
        CHECK(tr.w[t] < nv);
    }
    if (s.kind == SegmentKind::visible_step) CHECK(s.end - s.begin == 1);
    cursor = s.end;
  }
}

}  // namespace

TEST_CASE("skeleton of the desk example", "[reconstruct]") {
  const CompletedChain chain = complete_bernoulli(fixtures::desk());
  const SkeletonKernel k = build_skeleton(chain);
  REQUIRE(k.q.rows() == 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK_THAT(k.q(i, j), WithinAbs(0.5, 1e-12));
      CHECK_THAT(k.theta(i, j), WithinAbs(0.6, 1e-12));
    }
}

TEST_CASE("skeleton balance identities", "[reconstruct]") {
  const CompletedChain chain = complete_bernoulli(fixtures::desk());
  const SkeletonKernel k = build_skeleton(chain);
  const std::size_t nv = chain.num_visible();
  const std::size_t nh = chain.num_hidden();

  // rows are stochastic and the visible law is preserved
  for (double s : row_sums(k.q)) CHECK_THAT(s, WithinAbs(1.0, 1e-12));
  CHECK(sup_diff(vec_mat(chain.derived.pihat_i, k.q), chain.derived.pihat_i) <= 1e-12);

  Vector exit_mass(nv, 0.0);
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t e = 0; e < nh; ++e) exit_mass[i] += chain.spec.p_ie(i, e);

  // closed-gate mass from i, routed by the entry law, reproduces the exit row:
  //   sum_j Q(i,j) (1 - theta(i,j)) P(i,d)/P(i,E) = P(i,d)
  for (std::size_t i = 0; i < nv; ++i) {
    double closed = 0.0;
    for (std::size_t j = 0; j < nv; ++j) closed += k.q(i, j) * (1.0 - k.theta(i, j));
    for (std::size_t d = 0; d < nh; ++d) {
      const double lhs = closed * chain.spec.p_ie(i, d) / exit_mass[i];
      CHECK(std::fabs(lhs - chain.spec.p_ie(i, d)) <= 1e-12);
    }
  }
  // and averaging the entry law over pihat_I recovers the hidden weights
  for (std::size_t d = 0; d < nh; ++d) {
    double avg = 0.0;
    for (std::size_t i = 0; i < nv; ++i)
      avg += chain.derived.pihat_i[i] * chain.spec.p_ie(i, d);
    CHECK(std::fabs(avg - chain.derived.pi_e[d]) <= 1e-12);
  }
}

TEST_CASE("traces are reproducible and seed-sensitive", "[reconstruct]") {
  const CompletedChain chain = complete_bernoulli(fixtures::desk());
  const SpliceTrace a = simulate_splice(chain, 5000, 99);
  const SpliceTrace b = simulate_splice(chain, 5000, 99);
  const SpliceTrace c = simulate_splice(chain, 5000, 100);
  CHECK(a.w == b.w);
  CHECK(a.renewal_times == b.renewal_times);
  REQUIRE(a.segments.size() == b.segments.size());
  for (std::size_t k = 0; k < a.segments.size(); ++k) {
    CHECK(a.segments[k].kind == b.segments[k].kind);
    CHECK(a.segments[k].begin == b.segments[k].begin);
    CHECK(a.segments[k].end == b.segments[k].end);
  }
  CHECK(a.w != c.w);
}

TEST_CASE("trace bookkeeping invariants", "[reconstruct]") {
  const CompletedChain chain = complete_bernoulli(fixtures::desk());
  const std::size_t nv = chain.num_visible();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const std::size_t steps = 5000;
    const SpliceTrace tr = simulate_splice(chain, steps, seed);
    REQUIRE(tr.w.size() == steps);
    for (std::size_t x : tr.w) CHECK(x < nv + chain.num_hidden());
    // renewal times are exactly the visible positions, in increasing order
    std::vector<std::size_t> visible_positions;
    for (std::size_t t = 0; t < steps; ++t)
      if (tr.w[t] < nv) visible_positions.push_back(t);
    CHECK(tr.renewal_times == visible_positions);
    require_segments_tile(tr, nv);
  }
}

TEST_CASE("the trace starts in the stationary law", "[reconstruct]") {
  const CompletedChain chain = complete_bernoulli(fixtures::desk());
  const SkeletonKernel kernel = build_skeleton(chain);
  const std::size_t n = chain.pi.size();
  const std::size_t trials = 300000;
  Vector freq(n, 0.0);
  for (std::size_t s = 0; s < trials; ++s) {
    const SpliceTrace tr = simulate_splice(chain, kernel, 2, 777000 + s);
    freq[tr.w[0]] += 1.0;
  }
  for (double& x : freq) x /= static_cast<double>(trials);
  CHECK(total_variation(freq, chain.pi) <= 0.005);
}

TEST_CASE("a long trace passes all four comparison checks", "[reconstruct]") {
  const CompletedChain chain = complete_bernoulli(fixtures::desk());
  const SpliceTrace tr = simulate_splice(chain, 300000, 20240817);
  const ComparisonReport rep = compare_laws(tr, chain);
  CHECK(rep.verdict == SimVerdict::pass);
  REQUIRE(rep.criteria.size() == 4);
  for (const CriterionResult& c : rep.criteria) {
    INFO(c.name);
    CHECK(c.evaluated);
    CHECK(c.pass);
  }
}

TEST_CASE("halving the gate probabilities is caught", "[reconstruct]") {
  const CompletedChain chain = complete_bernoulli(fixtures::desk());
  SkeletonKernel wrong = build_skeleton(chain);
  for (std::size_t i = 0; i < wrong.theta.rows(); ++i)
    for (std::size_t j = 0; j < wrong.theta.cols(); ++j) wrong.theta(i, j) *= 0.5;
  const SpliceTrace tr = simulate_splice(chain, wrong, 300000, 20240817);
  const ComparisonReport rep = compare_laws(tr, chain);
  CHECK(rep.verdict == SimVerdict::fail);
  bool transition_failed = false;
  for (const CriterionResult& c : rep.criteria)
    if (c.name == "transition-sup" && c.evaluated && !c.pass) transition_failed = true;
  CHECK(transition_failed);
}

TEST_CASE("short traces give an inconclusive verdict", "[reconstruct]") {
  const CompletedChain chain = complete_bernoulli(fixtures::desk());
  const SpliceTrace tr = simulate_splice(chain, 10000, 5);
  const ComparisonReport rep = compare_laws(tr, chain);
  CHECK(rep.verdict == SimVerdict::inconclusive);
  CHECK(rep.criteria.empty());
  CHECK(rep.stats.marginal.size() == 4);
}

TEST_CASE("direct simulation of the assembled chain", "[reconstruct]") {
  const CompletedChain chain = complete_bernoulli(fixtures::desk());
  const auto w = simulate_direct(chain, 200000, 31);
  REQUIRE(w.size() == 200000);
  Vector freq(chain.pi.size(), 0.0);
  for (std::size_t x : w) {
    REQUIRE(x < chain.pi.size());
    freq[x] += 1.0;
  }
  for (double& x : freq) x /= static_cast<double>(w.size());
  CHECK(total_variation(freq, chain.pi) <= 0.01);
  CHECK(simulate_direct(chain, 100, 31) == std::vector<std::size_t>(w.begin(), w.begin() + 100));
  CHECK_THROWS_AS(simulate_direct(chain, 0, 1), StructuralError);
}
