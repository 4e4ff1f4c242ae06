#pragma once

// Block-structured hidden parts. When the hidden states split into several
// labyrinths E_1, ..., E_M with no transitions between them, each block is
// completed on its own and the blocks are reassembled into a block-diagonal
// P_EE. Two things are easy to get wrong here:
//   * the row-sum eigenvalue of EVERY block is the global pi(E), not the
//     block's own mass pi(E_m): each hidden row still exits to the visible
//     part with total probability pi(I);
//   * the per-block stationary law is the normalised restriction of pi_E.
// The hidden entropy contribution is additive across blocks, since the
// off-block entries are zero.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "maxent/chain.hpp"
#include "maxent/errors.hpp"
#include "maxent/linalg.hpp"
#include "maxent/solver.hpp"

namespace maxent {

struct BlockProblem {
  std::vector<std::size_t> members;  // hidden indices, in the order given
  Vector pi_m;                       // unnormalised stationary weights on the block
  Vector pihat_m;                    // normalised within the block
  std::optional<Matrix> comm_m;      // restriction of L to the block, when L is present
  double row_mass = 0.0;             // global pi(E); every block row sums to this
};

inline std::vector<BlockProblem> decompose(const PartialChainSpec& spec) {
  check_dimensions(spec);
  if (!spec.partition)
    throw StructuralError("decompose requires a labyrinth partition");
  const std::size_t nh = spec.num_hidden();
  {
    std::vector<int> covered(nh, 0);
    for (const auto& block : *spec.partition)
      for (std::size_t e : block) ++covered[e];
    for (std::size_t e = 0; e < nh; ++e)
      if (covered[e] != 1)
        throw StructuralError("partition must cover every hidden state exactly once");
  }
  // block-level reachability, checked on the raw columns before deriving
  const Vector inbound = vec_mat(spec.pi_i, spec.p_ie);
  for (std::size_t m = 0; m < spec.partition->size(); ++m) {
    double mass = 0.0;
    for (std::size_t e : (*spec.partition)[m]) mass += inbound[e];
    if (mass <= 0.0)
      throw StructuralError("labyrinth block " + std::to_string(m) +
                            " receives no mass from the visible part");
  }

  const DerivedQuantities d = derive_quantities(spec);
  std::vector<BlockProblem> blocks;
  blocks.reserve(spec.partition->size());
  for (const auto& members : *spec.partition) {
    BlockProblem b;
    b.members = members;
    b.pi_m.reserve(members.size());
    for (std::size_t e : members) b.pi_m.push_back(d.pi_e[e]);
    b.pihat_m = normalized(b.pi_m);
    if (spec.comm) {
      Matrix sub(members.size(), members.size(), 0.0);
      for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t c = 0; c < members.size(); ++c)
          sub(a, c) = (*spec.comm)(members[a], members[c]);
      b.comm_m = std::move(sub);
    }
    b.row_mass = d.pi_E_mass;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

struct BlockSolve {
  CompletionMode mode = CompletionMode::bernoulli;
  long iterations = 0;
  double residual = 0.0;
  double entropy_hZ = 0.0;  // entropy rate of the block's normalised chain
};

// Completes every block with the requested mode (bernoulli or constrained)
// and assembles the block-diagonal hidden matrix. Per-block failures carry
// the block index. A single all-covering block reproduces the direct solver
// output exactly, bit for bit.
inline CompletedChain complete_blocks(const PartialChainSpec& spec,
                                      const std::vector<BlockProblem>& blocks,
                                      const std::vector<CompletionMode>& modes,
                                      const SolveOptions& opts = {},
                                      double tol = kDefaultTol,
                                      std::vector<BlockSolve>* telemetry = nullptr) {
  if (modes.size() != blocks.size())
    throw StructuralError("one completion mode is required per block");
  const std::size_t nh = spec.num_hidden();
  Matrix p_ee(nh, nh, 0.0);
  bool any_constrained = false;
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    const BlockProblem& b = blocks[m];
    const std::size_t k = b.members.size();
    BlockSolve tele;
    tele.mode = modes[m];
    if (modes[m] == CompletionMode::constrained) {
      any_constrained = true;
      if (!b.comm_m)
        throw StructuralError("block " + std::to_string(m) +
                              " has no communication matrix for a constrained solve");
      ScalingResult s;
      try {
        s = scale_product_form(b.pihat_m, *b.comm_m, opts);
      } catch (const SolveError& e) {
        throw SolveError(e.kind(), e.iterations(), e.residual(),
                         "block " + std::to_string(m));
      } catch (const StructuralError& e) {
        throw StructuralError("block " + std::to_string(m) + ": " + e.what());
      }
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t c = 0; c < k; ++c)
          p_ee(b.members[a], b.members[c]) = b.row_mass * s.p_hat(a, c);
      tele.iterations = s.iterations;
      tele.residual = s.residual;
      tele.entropy_hZ = entropy_rate(b.pihat_m, s.p_hat);
    } else if (modes[m] == CompletionMode::bernoulli) {
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t c = 0; c < k; ++c)
          p_ee(b.members[a], b.members[c]) = b.row_mass * b.pihat_m[c];
      Matrix p_hat(k, k, 0.0);
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t c = 0; c < k; ++c) p_hat(a, c) = b.pihat_m[c];
      tele.entropy_hZ = entropy_rate(b.pihat_m, p_hat);
    } else {
      throw StructuralError("block completions support only bernoulli and constrained");
    }
    if (telemetry) telemetry->push_back(tele);
  }
  const CompletionMode mode =
      any_constrained ? CompletionMode::constrained : CompletionMode::bernoulli;
  return assemble(spec, std::move(p_ee), mode, tol);
}

}  // namespace maxent
