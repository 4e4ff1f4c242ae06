#pragma once

// In-code copies of the desk-scale fixtures used across the test suite.

#include "maxent/chain.hpp"

namespace fixtures {

using maxent::Matrix;
using maxent::PartialChainSpec;

inline Matrix matrix(std::size_t rows, std::size_t cols,
                     std::initializer_list<double> vals) {
  Matrix m(rows, cols, 0.0);
  std::size_t i = 0;
  for (double v : vals) m.data()[i++] = v;
  return m;
}

// |I| = 2, |E| = 2, pi(I) = 0.6, pi_E = (0.15, 0.25)
inline PartialChainSpec desk() {
  PartialChainSpec spec;
  spec.states.visible = {"i1", "i2"};
  spec.states.hidden = {"e1", "e2"};
  spec.p_ii = matrix(2, 2, {0.3, 0.3, 0.3, 0.3});
  spec.p_ie = matrix(2, 2, {0.2, 0.2, 0.1, 0.3});
  spec.p_ei = matrix(2, 2, {0.3, 0.3, 0.3, 0.3});
  spec.pi_i = {0.3, 0.3};
  return spec;
}

inline PartialChainSpec desk_constrained() {
  PartialChainSpec spec = desk();
  spec.comm = matrix(2, 2, {0, 1, 1, 1});
  return spec;
}

// |I| = 2, |E| = 3, hidden part split {e1} | {e2, e3}; pi_E = (0.15, 0.15, 0.1)
inline PartialChainSpec two_labyrinths() {
  PartialChainSpec spec;
  spec.states.visible = {"i1", "i2"};
  spec.states.hidden = {"e1", "e2", "e3"};
  spec.p_ii = matrix(2, 2, {0.3, 0.3, 0.3, 0.3});
  spec.p_ie = matrix(2, 3, {0.2, 0.1, 0.1, 0.1, 0.2, 0.1});
  spec.p_ei = matrix(3, 2, {0.3, 0.3, 0.3, 0.3, 0.3, 0.3});
  spec.pi_i = {0.3, 0.3};
  spec.partition = {{0}, {1, 2}};
  return spec;
}

inline PartialChainSpec two_labyrinths_constrained() {
  PartialChainSpec spec = two_labyrinths();
  spec.comm = matrix(3, 3, {1, 0, 0, 0, 1, 1, 0, 1, 0});
  return spec;
}

// |I| = 1 carrier for the infeasible 3-state pattern: pihat_E = (0.6, 0.25, 0.15)
// against a hollow (zero-diagonal) L
inline PartialChainSpec infeasible_carrier() {
  PartialChainSpec spec;
  spec.states.visible = {"i"};
  spec.states.hidden = {"e1", "e2", "e3"};
  spec.p_ii = matrix(1, 1, {0.5});
  spec.p_ie = matrix(1, 3, {0.3, 0.125, 0.075});
  spec.p_ei = matrix(3, 1, {0.5, 0.5, 0.5});
  spec.pi_i = {0.5};
  spec.comm = matrix(3, 3, {0, 1, 1, 1, 0, 1, 1, 1, 0});
  return spec;
}

}  // namespace fixtures
