#pragma once

// Exact transition kernels of the piecewise-constant generator: products of
// matrix exponentials, one factor per generator piece overlapped by [t, r].
// These satisfy the two-parameter semigroup identity Q(t,s) Q(s,r) = Q(t,r)
// up to rounding and serve as the risk-neutral ground truth everywhere else.

#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "ctmrisk/generator.hpp"
#include "ctmrisk/types.hpp"

namespace ctmrisk {

template <typename Scalar>
MatrixX<Scalar> transition_matrix(const GeneratorSchedule<Scalar>& gen, Scalar t, Scalar r) {
  if (!(t >= Scalar(0)) || !(r <= gen.horizon()) || !(t <= r))
    throw std::domain_error("transition_matrix: need 0 <= t <= r <= horizon");
  const Index n = gen.states();
  MatrixX<Scalar> q = MatrixX<Scalar>::Identity(n, n);
  if (t == r) return q;
  Index j = gen.piece_index(t);
  Scalar pos = t;
  while (pos < r) {
    const Scalar stop = j + 1 < gen.piece_count() ? std::min(r, gen.piece_end(j)) : r;
    if (stop > pos) q = q * ((stop - pos) * gen.piece(j)).exp();
    pos = stop;
    ++j;
  }
  return q;
}

}  // namespace ctmrisk
