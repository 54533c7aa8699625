#pragma once

// Path sampling by thinning: within each generator piece, candidate event
// times arrive at the piece's maximal exit rate and are accepted or relabeled
// against the current state's rates. Costs accumulate exactly between events
// via the cost integral. All randomness flows through mt19937_64 with an
// explicit 53-bit mantissa mapping, so sampled paths are bit-identical across
// platforms for a fixed seed.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "ctmrisk/cost.hpp"
#include "ctmrisk/generator.hpp"
#include "ctmrisk/types.hpp"

namespace ctmrisk {

using Rng = std::mt19937_64;

// Uniform on [0, 1) with exactly 53 random bits; unlike
// uniform_real_distribution this is pinned by the standard's engine spec.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double exponential(Rng& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

template <typename Scalar = double>
struct PathSample {
  Scalar start_time = 0;
  Scalar end_time = 0;
  Index initial_state = 0;
  std::vector<Scalar> jump_times;
  std::vector<Index> states_after_jump;
  Scalar running_cost = 0;  // integral of the running rate along the path

  Index final_state() const {
    return states_after_jump.empty() ? initial_state : states_after_jump.back();
  }

  Index state_at(Scalar t) const {
    if (!(t >= start_time) || !(t <= end_time))
      throw std::domain_error("path: time outside the sampled window");
    Index s = initial_state;
    for (std::size_t k = 0; k < jump_times.size() && jump_times[k] <= t; ++k)
      s = states_after_jump[k];
    return s;
  }
};

template <typename Scalar>
PathSample<Scalar> simulate_path(const GeneratorSchedule<Scalar>& gen, const CostSpec<Scalar>& cost,
                                 Scalar t, Scalar r, Index start, Rng& rng) {
  if (!(t >= Scalar(0)) || !(r <= gen.horizon()) || !(t <= r))
    throw std::domain_error("simulate_path: need 0 <= t <= r <= horizon");
  if (start < 0 || start >= gen.states())
    throw std::domain_error("simulate_path: start state out of range");

  PathSample<Scalar> path;
  path.start_time = t;
  path.end_time = r;
  path.initial_state = start;

  Index x = start;
  Scalar now = t;
  while (now < r) {
    const Index j = gen.piece_index(now);
    const Scalar piece_stop = j + 1 < gen.piece_count() ? std::min(r, gen.piece_end(j)) : r;
    const MatrixX<Scalar>& g = gen.piece(j);
    const Scalar cap = gen.max_exit_rate(j);
    if (cap <= Scalar(0)) {
      // Piece is absorbing everywhere; coast to its end.
      path.running_cost += cost.integral(x, now, piece_stop);
      now = piece_stop;
      continue;
    }
    const Scalar wait = Scalar(exponential(rng, static_cast<double>(cap)));
    if (now + wait >= piece_stop) {
      path.running_cost += cost.integral(x, now, piece_stop);
      now = piece_stop;
      continue;
    }
    const Scalar event = now + wait;
    path.running_cost += cost.integral(x, now, event);
    now = event;
    // Accept a jump out of x with probability exit_rate(x)/cap, choosing the
    // target in index order; otherwise the candidate is thinned away.
    const Scalar u = Scalar(uniform01(rng)) * cap;
    Scalar acc = Scalar(0);
    Index target = -1;
    for (Index y = 0; y < gen.states(); ++y) {
      if (y == x) continue;
      acc += g(x, y);
      if (u < acc) {
        target = y;
        break;
      }
    }
    if (target >= 0) {
      x = target;
      path.jump_times.push_back(now);
      path.states_after_jump.push_back(x);
    }
  }
  return path;
}

// Total cost of one sampled path: exact running integral plus terminal cost.
template <typename Scalar>
Scalar path_cost(const PathSample<Scalar>& path, const CostSpec<Scalar>& cost) {
  return path.running_cost + cost.terminal()(path.final_state());
}

}  // namespace ctmrisk
