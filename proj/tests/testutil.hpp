#pragma once

// Seeded generators for property-style tests. Everything funnels through the
// library's own 53-bit uniform so test inputs are reproducible bit for bit.

#include <ctmrisk/ctmrisk.hpp>

#include <vector>

namespace testutil {

using ctmrisk::Index;
using ctmrisk::Rng;

inline double unif(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return lo + (hi - lo) * ctmrisk::uniform01(rng);
}

inline Eigen::VectorXd random_vector(Rng& rng, Index n, double lo = -5.0, double hi = 5.0) {
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = unif(rng, lo, hi);
  return v;
}

// Strictly positive probability vector with entries bounded away from zero,
// so dual densities stay well conditioned.
inline Eigen::VectorXd random_measure(Rng& rng, Index n) {
  Eigen::VectorXd m(n);
  for (Index i = 0; i < n; ++i) m(i) = 0.05 + unif(rng);
  return m / m.sum();
}

// Probability vector with roughly the given fraction of exact zeros (never
// all zeros).
inline Eigen::VectorXd random_sparse_measure(Rng& rng, Index n, double zero_fraction = 0.4) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  double sum = 0;
  for (Index i = 0; i < n; ++i) {
    if (unif(rng) < zero_fraction) continue;
    m(i) = 0.05 + unif(rng);
    sum += m(i);
  }
  if (sum == 0) {
    m(static_cast<Index>(unif(rng) * static_cast<double>(n)) % n) = 1.0;
    sum = 1.0;
  }
  return m / sum;
}

// Generator-style row with diagonal at x: nonnegative off-diagonal rates,
// diagonal balancing the sum to zero.
inline Eigen::VectorXd random_tangent_row(Rng& rng, Index n, Index x, double scale = 1.0,
                                          double zero_fraction = 0.3) {
  Eigen::VectorXd k = Eigen::VectorXd::Zero(n);
  for (Index y = 0; y < n; ++y) {
    if (y == x) continue;
    if (unif(rng) < zero_fraction) continue;
    k(y) = scale * unif(rng, 0.1, 1.0);
  }
  k(x) = -k.sum();
  return k;
}

inline Eigen::MatrixXd random_generator_matrix(Rng& rng, Index n, double scale = 1.0) {
  Eigen::MatrixXd g(n, n);
  for (Index x = 0; x < n; ++x) g.row(x) = random_tangent_row(rng, n, x, scale).transpose();
  return g;
}

inline ctmrisk::MarkovModel<double> random_model(Rng& rng, Index n, double horizon, bool with_cost,
                                                 double rate_scale = 1.0) {
  ctmrisk::GeneratorSchedule<double> gen(random_generator_matrix(rng, n, rate_scale), horizon);
  Eigen::VectorXd terminal = random_vector(rng, n, -2.0, 2.0);
  if (!with_cost)
    return {ctmrisk::StateSpace::numbered(n), std::move(gen),
            ctmrisk::CostSpec<double>::terminal_only(std::move(terminal))};
  std::vector<double> times{0.0, horizon / 2.0, horizon};
  Eigen::MatrixXd values(3, n);
  for (int r = 0; r < 3; ++r) values.row(r) = random_vector(rng, n, -1.0, 1.0).transpose();
  return {ctmrisk::StateSpace::numbered(n), std::move(gen),
          ctmrisk::CostSpec<double>(times, std::move(values), std::move(terminal))};
}

}  // namespace testutil
