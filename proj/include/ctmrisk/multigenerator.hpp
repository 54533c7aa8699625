#pragma once

// Risk multigenerators: the sets of generator directions that drive the
// risk-averse backward equation, communicated through their support
// functions s(v) = max_D <v, D(.|x)>. For a generator row K(.|x) in the
// tangent cone:
//
//   expectation      s(v) = sum_y K(y|x) v(y)
//   AVaR             s(v) = (1/alpha(x)) sum_{y != x} K(y|x) (v(y) - v(x))_+
//   semideviation,   s(v) = S + kappa(x) [ sum_{y != x} K(y|x) (v(y)-v(x))_+
//   order 1                                + max(-S, 0) ]
//                    with S = sum_{y != x} K(y|x) (v(y) - v(x))
//
// support_bruteforce re-derives these values from the direction sets
// themselves (box corners of capped rates for AVaR, multiplier-box vertices
// for semideviation), so the closed forms above are testable against it.
// The worst-case mapping max_{m(y) > 0} v(y) has no semi-derivative; its
// difference quotients blow up like 1/epsilon, which the fd check below
// surfaces as a non-convergence diagnostic.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ctmrisk/kernels.hpp"
#include "ctmrisk/risk_mappings.hpp"
#include "ctmrisk/types.hpp"

namespace ctmrisk {

template <typename DerivedK, typename DerivedV>
typename DerivedV::Scalar support_expectation(const Eigen::MatrixBase<DerivedK>& k_row,
                                              const Eigen::MatrixBase<DerivedV>& v) {
  if (k_row.size() != v.size()) throw std::invalid_argument("support: row/value size mismatch");
  // Indexed sum so row- and column-shaped arguments mix freely.
  typename DerivedV::Scalar acc(0);
  for (Index y = 0; y < v.size(); ++y) acc += k_row(y) * v(y);
  return acc;
}

template <typename Scalar, typename DerivedK, typename DerivedV>
Scalar support_avar(const RiskMappingSpec<Scalar>& spec, Index x,
                    const Eigen::MatrixBase<DerivedK>& k_row, const Eigen::MatrixBase<DerivedV>& v) {
  if (k_row.size() != spec.states() || v.size() != spec.states())
    throw std::invalid_argument("support: row/value size mismatch");
  Scalar acc = Scalar(0);
  for (Index y = 0; y < v.size(); ++y)
    if (y != x) acc += k_row(y) * std::max(v(y) - v(x), Scalar(0));
  return acc / spec.alpha(x);
}

template <typename Scalar, typename DerivedK, typename DerivedV>
Scalar support_semideviation(const RiskMappingSpec<Scalar>& spec, Index x,
                             const Eigen::MatrixBase<DerivedK>& k_row,
                             const Eigen::MatrixBase<DerivedV>& v) {
  if (k_row.size() != spec.states() || v.size() != spec.states())
    throw std::invalid_argument("support: row/value size mismatch");
  if (spec.order() != Scalar(1))
    throw ConfigError("support_semideviation: closed form exists for order p = 1 only");
  Scalar drift = Scalar(0), up = Scalar(0);
  for (Index y = 0; y < v.size(); ++y) {
    if (y == x) continue;
    const Scalar d = k_row(y) * (v(y) - v(x));
    drift += d;
    up += std::max(d, Scalar(0));
  }
  return drift + spec.kappa(x) * (up + std::max(-drift, Scalar(0)));
}

// Dispatch on the mapping family; ConfigError where no closed form exists
// (semideviation with p > 1 goes through the finite-difference check
// instead).
template <typename Scalar, typename DerivedK, typename DerivedV>
Scalar support_function(const RiskMappingSpec<Scalar>& spec, Index x,
                        const Eigen::MatrixBase<DerivedK>& k_row, const Eigen::MatrixBase<DerivedV>& v) {
  switch (spec.kind()) {
    case RiskKind::expectation:
      if (k_row.size() != spec.states() || v.size() != spec.states())
        throw std::invalid_argument("support: row/value size mismatch");
      return support_expectation(k_row, v);
    case RiskKind::avar:
      return support_avar(spec, x, k_row, v);
    default:
      return support_semideviation(spec, x, k_row, v);
  }
}

// Maximizes <v, D(.|x)> directly over the direction set, without the closed
// forms: the objective is linear and each set is the affine image of a box,
// so scanning box vertices is exhaustive. Oracle scale: n <= 6.
template <typename Scalar, typename DerivedK, typename DerivedV>
Scalar support_bruteforce(const RiskMappingSpec<Scalar>& spec, Index x,
                          const Eigen::MatrixBase<DerivedK>& k_row, const Eigen::MatrixBase<DerivedV>& v) {
  const Index n = spec.states();
  if (k_row.size() != n || v.size() != n) throw std::invalid_argument("support: row/value size mismatch");
  if (n > 6) throw ConfigError("support_bruteforce: oracle limited to at most 6 states");
  if (x < 0 || x >= n) throw std::invalid_argument("support: state index out of range");

  switch (spec.kind()) {
    case RiskKind::expectation:
      return support_expectation(k_row, v);

    case RiskKind::avar: {
      // Directions: 0 <= D(y|x) <= K(y|x)/alpha off the diagonal, zero row
      // sum. Scan the corners of the off-diagonal box.
      std::vector<Index> off;
      for (Index y = 0; y < n; ++y)
        if (y != x) off.push_back(y);
      const Scalar cap_scale = Scalar(1) / spec.alpha(x);
      Scalar best = -std::numeric_limits<Scalar>::infinity();
      for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << off.size()); ++mask) {
        Scalar val = Scalar(0), mass = Scalar(0);
        for (std::size_t i = 0; i < off.size(); ++i) {
          if (!(mask & (std::uint64_t(1) << i))) continue;
          const Scalar d = k_row(off[i]) * cap_scale;
          val += d * v(off[i]);
          mass += d;
        }
        val -= mass * v(x);  // diagonal entry balances the row to zero
        best = std::max(best, val);
      }
      return best;
    }

    default: {
      if (spec.order() != Scalar(1))
        throw ConfigError("support_bruteforce: no direction-set description for semideviation order p > 1");
      // Directions: D(y|x) = K(y|x) [1 + phi(y) - phi(x)] off the diagonal
      // and D(x|x) = K(x|x) - sum_z K(z|x) phi(z), phi in [0, kappa]^n.
      const Scalar kappa = spec.kappa(x);
      Scalar best = -std::numeric_limits<Scalar>::infinity();
      VectorX<Scalar> phi(n);
      for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
        for (Index z = 0; z < n; ++z) phi(z) = (mask & (std::uint64_t(1) << z)) ? kappa : Scalar(0);
        Scalar val = Scalar(0), weighted = Scalar(0);
        for (Index z = 0; z < n; ++z) weighted += k_row(z) * phi(z);
        for (Index y = 0; y < n; ++y) {
          if (y == x) continue;
          val += k_row(y) * (Scalar(1) + phi(y) - phi(x)) * v(y);
        }
        val += (k_row(x) - weighted) * v(x);
        best = std::max(best, val);
      }
      return best;
    }
  }
}

// Upper envelope over the support of m; positively homogeneous and coherent
// but not semi-differentiable, hence useful only as a divergence specimen.
template <typename Scalar, typename DerivedM, typename DerivedV>
Scalar worst_case_sigma(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedV>& v) {
  if (m.size() != v.size()) throw std::invalid_argument("worst_case_sigma: size mismatch");
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  bool seen = false;
  for (Index y = 0; y < m.size(); ++y) {
    if (m(y) > Scalar(0)) {
      best = std::max(best, Scalar(v(y)));
      seen = true;
    }
  }
  if (!seen) throw std::invalid_argument("worst_case_sigma: measure carries no mass");
  return best;
}

template <typename Scalar = double>
struct FdRow {
  Scalar epsilon;
  Scalar quotient;
  Scalar target;
  Scalar abs_error;
};

template <typename Scalar = double>
struct FdReport {
  std::vector<FdRow<Scalar>> rows;
  bool converged = false;
};

namespace detail {

// delta_x + eps * K as a probability vector; eps must respect the row's
// maximal step.
template <typename Scalar, typename DerivedK>
VectorX<Scalar> perturbed_measure(Index x, const Eigen::MatrixBase<DerivedK>& k_row, Scalar eps) {
  const Scalar limit = max_step_row(k_row, x);
  if (!(eps > Scalar(0)) || !(eps <= limit))
    throw std::domain_error("fd check: step outside (0, max_step]");
  VectorX<Scalar> m(k_row.size());
  for (Index y = 0; y < k_row.size(); ++y) m(y) = eps * k_row(y);
  m(x) += Scalar(1);
  return m;
}

// The monotonicity floor absorbs cancellation noise in the quotients, which
// is amplified by 1/eps and reaches ~1e-10 near eps = 1e-5 even when the
// quotient is exact.
template <typename Scalar>
bool quotient_ladder_converged(const std::vector<FdRow<Scalar>>& rows) {
  if (rows.empty()) return false;
  const Scalar floor = Scalar(1e-9) * (Scalar(1) + std::abs(rows.front().target));
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].abs_error > rows[i - 1].abs_error + floor) return false;
  return rows.back().abs_error <= Scalar(1e-4);
}

}  // namespace detail

// Difference quotients q(eps) = [sigma(x, delta_x + eps K, v) - v(x)] / eps
// against an explicit semi-derivative target. The report is flagged
// converged when the absolute errors are nonincreasing along the ladder and
// the last one is at most 1e-4.
template <typename Scalar, typename DerivedK, typename DerivedV>
FdReport<Scalar> semi_derivative_fd_check(const RiskMappingSpec<Scalar>& spec, Index x,
                                          const Eigen::MatrixBase<DerivedK>& k_row,
                                          const Eigen::MatrixBase<DerivedV>& v,
                                          const std::vector<Scalar>& ladder, Scalar target) {
  FdReport<Scalar> report;
  for (Scalar eps : ladder) {
    const VectorX<Scalar> m = detail::perturbed_measure<Scalar>(x, k_row, eps);
    const Scalar q = (sigma_eval(spec, x, m, v) - v(x)) / eps;
    report.rows.push_back({eps, q, target, std::abs(q - target)});
  }
  report.converged = detail::quotient_ladder_converged(report.rows);
  return report;
}

// Same check with the closed-form support value as target; ConfigError for
// families without one.
template <typename Scalar, typename DerivedK, typename DerivedV>
FdReport<Scalar> semi_derivative_fd_check(const RiskMappingSpec<Scalar>& spec, Index x,
                                          const Eigen::MatrixBase<DerivedK>& k_row,
                                          const Eigen::MatrixBase<DerivedV>& v,
                                          const std::vector<Scalar>& ladder) {
  if (!spec.has_closed_form_support())
    throw ConfigError("fd check: no closed-form target for this mapping; pass one explicitly");
  return semi_derivative_fd_check(spec, x, k_row, v, ladder, support_function(spec, x, k_row, v));
}

// Difference quotients of the worst-case mapping, compared against the
// risk-neutral support value as the only finite reference. Whenever some
// reachable state improves on v(x) the quotients grow like 1/epsilon and the
// report comes back non-converged; that divergence is the point.
template <typename Scalar, typename DerivedK, typename DerivedV>
FdReport<Scalar> worst_case_fd_check(Index x, const Eigen::MatrixBase<DerivedK>& k_row,
                                     const Eigen::MatrixBase<DerivedV>& v,
                                     const std::vector<Scalar>& ladder) {
  FdReport<Scalar> report;
  const Scalar target = support_expectation(k_row, v);
  for (Scalar eps : ladder) {
    const VectorX<Scalar> m = detail::perturbed_measure<Scalar>(x, k_row, eps);
    const Scalar q = (worst_case_sigma<Scalar>(m, v) - v(x)) / eps;
    report.rows.push_back({eps, q, target, std::abs(q - target)});
  }
  report.converged = detail::quotient_ladder_converged(report.rows);
  return report;
}

}  // namespace ctmrisk
