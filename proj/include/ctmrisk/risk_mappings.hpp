#pragma once

// Transition risk mappings sigma(x, m, v): coherent risk functionals of a
// value vector v under a base probability measure m, evaluated at source
// state x. Three families:
//
//   expectation          sigma = <v, m>
//   average value at risk
//                        sigma = min_eta { eta + <(v - eta)_+, m> / alpha(x) }
//   mean-semideviation   sigma = <v, m> + kappa(x) ||(v - <v, m>)_+||_{L_p(m)}
//
// Each family also has a dual description as the support function of a set
// of probability measures: densities bounded by 1/alpha for AVaR, and
// m-perturbations m (1 + phi - <phi, m>) with phi >= 0, ||phi||_{L_q(m)} <=
// kappa (q conjugate to p) for mean-semideviation. dual_feasible decides
// membership; dual_support_bruteforce maximizes over the dual set by greedy
// fill, vertex enumeration, or projected ascent and exists purely to
// cross-check the primal formulas, so it is deliberately independent of them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctmrisk/kernels.hpp"
#include "ctmrisk/simulate.hpp"
#include "ctmrisk/types.hpp"

namespace ctmrisk {

enum class RiskKind { expectation, avar, semideviation };

inline const char* risk_kind_name(RiskKind k) {
  switch (k) {
    case RiskKind::expectation: return "expectation";
    case RiskKind::avar: return "avar";
    default: return "semideviation";
  }
}

// Parameter ranges are enforced here once and for all: alpha in
// [1e-6, 1 - 1e-6] per state, kappa in [0, 1] per state, order p >= 1.
template <typename Scalar = double>
class RiskMappingSpec {
 public:
  static constexpr Scalar alpha_min = Scalar(1e-6);
  static constexpr Scalar alpha_max = Scalar(1) - Scalar(1e-6);

  static RiskMappingSpec expectation(Index n) {
    require(n >= 1, "risk spec: need at least one state");
    RiskMappingSpec s;
    s.kind_ = RiskKind::expectation;
    s.states_ = n;
    return s;
  }

  static RiskMappingSpec avar(VectorX<Scalar> alpha) {
    require(alpha.size() >= 1, "risk spec: need at least one state");
    for (Index x = 0; x < alpha.size(); ++x)
      require(std::isfinite(alpha(x)) && alpha(x) >= alpha_min && alpha(x) <= alpha_max,
              "risk spec: avar level must lie in [1e-6, 1 - 1e-6]");
    RiskMappingSpec s;
    s.kind_ = RiskKind::avar;
    s.states_ = alpha.size();
    s.alpha_ = std::move(alpha);
    return s;
  }

  static RiskMappingSpec avar(Index n, Scalar alpha) {
    return avar(VectorX<Scalar>::Constant(n, alpha));
  }

  static RiskMappingSpec semideviation(VectorX<Scalar> kappa, Scalar p = Scalar(1)) {
    require(kappa.size() >= 1, "risk spec: need at least one state");
    for (Index x = 0; x < kappa.size(); ++x)
      require(std::isfinite(kappa(x)) && kappa(x) >= Scalar(0) && kappa(x) <= Scalar(1),
              "risk spec: semideviation weight must lie in [0, 1]");
    require(std::isfinite(p) && p >= Scalar(1), "risk spec: semideviation order must satisfy p >= 1");
    RiskMappingSpec s;
    s.kind_ = RiskKind::semideviation;
    s.states_ = kappa.size();
    s.kappa_ = std::move(kappa);
    s.order_ = p;
    return s;
  }

  static RiskMappingSpec semideviation(Index n, Scalar kappa, Scalar p = Scalar(1)) {
    return semideviation(VectorX<Scalar>::Constant(n, kappa), p);
  }

  RiskKind kind() const { return kind_; }
  Index states() const { return states_; }
  Scalar alpha(Index x) const { return alpha_(x); }
  Scalar kappa(Index x) const { return kappa_(x); }
  Scalar order() const { return order_; }

  // The families whose generator-direction support function has a closed
  // form; mean-semideviation of order p > 1 is served by finite differences
  // only.
  bool has_closed_form_support() const {
    return kind_ != RiskKind::semideviation || order_ == Scalar(1);
  }

 private:
  static void require(bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  }

  RiskKind kind_ = RiskKind::expectation;
  Index states_ = 0;
  VectorX<Scalar> alpha_;
  VectorX<Scalar> kappa_;
  Scalar order_ = Scalar(1);
};

namespace detail {

// Indexed so row- and column-shaped arguments mix freely.
template <typename Scalar, typename DerivedM, typename DerivedV>
Scalar weighted_sum(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedV>& v) {
  Scalar acc(0);
  for (Index y = 0; y < v.size(); ++y) acc += Scalar(m(y)) * Scalar(v(y));
  return acc;
}

template <typename Scalar, typename DerivedM, typename DerivedV>
void check_sigma_args(const RiskMappingSpec<Scalar>& spec, Index x,
                      const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedV>& v) {
  if (x < 0 || x >= spec.states()) throw std::invalid_argument("risk mapping: state index out of range");
  if (m.size() != spec.states() || v.size() != spec.states())
    throw std::invalid_argument("risk mapping: measure/value size mismatch");
  if (!is_probability_vector(m)) throw std::invalid_argument("risk mapping: base measure is not a probability vector");
}

// min_eta { eta + E_m[(v - eta)_+] / alpha }: the objective is piecewise
// linear and convex in eta with kinks exactly at the values of v, so it is
// minimized by scanning those values in ascending order (first minimizer
// kept on ties).
template <typename Scalar, typename DerivedM, typename DerivedV>
Scalar avar_primal(Scalar alpha, const Eigen::MatrixBase<DerivedM>& m,
                   const Eigen::MatrixBase<DerivedV>& v) {
  const Index n = v.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return v(a) < v(b); });
  // Suffix sums over the ascending order: mass and m-weighted value above
  // each candidate eta.
  Scalar mass = Scalar(0), weighted = Scalar(0);
  std::vector<Scalar> suffix_mass(order.size() + 1), suffix_weighted(order.size() + 1);
  suffix_mass.back() = suffix_weighted.back() = Scalar(0);
  for (Index k = n - 1; k >= 0; --k) {
    mass += m(order[static_cast<std::size_t>(k)]);
    weighted += m(order[static_cast<std::size_t>(k)]) * v(order[static_cast<std::size_t>(k)]);
    suffix_mass[static_cast<std::size_t>(k)] = mass;
    suffix_weighted[static_cast<std::size_t>(k)] = weighted;
  }
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (Index k = 0; k < n; ++k) {
    const Scalar eta = v(order[static_cast<std::size_t>(k)]);
    const Scalar tail = suffix_weighted[static_cast<std::size_t>(k)] - eta * suffix_mass[static_cast<std::size_t>(k)];
    const Scalar f = eta + std::max(tail, Scalar(0)) / alpha;
    if (f < best) best = f;
  }
  return best;
}

template <typename Scalar, typename DerivedM, typename DerivedV>
Scalar semideviation_primal(Scalar kappa, Scalar p, const Eigen::MatrixBase<DerivedM>& m,
                            const Eigen::MatrixBase<DerivedV>& v) {
  const Scalar mean = weighted_sum<Scalar>(m, v);
  Scalar dev = Scalar(0);
  for (Index y = 0; y < v.size(); ++y) {
    const Scalar up = std::max(v(y) - mean, Scalar(0));
    dev += m(y) * (p == Scalar(1) ? up : std::pow(up, p));
  }
  if (p != Scalar(1)) dev = std::pow(dev, Scalar(1) / p);
  return mean + kappa * dev;
}

}  // namespace detail

// Primal evaluation of the transition risk mapping at source state x.
template <typename Scalar, typename DerivedM, typename DerivedV>
Scalar sigma_eval(const RiskMappingSpec<Scalar>& spec, Index x, const Eigen::MatrixBase<DerivedM>& m,
                  const Eigen::MatrixBase<DerivedV>& v) {
  detail::check_sigma_args(spec, x, m, v);
  switch (spec.kind()) {
    case RiskKind::expectation:
      return detail::weighted_sum<Scalar>(m, v);
    case RiskKind::avar:
      return detail::avar_primal(spec.alpha(x), m, v);
    default:
      return detail::semideviation_primal(spec.kappa(x), spec.order(), m, v);
  }
}

// Membership of mu in the dual set at (x, m). mu failing to be a probability
// vector counts as infeasible rather than an error, so the function is a
// plain predicate over candidate measures.
template <typename Scalar, typename DerivedM, typename DerivedV>
bool dual_feasible(const RiskMappingSpec<Scalar>& spec, Index x, const Eigen::MatrixBase<DerivedM>& m,
                   const Eigen::MatrixBase<DerivedV>& mu, Scalar tol = Scalar(1e-10)) {
  if (x < 0 || x >= spec.states()) throw std::invalid_argument("dual_feasible: state index out of range");
  if (m.size() != spec.states() || mu.size() != spec.states())
    throw std::invalid_argument("dual_feasible: measure size mismatch");
  if (!is_probability_vector(m)) throw std::invalid_argument("dual_feasible: base measure is not a probability vector");
  if (!is_probability_vector(mu, tol)) return false;

  switch (spec.kind()) {
    case RiskKind::expectation:
      return ((mu.derived().template cast<Scalar>() - m.derived().template cast<Scalar>()).cwiseAbs().maxCoeff()) <= tol;
    case RiskKind::avar: {
      const Scalar cap_scale = Scalar(1) / spec.alpha(x);
      for (Index y = 0; y < m.size(); ++y)
        if (mu(y) > m(y) * cap_scale + tol) return false;
      return true;
    }
    default: {
      // mu must vanish off the support of m and have density h = mu/m whose
      // recentred multiplier phi = h - 1 + c fits the constraint set for some
      // c. phi >= 0 forces c >= 1 - min h, and the weighted q-norm of phi is
      // increasing in c on that ray, so feasibility reduces to one evaluation
      // at the smallest admissible c.
      Scalar min_h = std::numeric_limits<Scalar>::infinity();
      for (Index y = 0; y < m.size(); ++y) {
        if (m(y) <= Scalar(0)) {
          if (mu(y) > tol) return false;
        } else {
          min_h = std::min(min_h, mu(y) / m(y));
        }
      }
      const Scalar c = Scalar(1) - min_h;
      const Scalar p = spec.order();
      if (p == Scalar(1)) {
        // q = infinity: ||phi||_{L_inf(m)} = max h - min h.
        Scalar max_h = -std::numeric_limits<Scalar>::infinity();
        for (Index y = 0; y < m.size(); ++y)
          if (m(y) > Scalar(0)) max_h = std::max(max_h, mu(y) / m(y));
        return max_h - min_h <= spec.kappa(x) + tol;
      }
      const Scalar q = p / (p - Scalar(1));
      Scalar norm_q = Scalar(0);
      for (Index y = 0; y < m.size(); ++y)
        if (m(y) > Scalar(0)) norm_q += m(y) * std::pow(std::max(mu(y) / m(y) - Scalar(1) + c, Scalar(0)), q);
      return std::pow(norm_q, Scalar(1) / q) <= spec.kappa(x) + tol;
    }
  }
}

namespace detail {

// Euclidean projection onto {psi >= 0, sum_y w_y psi_y^q <= kappa^q} with
// w > 0, q > 1. The ball is invariant under sign flips, so clipping to the
// orthant first and then projecting onto the ball restricted to the orthant
// is the exact projection onto the intersection. The restricted projection
// solves psi + nu q w psi^(q-1) = z componentwise, with the multiplier nu
// fixed by an outer bisection on the constraint.
template <typename Scalar>
VectorX<Scalar> project_weighted_ball(VectorX<Scalar> z, const VectorX<Scalar>& w, Scalar q, Scalar radius) {
  const Index n = z.size();
  for (Index i = 0; i < n; ++i) z(i) = std::max(z(i), Scalar(0));
  const Scalar cap = std::pow(radius, q);
  auto norm_pow = [&](const VectorX<Scalar>& psi) {
    Scalar s = Scalar(0);
    for (Index i = 0; i < n; ++i) s += w(i) * std::pow(psi(i), q);
    return s;
  };
  if (norm_pow(z) <= cap) return z;

  auto solve_component = [&](Scalar nu, Scalar zi, Scalar wi) {
    // psi + nu q w psi^(q-1) = z has a unique root in [0, z]; bisection.
    Scalar lo = Scalar(0), hi = zi;
    for (int it = 0; it < 70; ++it) {
      const Scalar mid = (lo + hi) / Scalar(2);
      const Scalar f = mid + nu * q * wi * std::pow(mid, q - Scalar(1)) - zi;
      (f < Scalar(0) ? lo : hi) = mid;
    }
    return (lo + hi) / Scalar(2);
  };
  auto shrunk = [&](Scalar nu) {
    VectorX<Scalar> psi(n);
    for (Index i = 0; i < n; ++i) psi(i) = solve_component(nu, z(i), w(i));
    return psi;
  };

  Scalar nu_hi = Scalar(1);
  while (norm_pow(shrunk(nu_hi)) > cap) nu_hi *= Scalar(2);
  Scalar nu_lo = Scalar(0);
  for (int it = 0; it < 90; ++it) {
    const Scalar nu = (nu_lo + nu_hi) / Scalar(2);
    (norm_pow(shrunk(nu)) > cap ? nu_lo : nu_hi) = nu;
  }
  return shrunk(nu_hi);
}

}  // namespace detail

// Maximum of <v, mu> over the dual set, computed without the primal
// formulas: exact for expectation (singleton), AVaR (greedy density fill)
// and mean-semideviation of order 1 (the dual set is the affine image of a
// multiplier box, so vertex enumeration is exhaustive); projected gradient
// ascent with multistart for order p > 1, reported as the best feasible
// value found (a valid lower bound). Oracle-scale only: n <= 6.
template <typename Scalar, typename DerivedM, typename DerivedV>
Scalar dual_support_bruteforce(const RiskMappingSpec<Scalar>& spec, Index x,
                               const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedV>& v) {
  detail::check_sigma_args(spec, x, m, v);
  const Index n = m.size();
  if (n > 6) throw ConfigError("dual_support_bruteforce: oracle limited to at most 6 states");

  switch (spec.kind()) {
    case RiskKind::expectation:
      return detail::weighted_sum<Scalar>(m, v);

    case RiskKind::avar: {
      // Fill unit mass greedily at the largest values of v, each state capped
      // at m(y)/alpha; ties broken by state index.
      std::vector<Index> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), Index(0));
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v(a) > v(b); });
      const Scalar cap_scale = Scalar(1) / spec.alpha(x);
      Scalar remaining = Scalar(1), value = Scalar(0);
      for (Index y : order) {
        const Scalar take = std::min(remaining, m(y) * cap_scale);
        value += take * v(y);
        remaining -= take;
        if (remaining <= Scalar(0)) break;
      }
      return value;
    }

    default: {
      const Scalar kappa = spec.kappa(x);
      const Scalar p = spec.order();
      const Scalar mean = detail::weighted_sum<Scalar>(m, v);
      std::vector<Index> supp;
      for (Index y = 0; y < n; ++y)
        if (m(y) > Scalar(0)) supp.push_back(y);
      const Index ns = static_cast<Index>(supp.size());
      // <v, mu> = mean + <phi, g> with g(y) = m(y) (v(y) - mean) on the
      // support; only phi there matters.
      VectorX<Scalar> g(ns), w(ns);
      for (Index i = 0; i < ns; ++i) {
        g(i) = m(supp[static_cast<std::size_t>(i)]) * (v(supp[static_cast<std::size_t>(i)]) - mean);
        w(i) = m(supp[static_cast<std::size_t>(i)]);
      }

      if (p == Scalar(1)) {
        // Multiplier box [0, kappa]^supp, linear objective: scan vertices.
        Scalar best = mean;
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << ns); ++mask) {
          Scalar val = mean;
          for (Index i = 0; i < ns; ++i)
            if (mask & (std::uint64_t(1) << i)) val += kappa * g(i);
          best = std::max(best, val);
        }
        return best;
      }

      const Scalar q = p / (p - Scalar(1));
      const Scalar gnorm = g.norm();
      if (kappa == Scalar(0) || gnorm == Scalar(0)) return mean;
      // Ascent on a linear objective: one projected step of a large multiple
      // of g already lands within O(1/step) of the maximizer, further steps
      // only improve. Random feasible restarts guard the step-size heuristic.
      const Scalar step = Scalar(1e8) * kappa / gnorm;
      Rng rng(0x5eedULL);
      Scalar best = mean;
      for (int start = 0; start < 4; ++start) {
        VectorX<Scalar> phi(ns);
        if (start == 0) {
          phi.setZero();
        } else {
          for (Index i = 0; i < ns; ++i) phi(i) = Scalar(uniform01(rng));
          phi = detail::project_weighted_ball<Scalar>(phi, w, q, kappa);
        }
        Scalar local = mean + phi.dot(g);
        for (int it = 0; it < 60; ++it) {
          phi = detail::project_weighted_ball<Scalar>(phi + step * g, w, q, kappa);
          const Scalar val = mean + phi.dot(g);
          if (val <= local + Scalar(1e-15) * (Scalar(1) + std::abs(local))) {
            local = std::max(local, val);
            break;
          }
          local = val;
        }
        best = std::max(best, local);
      }
      return best;
    }
  }
}

template <typename Scalar = double>
struct CoherenceReport {
  Index trials = 0;
  Index monotonicity_failures = 0;
  Index translation_failures = 0;
  Index homogeneity_failures = 0;
  Index convexity_failures = 0;
  bool normalization_ok = true;
  std::string first_failure;

  bool all_passed() const {
    return normalization_ok && monotonicity_failures == 0 && translation_failures == 0 &&
           homogeneity_failures == 0 && convexity_failures == 0;
  }
};

// Randomized audit of the coherence axioms of v -> sigma(x, m, v): runs
// `trials` independent checks per axiom at relative tolerance 1e-9 and
// reports the first counterexample verbatim. Deterministic in the seed.
template <typename Scalar, typename DerivedM>
CoherenceReport<Scalar> coherence_check(const RiskMappingSpec<Scalar>& spec, Index x,
                                        const Eigen::MatrixBase<DerivedM>& m, Index trials,
                                        std::uint64_t seed) {
  detail::check_sigma_args(spec, x, m, VectorX<Scalar>::Zero(spec.states()));
  const Index n = spec.states();
  Rng rng(seed);
  CoherenceReport<Scalar> report;
  report.trials = trials;

  auto sigma = [&](const VectorX<Scalar>& v) { return sigma_eval(spec, x, m, v); };
  auto random_v = [&]() {
    VectorX<Scalar> v(n);
    for (Index i = 0; i < n; ++i) v(i) = Scalar(-5) + Scalar(10) * Scalar(uniform01(rng));
    return v;
  };
  auto tol_for = [](Scalar a, Scalar b) {
    return Scalar(1e-9) * (Scalar(1) + std::max(std::abs(a), std::abs(b)));
  };
  auto record = [&](Index& counter, const char* axiom, Scalar lhs, Scalar rhs) {
    ++counter;
    if (report.first_failure.empty()) {
      std::ostringstream os;
      os << axiom << ": lhs " << lhs << " vs rhs " << rhs;
      report.first_failure = os.str();
    }
  };

  report.normalization_ok = std::abs(sigma(VectorX<Scalar>::Zero(n))) <= Scalar(1e-9);
  if (!report.normalization_ok && report.first_failure.empty())
    report.first_failure = "normalization: sigma(0) != 0";

  for (Index trial = 0; trial < trials; ++trial) {
    {
      VectorX<Scalar> v = random_v();
      VectorX<Scalar> w = v;
      for (Index i = 0; i < n; ++i) w(i) += Scalar(3) * Scalar(uniform01(rng));
      const Scalar sv = sigma(v), sw = sigma(w);
      if (sv > sw + tol_for(sv, sw)) record(report.monotonicity_failures, "monotonicity", sv, sw);
    }
    {
      VectorX<Scalar> v = random_v();
      const Scalar gamma = Scalar(-2) + Scalar(4) * Scalar(uniform01(rng));
      const Scalar lhs = sigma(v + VectorX<Scalar>::Constant(n, gamma));
      const Scalar rhs = sigma(v) + gamma;
      if (std::abs(lhs - rhs) > tol_for(lhs, rhs)) record(report.translation_failures, "translation", lhs, rhs);
    }
    {
      VectorX<Scalar> v = random_v();
      const Scalar lambda = Scalar(4) * Scalar(uniform01(rng)) + Scalar(1e-3);
      const Scalar lhs = sigma(lambda * v);
      const Scalar rhs = lambda * sigma(v);
      if (std::abs(lhs - rhs) > tol_for(lhs, rhs)) record(report.homogeneity_failures, "positive homogeneity", lhs, rhs);
    }
    {
      VectorX<Scalar> v = random_v(), w = random_v();
      const Scalar beta = Scalar(uniform01(rng));
      const Scalar lhs = sigma(beta * v + (Scalar(1) - beta) * w);
      const Scalar rhs = beta * sigma(v) + (Scalar(1) - beta) * sigma(w);
      if (lhs > rhs + tol_for(lhs, rhs)) record(report.convexity_failures, "convexity", lhs, rhs);
    }
  }
  return report;
}

}  // namespace ctmrisk
