#pragma once

// Backward evolution of the risk-adjusted value function: on [t, T],
//
//   dv_t(x)/dt = -c_t(x) - s_x(v_t),   v_T = terminal cost,
//
// where s_x is the support function of the risk multigenerator driven by the
// generator row active at t. With the expectation mapping this is the
// classical backward equation dv/dt = -c - G v, and kolmogorov_reference
// solves that case through exact transition kernels as an integration-free
// ground truth. Fixed-step explicit Euler and RK4 integrate the general
// case; grids always contain the generator breakpoints and the running-cost
// kink times, so no step straddles a discontinuity of the right-hand side.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ctmrisk/model.hpp"
#include "ctmrisk/multigenerator.hpp"
#include "ctmrisk/risk_mappings.hpp"
#include "ctmrisk/transition.hpp"
#include "ctmrisk/types.hpp"

namespace ctmrisk {

enum class Scheme { euler, rk4 };

template <typename Scalar = double>
struct SolverConfig {
  Scheme scheme = Scheme::rk4;
  Index steps = 1000;
  // Inputs of the short-interval deviation bound; the Lipschitz constant of
  // the mapping family is not derivable from the model (for AVaR the worst
  // case is 1/min alpha), so the caller owns it.
  Scalar lipschitz = Scalar(1);
  Scalar bound_order = Scalar(1);
};

// Strictly increasing nodes spanning [t0, t1]: a uniform grid with the
// required interior times either snapped onto coinciding nodes or inserted.
template <typename Scalar = double>
class TimeGrid {
 public:
  static TimeGrid uniform(Scalar t0, Scalar t1, Index steps) {
    return refined(t0, t1, steps, {});
  }

  static TimeGrid refined(Scalar t0, Scalar t1, Index steps, std::vector<Scalar> contain) {
    if (!(t0 < t1)) throw std::domain_error("time grid: need t0 < t1");
    if (steps < 1) throw ConfigError("time grid: need at least one step");
    TimeGrid g;
    g.nodes_.resize(static_cast<std::size_t>(steps) + 1);
    for (Index i = 0; i <= steps; ++i)
      g.nodes_[static_cast<std::size_t>(i)] = t0 + (t1 - t0) * (Scalar(i) / Scalar(steps));
    g.nodes_.front() = t0;
    g.nodes_.back() = t1;
    const Scalar snap = Scalar(1e-12) * std::max(Scalar(1), std::abs(t1 - t0));
    std::sort(contain.begin(), contain.end());
    for (Scalar b : contain) {
      if (!(b > t0 + snap) || !(b < t1 - snap)) continue;
      const auto it = std::lower_bound(g.nodes_.begin(), g.nodes_.end(), b);
      if (it != g.nodes_.end() && std::abs(*it - b) <= snap) {
        *it = b;
      } else if (it != g.nodes_.begin() && std::abs(*(it - 1) - b) <= snap) {
        *(it - 1) = b;
      } else {
        g.nodes_.insert(it, b);
      }
    }
    return g;
  }

  const std::vector<Scalar>& nodes() const { return nodes_; }
  Index segments() const { return static_cast<Index>(nodes_.size()) - 1; }
  Scalar front() const { return nodes_.front(); }
  Scalar back() const { return nodes_.back(); }
  Scalar node(Index i) const { return nodes_.at(static_cast<std::size_t>(i)); }

  // Segment index i with node(i) <= t <= node(i+1).
  Index bracket(Scalar t) const {
    if (!(t >= front()) || !(t <= back())) throw std::domain_error("time grid: time outside range");
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    const Index i = static_cast<Index>(it - nodes_.begin()) - 1;
    return std::min(std::max(i, Index(0)), segments() - 1);
  }

 private:
  std::vector<Scalar> nodes_;
};

template <typename Scalar = double>
struct ValueFunction {
  TimeGrid<Scalar> grid;
  MatrixX<Scalar> values;  // nodes x states

  // Piecewise-linear evaluation between grid nodes; exact on nodes.
  VectorX<Scalar> at_time(Scalar t) const {
    const Index i = grid.bracket(t);
    const Scalar l = grid.node(i), r = grid.node(i + 1);
    const Scalar w = (t - l) / (r - l);
    return ((Scalar(1) - w) * values.row(i) + w * values.row(i + 1)).transpose();
  }

  // Index of a node coinciding with t, or -1.
  Index node_index(Scalar t) const {
    const Index i = grid.bracket(t);
    const Scalar snap = Scalar(1e-12) * std::max(Scalar(1), std::abs(grid.back() - grid.front()));
    if (std::abs(grid.node(i) - t) <= snap) return i;
    if (std::abs(grid.node(i + 1) - t) <= snap) return i + 1;
    return -1;
  }
};

namespace detail {

template <typename Scalar>
void require_solvable(const MarkovModel<Scalar>& model, const RiskMappingSpec<Scalar>& spec) {
  if (spec.states() != model.state_count())
    throw std::invalid_argument("solve: risk mapping and model state counts disagree");
  if (!spec.has_closed_form_support())
    throw ConfigError(
        "solve: the backward equation needs a closed-form support function; "
        "semideviation of order p > 1 is served by the discrete-time approximation");
  const auto violations = validate_generator(model.generator);
  if (!violations.empty())
    throw std::invalid_argument("solve: invalid generator: " + violations.front().describe());
}

}  // namespace detail

// Integrates the backward equation from t1 down to t0 with the given
// terminal values at t1. The grid is the uniform `config.steps` grid on
// [t0, t1] refined by generator breakpoints and cost kink times; each
// segment's generator piece is resolved at its midpoint, which is interior
// to exactly one piece by construction.
template <typename Scalar>
ValueFunction<Scalar> solve_ode_span(const MarkovModel<Scalar>& model, const RiskMappingSpec<Scalar>& spec,
                                     const SolverConfig<Scalar>& config, Scalar t0, Scalar t1,
                                     VectorX<Scalar> terminal,
                                     std::vector<Scalar> extra_nodes = {}) {
  detail::require_solvable(model, spec);
  if (!(t0 >= Scalar(0)) || !(t1 <= model.horizon()) || !(t0 < t1))
    throw std::domain_error("solve: need 0 <= t0 < t1 <= horizon");
  if (terminal.size() != model.state_count())
    throw std::invalid_argument("solve: terminal value size mismatch");

  std::vector<Scalar> contain = model.generator.interior_breakpoints();
  for (Scalar tc : model.cost.times()) contain.push_back(tc);
  contain.insert(contain.end(), extra_nodes.begin(), extra_nodes.end());
  TimeGrid<Scalar> grid = TimeGrid<Scalar>::refined(t0, t1, config.steps, std::move(contain));

  const Index n = model.state_count();
  ValueFunction<Scalar> out;
  out.grid = grid;
  out.values.resize(grid.segments() + 1, n);
  out.values.row(grid.segments()) = terminal.transpose();

  const auto rhs = [&](const MatrixX<Scalar>& g, Scalar t, const VectorX<Scalar>& v) {
    VectorX<Scalar> f(n);
    for (Index x = 0; x < n; ++x)
      f(x) = -model.cost.running(t, x) - support_function(spec, x, g.row(x), v);
    return f;
  };

  VectorX<Scalar> v = std::move(terminal);
  for (Index i = grid.segments() - 1; i >= 0; --i) {
    const Scalar tl = grid.node(i), tr = grid.node(i + 1);
    const Scalar h = tr - tl;
    const MatrixX<Scalar>& g = model.generator.at((tl + tr) / Scalar(2));
    if (config.scheme == Scheme::euler) {
      v = v - h * rhs(g, tr, v);
    } else {
      const VectorX<Scalar> k1 = rhs(g, tr, v);
      const VectorX<Scalar> k2 = rhs(g, tr - h / Scalar(2), v - (h / Scalar(2)) * k1);
      const VectorX<Scalar> k3 = rhs(g, tr - h / Scalar(2), v - (h / Scalar(2)) * k2);
      const VectorX<Scalar> k4 = rhs(g, tl, v - h * k3);
      v = v - (h / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
    }
    out.values.row(i) = v.transpose();
  }
  return out;
}

template <typename Scalar>
ValueFunction<Scalar> solve_ode(const MarkovModel<Scalar>& model, const RiskMappingSpec<Scalar>& spec,
                                const SolverConfig<Scalar>& config) {
  return solve_ode_span(model, spec, config, Scalar(0), model.horizon(), model.cost.terminal());
}

// Risk-neutral value at time t through exact transition kernels:
// Q(t,T) f + integral_t^T Q(t,s) c_s ds, the running integral by composite
// Simpson with panel boundaries at generator breakpoints and cost kinks.
// Serves as the reference the expectation-case solver must reproduce.
template <typename Scalar>
VectorX<Scalar> kolmogorov_reference(const MarkovModel<Scalar>& model, Scalar t, Index subdivisions = 2048) {
  const Scalar horizon = model.horizon();
  if (!(t >= Scalar(0)) || !(t <= horizon)) throw std::domain_error("reference: time outside [0, horizon]");
  if (t == horizon) return model.cost.terminal();
  if (!model.cost.has_running())
    return transition_matrix(model.generator, t, horizon) * model.cost.terminal();

  std::vector<Scalar> cuts{t, horizon};
  for (Scalar b : model.generator.interior_breakpoints())
    if (b > t && b < horizon) cuts.push_back(b);
  for (Scalar tc : model.cost.times())
    if (tc > t && tc < horizon) cuts.push_back(tc);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const Index n = model.state_count();
  const Scalar h_target = (horizon - t) / Scalar(std::max<Index>(subdivisions, 2));
  MatrixX<Scalar> q = MatrixX<Scalar>::Identity(n, n);
  VectorX<Scalar> integral = VectorX<Scalar>::Zero(n);
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const Scalar a = cuts[p], b = cuts[p + 1];
    Index m = static_cast<Index>(std::ceil((b - a) / h_target));
    m = std::max<Index>(2, m + (m % 2));  // composite Simpson needs an even count
    const Scalar h = (b - a) / Scalar(m);
    const MatrixX<Scalar> step = (h * model.generator.at((a + b) / Scalar(2))).exp();
    for (Index k = 0; k <= m; ++k) {
      const Scalar weight = (k == 0 || k == m) ? Scalar(1) : (k % 2 ? Scalar(4) : Scalar(2));
      integral += (weight * h / Scalar(3)) * (q * model.cost.running_at(a + Scalar(k) * h));
      if (k < m) q = q * step;
    }
  }
  return integral + q * model.cost.terminal();
}

// Sup-norm mismatch of the dynamic-programming restart property: solve on
// [0, T], restart at r from the computed values and re-integrate down to t,
// compare at t. Exactness up to scheme error is what makes the solution a
// time-consistent value function rather than a curve.
template <typename Scalar>
Scalar semigroup_check(const MarkovModel<Scalar>& model, const RiskMappingSpec<Scalar>& spec,
                       const SolverConfig<Scalar>& config, Scalar t, Scalar r) {
  if (!(t >= Scalar(0)) || !(r <= model.horizon()) || !(t < r))
    throw std::domain_error("semigroup_check: need 0 <= t < r <= horizon");
  const ValueFunction<Scalar> full =
      solve_ode_span(model, spec, config, Scalar(0), model.horizon(), model.cost.terminal(), {t, r});
  const Index it = full.node_index(t), ir = full.node_index(r);
  if (it < 0 || ir < 0) throw std::logic_error("semigroup_check: requested times missing from grid");
  const ValueFunction<Scalar> restart =
      solve_ode_span(model, spec, config, t, r, VectorX<Scalar>(full.values.row(ir).transpose()));
  return (restart.values.row(0) - full.values.row(it)).cwiseAbs().maxCoeff();
}

// A priori sup bound on any coherent value function of the model:
// horizon * ||c||_inf + ||terminal||_inf.
template <typename Scalar>
Scalar value_bound(const MarkovModel<Scalar>& model) {
  return model.horizon() * model.cost.running_bound() + model.cost.terminal().cwiseAbs().maxCoeff();
}

// Short-interval deviation bound L p K_c lambda^(1/p) / (p+1) * (r-t)^((p+1)/p)
// with K_c the largest cross-state running-cost spread and lambda the
// largest jump rate; L and p come from the config.
template <typename Scalar>
Scalar delta_bound(const MarkovModel<Scalar>& model, const SolverConfig<Scalar>& config, Scalar t, Scalar r) {
  if (!(t >= Scalar(0)) || !(r <= model.horizon()) || !(t <= r))
    throw std::domain_error("delta_bound: need 0 <= t <= r <= horizon");
  const Scalar p = config.bound_order;
  if (!(p >= Scalar(1))) throw ConfigError("delta_bound: order must satisfy p >= 1");
  const Scalar k_c = model.cost.state_spread_bound();
  const Scalar lambda = model.generator.max_rate();
  return config.lipschitz * p * k_c * std::pow(lambda, Scalar(1) / p) / (p + Scalar(1)) *
         std::pow(r - t, (p + Scalar(1)) / p);
}

}  // namespace ctmrisk
