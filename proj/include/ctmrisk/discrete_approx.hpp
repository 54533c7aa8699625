#pragma once

// Discrete-time dynamic programming approximation of the risk-adjusted value
// function: on the uniform mesh t_i = i T / N,
//
//   v_N = terminal cost,
//   v_i(x) = eps_i c_{t_i}(x) + sigma(x, Q(t_i, t_{i+1})(x, .), v_{i+1}),
//
// with exact one-step transition kernels. Unlike the ODE solver this path
// needs only sigma itself, so it also serves mapping families without a
// closed-form support function (semideviation of order p > 1).
// convergence_study measures sup-norm errors of the interpolated iterates
// against an ODE reference over a ladder of mesh sizes and reports the
// empirical orders between consecutive rungs.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ctmrisk/backward_solver.hpp"
#include "ctmrisk/model.hpp"
#include "ctmrisk/risk_mappings.hpp"
#include "ctmrisk/transition.hpp"
#include "ctmrisk/types.hpp"

namespace ctmrisk {

template <typename Scalar = double>
struct DPResult {
  Index steps = 0;
  Scalar horizon = Scalar(0);
  MatrixX<Scalar> values;  // (steps + 1) x states

  Scalar node(Index i) const { return horizon * (Scalar(i) / Scalar(steps)); }

  // Piecewise-linear evaluation on [0, horizon].
  VectorX<Scalar> at(Scalar t) const {
    if (!(t >= Scalar(0)) || !(t <= horizon)) throw std::domain_error("dp: time outside [0, horizon]");
    const Index i = std::min(static_cast<Index>(std::floor(t / horizon * Scalar(steps))), steps - 1);
    const Scalar l = node(i), r = node(i + 1);
    const Scalar w = std::clamp((t - l) / (r - l), Scalar(0), Scalar(1));
    return ((Scalar(1) - w) * values.row(i) + w * values.row(i + 1)).transpose();
  }
};

template <typename Scalar>
VectorX<Scalar> interpolate(const DPResult<Scalar>& dp, Scalar t) {
  return dp.at(t);
}

template <typename Scalar>
DPResult<Scalar> dp_recursion(const MarkovModel<Scalar>& model, const RiskMappingSpec<Scalar>& spec, Index steps) {
  if (spec.states() != model.state_count())
    throw std::invalid_argument("dp: risk mapping and model state counts disagree");
  if (steps < 1) throw ConfigError("dp: need at least one step");
  {
    const auto violations = validate_generator(model.generator);
    if (!violations.empty())
      throw std::invalid_argument("dp: invalid generator: " + violations.front().describe());
  }

  const Index n = model.state_count();
  const Scalar horizon = model.horizon();
  DPResult<Scalar> out;
  out.steps = steps;
  out.horizon = horizon;
  out.values.resize(steps + 1, n);
  out.values.row(steps) = model.cost.terminal().transpose();

  // One-step kernels repeat whenever the step lies inside a single generator
  // piece with the same floating-point length, which is nearly always on a
  // uniform mesh; key the cache accordingly and fall back to the exact
  // product for piece-straddling steps.
  std::map<std::pair<Index, Scalar>, MatrixX<Scalar>> cache;
  VectorX<Scalar> next = model.cost.terminal();
  for (Index i = steps - 1; i >= 0; --i) {
    const Scalar tl = out.node(i), tr = out.node(i + 1);
    const Index j = model.generator.piece_index(tl);
    const MatrixX<Scalar>* q = nullptr;
    MatrixX<Scalar> direct;
    if (tr <= model.generator.piece_end(j)) {
      const auto key = std::make_pair(j, tr - tl);
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, ((tr - tl) * model.generator.piece(j)).exp()).first;
      q = &it->second;
    } else {
      direct = transition_matrix(model.generator, tl, tr);
      q = &direct;
    }
    VectorX<Scalar> cur(n);
    for (Index x = 0; x < n; ++x)
      cur(x) = (tr - tl) * model.cost.running(tl, x) + sigma_eval(spec, x, q->row(x), next);
    out.values.row(i) = cur.transpose();
    next = std::move(cur);
  }
  return out;
}

template <typename Scalar = double>
struct ConvergenceReport {
  std::vector<Index> ladder;
  std::vector<Scalar> sup_errors;
  std::vector<Scalar> orders;  // one entry per consecutive ladder pair
};

// Sup-norm errors of the DP iterates against an ODE reference, measured on
// the reference grid. The reference must resolve time at least eight times
// finer than the largest mesh in the ladder.
template <typename Scalar>
ConvergenceReport<Scalar> convergence_study(const MarkovModel<Scalar>& model, const RiskMappingSpec<Scalar>& spec,
                                            const std::vector<Index>& ladder,
                                            const ValueFunction<Scalar>& reference) {
  if (ladder.empty()) throw ConfigError("convergence study: empty ladder");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (ladder[k] < 1) throw ConfigError("convergence study: mesh sizes must be positive");
    if (k > 0 && ladder[k] <= ladder[k - 1]) throw ConfigError("convergence study: ladder must increase");
  }
  if (reference.grid.segments() < 8 * ladder.back())
    throw ConfigError("convergence study: reference grid must be at least 8x finer than the largest mesh");

  ConvergenceReport<Scalar> report;
  report.ladder = ladder;
  for (Index n_steps : ladder) {
    const DPResult<Scalar> dp = dp_recursion(model, spec, n_steps);
    Scalar err = Scalar(0);
    for (Index k = 0; k <= reference.grid.segments(); ++k) {
      const VectorX<Scalar> v = dp.at(reference.grid.node(k));
      err = std::max(err, (v.transpose() - reference.values.row(k)).cwiseAbs().maxCoeff());
    }
    report.sup_errors.push_back(err);
  }
  for (std::size_t k = 0; k + 1 < report.sup_errors.size(); ++k) {
    const Scalar ratio = report.sup_errors[k] / report.sup_errors[k + 1];
    const Scalar mesh_ratio = Scalar(ladder[k + 1]) / Scalar(ladder[k]);
    report.orders.push_back(std::log(ratio) / std::log(mesh_ratio));
  }
  return report;
}

}  // namespace ctmrisk
