#pragma once

// Cost data of a model: a running cost rate given on a time grid (piecewise
// linear in time, constant extension outside the grid) and a terminal cost
// vector. Integrals of the running rate are exact, so path costs and solver
// source terms carry no quadrature error of their own.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ctmrisk/types.hpp"

namespace ctmrisk {

template <typename Scalar = double>
class CostSpec {
 public:
  // Rows of `values` follow `times`, columns follow states.
  CostSpec(std::vector<Scalar> times, MatrixX<Scalar> values, VectorX<Scalar> terminal)
      : times_(std::move(times)), values_(std::move(values)), terminal_(std::move(terminal)) {
    if (terminal_.size() == 0) throw std::invalid_argument("cost: empty terminal vector");
    if (!terminal_.allFinite()) throw std::invalid_argument("cost: terminal values must be finite");
    if (times_.empty() != (values_.rows() == 0))
      throw std::invalid_argument("cost: time grid and value rows disagree");
    if (!times_.empty()) {
      if (values_.rows() != static_cast<Index>(times_.size()))
        throw std::invalid_argument("cost: time grid and value rows disagree");
      if (values_.cols() != terminal_.size())
        throw std::invalid_argument("cost: running and terminal state counts disagree");
      if (!values_.allFinite()) throw std::invalid_argument("cost: running values must be finite");
      for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
          throw std::invalid_argument("cost: time grid must be strictly increasing");
      if (!std::isfinite(times_.front()) || !std::isfinite(times_.back()))
        throw std::invalid_argument("cost: time grid must be finite");
    }
  }

  static CostSpec terminal_only(VectorX<Scalar> terminal) {
    return CostSpec({}, MatrixX<Scalar>(0, 0), std::move(terminal));
  }

  bool has_running() const { return !times_.empty(); }
  Index states() const { return terminal_.size(); }
  const VectorX<Scalar>& terminal() const { return terminal_; }

  Scalar running(Scalar t, Index x) const {
    if (!has_running()) return Scalar(0);
    if (t <= times_.front()) return values_(0, x);
    if (t >= times_.back()) return values_(values_.rows() - 1, x);
    const Index i = segment_of(t);
    const Scalar l = times_[static_cast<std::size_t>(i)];
    const Scalar r = times_[static_cast<std::size_t>(i + 1)];
    const Scalar w = (t - l) / (r - l);
    return (Scalar(1) - w) * values_(i, x) + w * values_(i + 1, x);
  }

  VectorX<Scalar> running_at(Scalar t) const {
    VectorX<Scalar> out(states());
    for (Index x = 0; x < states(); ++x) out(x) = running(t, x);
    return out;
  }

  // Exact integral of the running rate in state x over [a, b].
  Scalar integral(Index x, Scalar a, Scalar b) const {
    if (!(a <= b)) throw std::domain_error("cost integral: interval reversed");
    if (!has_running() || a == b) return Scalar(0);
    Scalar acc = Scalar(0);
    // Constant extensions outside the grid.
    const Scalar t0 = times_.front();
    const Scalar t1 = times_.back();
    if (a < t0) acc += (std::min(b, t0) - a) * values_(0, x);
    if (b > t1) acc += (b - std::max(a, t1)) * values_(values_.rows() - 1, x);
    // Piecewise linear interior: trapezoid per overlapped segment is exact.
    const Scalar lo = std::max(a, t0);
    const Scalar hi = std::min(b, t1);
    if (lo < hi) {
      Index i = segment_of(lo);
      Scalar p = lo;
      while (p < hi) {
        const Scalar seg_end = times_[static_cast<std::size_t>(i + 1)];
        const Scalar q = std::min(hi, seg_end);
        acc += (q - p) * (running(p, x) + running(q, x)) / Scalar(2);
        p = q;
        if (p >= seg_end && i + 2 < static_cast<Index>(times_.size())) ++i;
      }
    }
    return acc;
  }

  // sup_t max_x |c_t(x)|; attained on the grid.
  Scalar running_bound() const {
    return has_running() ? values_.cwiseAbs().maxCoeff() : Scalar(0);
  }

  // sup_t max_{x,y} |c_t(y) - c_t(x)|; the row spread is piecewise linear in
  // t, so the sup is attained on the grid as well.
  Scalar state_spread_bound() const {
    if (!has_running()) return Scalar(0);
    return (values_.rowwise().maxCoeff() - values_.rowwise().minCoeff()).maxCoeff();
  }

  const std::vector<Scalar>& times() const { return times_; }
  const MatrixX<Scalar>& values_grid() const { return values_; }

 private:
  // Largest i with times_[i] <= t < times_.back(); pre: t in (front, back).
  Index segment_of(Scalar t) const {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return static_cast<Index>(it - times_.begin()) - 1;
  }

  std::vector<Scalar> times_;
  MatrixX<Scalar> values_;  // times x states
  VectorX<Scalar> terminal_;
};

}  // namespace ctmrisk
