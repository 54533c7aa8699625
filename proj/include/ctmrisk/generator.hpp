#pragma once

// Piecewise-constant-in-time generator of a continuous-time Markov chain on a
// finite state space. Rows index the source state; off-diagonal entries are
// jump rates, diagonals the negated exit rates. Piece j is active on
// [until_{j-1}, until_j), the last piece also at the horizon itself.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctmrisk/kernels.hpp"
#include "ctmrisk/types.hpp"

namespace ctmrisk {

template <typename Scalar = double>
class GeneratorSchedule {
 public:
  GeneratorSchedule(std::vector<Scalar> until, std::vector<MatrixX<Scalar>> pieces)
      : until_(std::move(until)), pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw std::invalid_argument("generator: no pieces");
    if (until_.size() != pieces_.size())
      throw std::invalid_argument("generator: piece/breakpoint count mismatch");
    const Index n = pieces_.front().rows();
    for (const auto& g : pieces_)
      if (g.rows() != n || g.cols() != n)
        throw std::invalid_argument("generator: pieces must be square and equally sized");
    Scalar prev = Scalar(0);
    for (Scalar u : until_) {
      if (!(u > prev)) throw std::invalid_argument("generator: piece end times must increase from 0");
      prev = u;
    }
  }

  // Single piece active on the whole horizon.
  GeneratorSchedule(MatrixX<Scalar> constant, Scalar horizon)
      : GeneratorSchedule(std::vector<Scalar>{horizon}, std::vector<MatrixX<Scalar>>{std::move(constant)}) {}

  Index states() const { return pieces_.front().rows(); }
  Scalar horizon() const { return until_.back(); }
  Index piece_count() const { return static_cast<Index>(pieces_.size()); }

  const MatrixX<Scalar>& piece(Index j) const { return pieces_.at(static_cast<std::size_t>(j)); }
  Scalar piece_start(Index j) const { return j == 0 ? Scalar(0) : until_[static_cast<std::size_t>(j - 1)]; }
  Scalar piece_end(Index j) const { return until_.at(static_cast<std::size_t>(j)); }

  // Index of the piece active at t; right-continuous, horizon maps to the
  // last piece. t outside [0, horizon] is a domain error.
  Index piece_index(Scalar t) const {
    if (!(t >= Scalar(0)) || !(t <= horizon()))
      throw std::domain_error("generator: time outside [0, horizon]");
    const auto it = std::upper_bound(until_.begin(), until_.end(), t);
    const Index j = static_cast<Index>(it - until_.begin());
    return std::min(j, piece_count() - 1);
  }

  const MatrixX<Scalar>& at(Scalar t) const { return piece(piece_index(t)); }

  // Piece end times interior to (0, horizon); every solver grid must contain
  // them so no integration step straddles a discontinuity.
  std::vector<Scalar> interior_breakpoints() const {
    return {until_.begin(), until_.end() - 1};
  }

  // Largest entry over all pieces (the largest jump rate), floored at 0.
  Scalar max_rate() const {
    Scalar r = Scalar(0);
    for (const auto& g : pieces_) r = std::max(r, g.maxCoeff());
    return r;
  }

  // Largest exit rate max_x -G(x|x) of one piece; used to dominate jump
  // intensities when sampling paths.
  Scalar max_exit_rate(Index j) const {
    return std::max(Scalar(0), -piece(j).diagonal().minCoeff());
  }

  Scalar max_exit_rate() const {
    Scalar r = Scalar(0);
    for (Index j = 0; j < piece_count(); ++j) r = std::max(r, max_exit_rate(j));
    return r;
  }

 private:
  std::vector<Scalar> until_;
  std::vector<MatrixX<Scalar>> pieces_;
};

enum class GeneratorRule { nonfinite, off_diagonal_sign, row_sum, diagonal_sign };

template <typename Scalar = double>
struct GeneratorViolation {
  Index piece = -1;
  GeneratorRule rule = GeneratorRule::nonfinite;
  Index row = -1;
  Index col = -1;  // -1 for whole-row rules
  Scalar value = Scalar(0);

  std::string describe() const {
    std::ostringstream os;
    os << "piece " << piece << ", row " << row;
    switch (rule) {
      case GeneratorRule::nonfinite:
        os << ", col " << col << ": entry " << value << " not finite";
        break;
      case GeneratorRule::off_diagonal_sign:
        os << ", col " << col << ": off-diagonal rate " << value << " negative";
        break;
      case GeneratorRule::row_sum:
        os << ": row sum " << value << " not zero within tolerance";
        break;
      case GeneratorRule::diagonal_sign:
        os << ": diagonal entry " << value << " positive";
        break;
    }
    return os.str();
  }
};

// Every rule violation in every piece; empty exactly when the schedule is a
// valid generator. Row sums use the scaled tolerance of row_sum_tolerance.
template <typename Scalar>
std::vector<GeneratorViolation<Scalar>> validate_generator(const GeneratorSchedule<Scalar>& gen) {
  std::vector<GeneratorViolation<Scalar>> out;
  for (Index j = 0; j < gen.piece_count(); ++j) {
    const MatrixX<Scalar>& g = gen.piece(j);
    const Scalar tol = row_sum_tolerance(g);
    for (Index x = 0; x < g.rows(); ++x) {
      bool finite = true;
      for (Index y = 0; y < g.cols(); ++y) {
        if (!std::isfinite(g(x, y))) {
          out.push_back({j, GeneratorRule::nonfinite, x, y, g(x, y)});
          finite = false;
        }
      }
      if (!finite) continue;
      for (Index y = 0; y < g.cols(); ++y)
        if (y != x && g(x, y) < Scalar(0))
          out.push_back({j, GeneratorRule::off_diagonal_sign, x, y, g(x, y)});
      const Scalar sum = g.row(x).sum();
      if (std::abs(sum) > tol) out.push_back({j, GeneratorRule::row_sum, x, -1, sum});
      if (g(x, x) > Scalar(0)) out.push_back({j, GeneratorRule::diagonal_sign, x, x, g(x, x)});
    }
  }
  return out;
}

}  // namespace ctmrisk
