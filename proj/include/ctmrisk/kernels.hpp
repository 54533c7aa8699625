#pragma once

// Calculus on signed transition kernels. A kernel K assigns to every source
// state x (row) a signed measure K(.|x) over target states (columns). The
// norm below is the largest total variation over rows; stochastic matrices
// form a convex set whose tangent cone at the identity consists of generator
// matrices, and max_step gives the largest epsilon with I + eps*K still
// stochastic.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ctmrisk/types.hpp"

namespace ctmrisk {

// Row-sum tolerance scaled to the matrix: 1e-12 * n * max|entry|.
template <typename Derived>
typename Derived::Scalar row_sum_tolerance(const Eigen::MatrixBase<Derived>& k) {
  using Scalar = typename Derived::Scalar;
  if (k.size() == 0) return Scalar(0);
  return Scalar(1e-12) * Scalar(k.cols()) * k.cwiseAbs().maxCoeff();
}

// max_x sum_y |K(y|x)|: the operator norm induced by the sup norm on value
// functions, equal to the largest total variation of the row measures.
template <typename Derived>
typename Derived::Scalar kernel_norm(const Eigen::MatrixBase<Derived>& k) {
  if (k.rows() != k.cols()) throw std::invalid_argument("kernel_norm: matrix not square");
  if (k.size() == 0) return typename Derived::Scalar(0);
  return k.cwiseAbs().rowwise().sum().maxCoeff();
}

enum class ConeRule { none, diagonal, off_diagonal, row_sum };

struct ConeCheck {
  bool member = true;
  ConeRule violated = ConeRule::none;
  Index row = -1;
  Index col = -1;
};

inline const char* cone_rule_name(ConeRule r) {
  switch (r) {
    case ConeRule::diagonal: return "diagonal";
    case ConeRule::off_diagonal: return "off_diagonal";
    case ConeRule::row_sum: return "row_sum";
    default: return "none";
  }
}

namespace detail {

// Shared by the matrix and single-row checks. `diag` is the column holding
// the diagonal entry of this row. Scan order: off-diagonal sign, then row
// sum, then diagonal sign. Off-diagonal nonnegativity plus a zero row sum
// already force a nonpositive diagonal, so the diagonal rule only fires
// inside the row-sum tolerance band.
template <typename Derived>
void check_cone_row(const Eigen::MatrixBase<Derived>& row, Index row_index, Index diag,
                    typename Derived::Scalar tol, ConeCheck& out) {
  using Scalar = typename Derived::Scalar;
  for (Index y = 0; y < row.size(); ++y) {
    if (y == diag) continue;
    if (!(row(y) >= Scalar(0))) {
      out = {false, ConeRule::off_diagonal, row_index, y};
      return;
    }
  }
  const Scalar sum = row.sum();
  if (!(std::abs(sum) <= tol)) {
    out = {false, ConeRule::row_sum, row_index, -1};
    return;
  }
  if (!(row(diag) <= Scalar(0))) {
    out = {false, ConeRule::diagonal, row_index, diag};
    return;
  }
}

}  // namespace detail

// Membership of K in the tangent cone to the stochastic matrices at the
// identity: off-diagonals >= 0, row sums 0 (within row_sum_tolerance), and
// diagonals <= 0. Reports the first violated rule.
template <typename Derived>
ConeCheck tangent_cone_membership(const Eigen::MatrixBase<Derived>& k) {
  if (k.rows() != k.cols()) throw std::invalid_argument("tangent_cone_membership: matrix not square");
  const auto tol = row_sum_tolerance(k);
  ConeCheck out;
  for (Index x = 0; x < k.rows() && out.member; ++x)
    detail::check_cone_row(k.row(x), x, x, tol, out);
  return out;
}

// Same test for a single row whose diagonal sits at position x. Used when a
// direction is specified for one source state only.
template <typename Derived>
ConeCheck tangent_cone_row(const Eigen::MatrixBase<Derived>& row, Index x) {
  if (x < 0 || x >= row.size()) throw std::invalid_argument("tangent_cone_row: diagonal index out of range");
  using Scalar = typename Derived::Scalar;
  const Scalar tol = row.size() == 0
                         ? Scalar(0)
                         : Scalar(1e-12) * Scalar(row.size()) * row.cwiseAbs().maxCoeff();
  ConeCheck out;
  detail::check_cone_row(row, Index(0), x, tol, out);
  return out;
}

// Largest eps with I + eps*K stochastic: 1 / max_x |K(x|x)|, infinite for
// K = 0. Rejects directions outside the tangent cone.
template <typename Derived>
typename Derived::Scalar max_step(const Eigen::MatrixBase<Derived>& k) {
  using Scalar = typename Derived::Scalar;
  const ConeCheck c = tangent_cone_membership(k);
  if (!c.member)
    throw std::domain_error(std::string("max_step: direction outside tangent cone (") +
                            cone_rule_name(c.violated) + ")");
  const Scalar peak = k.diagonal().cwiseAbs().maxCoeff();
  if (peak == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return Scalar(1) / peak;
}

template <typename Derived>
typename Derived::Scalar max_step_row(const Eigen::MatrixBase<Derived>& row, Index x) {
  using Scalar = typename Derived::Scalar;
  const ConeCheck c = tangent_cone_row(row, x);
  if (!c.member)
    throw std::domain_error(std::string("max_step_row: direction outside tangent cone (") +
                            cone_rule_name(c.violated) + ")");
  const Scalar peak = std::abs(row(x));
  if (peak == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return Scalar(1) / peak;
}

// Entrywise nonnegative with unit row sums.
template <typename Derived>
bool is_stochastic(const Eigen::MatrixBase<Derived>& q,
                   typename Derived::Scalar tol = typename Derived::Scalar(1e-10)) {
  using Scalar = typename Derived::Scalar;
  if (q.rows() != q.cols()) return false;
  if ((q.array() < Scalar(-tol)).any()) return false;
  return ((q.rowwise().sum().array() - Scalar(1)).abs() <= tol).all();
}

// Probability vector check used by the risk mappings for base measures.
template <typename Derived>
bool is_probability_vector(const Eigen::MatrixBase<Derived>& m,
                           typename Derived::Scalar tol = typename Derived::Scalar(1e-10)) {
  using Scalar = typename Derived::Scalar;
  if ((m.array() < Scalar(-tol)).any()) return false;
  return std::abs(m.sum() - Scalar(1)) <= tol;
}

}  // namespace ctmrisk
