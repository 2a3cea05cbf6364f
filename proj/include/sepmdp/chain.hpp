#pragma once

#include "sepmdp/errors.hpp"
#include "sepmdp/types.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace sepmdp {

/// Entries at or below this are treated as missing edges.
inline constexpr double kEdgeThreshold = 1e-14;

/// Exact single-chain quantities for a stationary policy.
template <class Scalar = double>
struct ChainSolution {
  Vector<Scalar> invariant;
  Scalar gain{0};
  Vector<Scalar> bias;            // normalized so that invariant . bias = 0
  Matrix<Scalar> group_inverse;   // (I - P)^#
  Matrix<Scalar> fundamental;     // (I - P + 1 invariant^T)^{-1}
};

namespace detail {

template <class Derived>
std::vector<bool> reachable_from_zero(const Eigen::MatrixBase<Derived>& p, bool reverse) {
  using Scalar = typename Derived::Scalar;
  const Index n = p.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Index s = stack.back();
    stack.pop_back();
    for (Index t = 0; t < n; ++t) {
      const Scalar w = reverse ? p(t, s) : p(s, t);
      if (w > Scalar(kEdgeThreshold) && !seen[static_cast<std::size_t>(t)]) {
        seen[static_cast<std::size_t>(t)] = true;
        stack.push_back(t);
      }
    }
  }
  return seen;
}

template <class Solver>
void require_well_conditioned(const Solver& lu, const char* what) {
  const double rc = static_cast<double>(lu.rcond());
  if (!(rc > 1e-14)) {
    std::ostringstream os;
    os << what << " is numerically singular (rcond " << rc << ")";
    throw SingularSystem(os.str());
  }
}

}  // namespace detail

/// Strong connectivity of the transition graph, via one forward and one
/// backward traversal from state 0.
template <class Derived>
bool is_irreducible(const Eigen::MatrixBase<Derived>& p) {
  if (p.rows() == 0 || p.rows() != p.cols()) return false;
  for (bool b : detail::reachable_from_zero(p, false))
    if (!b) return false;
  for (bool b : detail::reachable_from_zero(p, true))
    if (!b) return false;
  return true;
}

/// Stationary distribution of an irreducible chain: solves (I - P^T) x = 0
/// with the last equation replaced by sum(x) = 1.
template <class Derived>
Vector<typename Derived::Scalar> invariant_distribution(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  const Index n = p.rows();
  Matrix<Scalar> a = Matrix<Scalar>::Identity(n, n) - p.transpose();
  a.row(n - 1).setOnes();
  Vector<Scalar> b = Vector<Scalar>::Zero(n);
  b(n - 1) = Scalar(1);

  Eigen::PartialPivLU<Matrix<Scalar>> lu(a);
  detail::require_well_conditioned(lu, "stationary system");
  Vector<Scalar> x = lu.solve(b);

  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(x(i))) || x(i) < Scalar(-1e-12))
      throw SingularSystem("stationary solve produced an invalid distribution");
    if (x(i) < Scalar(0)) x(i) = Scalar(0);
  }
  return x / x.sum();
}

template <class Scalar>
struct FundamentalPair {
  Matrix<Scalar> fundamental;
  Matrix<Scalar> group_inverse;
};

/// Z = (I - P + 1 pi^T)^{-1} and (I - P)^# = Z - 1 pi^T.
template <class DerivedP, class DerivedPi>
FundamentalPair<typename DerivedP::Scalar> fundamental_and_group_inverse(const Eigen::MatrixBase<DerivedP>& p,
                                                                        const Eigen::MatrixBase<DerivedPi>& invariant) {
  using Scalar = typename DerivedP::Scalar;
  const Index n = p.rows();
  const Matrix<Scalar> limit = Vector<Scalar>::Ones(n) * invariant.transpose();
  Eigen::PartialPivLU<Matrix<Scalar>> lu(Matrix<Scalar>::Identity(n, n) - p + limit);
  detail::require_well_conditioned(lu, "fundamental matrix");
  FundamentalPair<Scalar> out;
  out.fundamental = lu.inverse();
  out.group_inverse = out.fundamental - limit;
  return out;
}

template <class DerivedP, class DerivedR, class DerivedPi>
typename DerivedR::Scalar gain(const Eigen::MatrixBase<DerivedP>&, const Eigen::MatrixBase<DerivedR>& r,
                               const Eigen::MatrixBase<DerivedPi>& invariant) {
  return invariant.dot(r);
}

/// Bias h = (I - P)^# (r - g 1), given the group inverse.
template <class DerivedA, class DerivedR, class DerivedPi>
Vector<typename DerivedR::Scalar> solve_poisson_with(const Eigen::MatrixBase<DerivedA>& group_inverse,
                                                     const Eigen::MatrixBase<DerivedR>& r,
                                                     const Eigen::MatrixBase<DerivedPi>& invariant,
                                                     typename DerivedR::Scalar g) {
  using Scalar = typename DerivedR::Scalar;
  const Vector<Scalar> rhs = r - Vector<Scalar>::Constant(r.size(), g);
  const Scalar defect = invariant.dot(rhs);
  if (std::abs(defect) > Scalar(1e-9)) {
    std::ostringstream os;
    os << "Poisson right-hand side is not orthogonal to the invariant distribution (defect "
       << static_cast<double>(defect) << "); gain is not the chain's gain";
    throw CompatibilityViolation(os.str());
  }
  return group_inverse * rhs;
}

/// Solves (I - P) h = r - g 1 with invariant . h = 0.
template <class DerivedP, class DerivedR, class DerivedPi>
Vector<typename DerivedR::Scalar> solve_poisson(const Eigen::MatrixBase<DerivedP>& p,
                                                const Eigen::MatrixBase<DerivedR>& r,
                                                const Eigen::MatrixBase<DerivedPi>& invariant,
                                                typename DerivedR::Scalar g) {
  const auto pair = fundamental_and_group_inverse(p, invariant);
  return solve_poisson_with(pair.group_inverse, r, invariant, g);
}

template <class DerivedP, class DerivedR>
ChainSolution<typename DerivedP::Scalar> analyze_chain(const Eigen::MatrixBase<DerivedP>& p,
                                                       const Eigen::MatrixBase<DerivedR>& r) {
  if (!is_irreducible(p)) throw NotIrreducible("transition matrix is not irreducible");
  ChainSolution<typename DerivedP::Scalar> out;
  out.invariant = invariant_distribution(p);
  auto pair = fundamental_and_group_inverse(p, out.invariant);
  out.fundamental = std::move(pair.fundamental);
  out.group_inverse = std::move(pair.group_inverse);
  out.gain = gain(p, r, out.invariant);
  out.bias = solve_poisson_with(out.group_inverse, r, out.invariant, out.gain);
  return out;
}

/// Max-norm defects of the three group-inverse identities for A = I - P:
/// A A# A = A, A# A A# = A#, A A# = A# A.
template <class DerivedP, class DerivedA>
Eigen::Matrix<typename DerivedP::Scalar, 3, 1> group_inverse_defects(const Eigen::MatrixBase<DerivedP>& p,
                                                                    const Eigen::MatrixBase<DerivedA>& sharp) {
  using Scalar = typename DerivedP::Scalar;
  const Index n = p.rows();
  const Matrix<Scalar> a = Matrix<Scalar>::Identity(n, n) - p;
  Eigen::Matrix<Scalar, 3, 1> d;
  d << max_norm(a * sharp * a - a), max_norm(sharp * a * sharp - sharp), max_norm(a * sharp - sharp * a);
  return d;
}

}  // namespace sepmdp
