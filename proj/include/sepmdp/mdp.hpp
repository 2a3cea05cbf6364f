#pragma once

#include "sepmdp/errors.hpp"
#include "sepmdp/types.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sepmdp {

/// Absolute tolerance used for every stochasticity check.
inline constexpr double kStochasticTol = 1e-12;

/// Flat finite MDP.
///
/// `reward(s, a)` is the one-stage reward; `kernel[a]` is an N x N row-stochastic
/// matrix whose row s is P(. | s, a).
template <class Scalar = double>
struct Mdp {
  Matrix<Scalar> reward;
  std::vector<Matrix<Scalar>> kernel;

  Index n_states() const { return reward.rows(); }
  Index n_actions() const { return reward.cols(); }
};

/// Nearly separable model
///   r(s,a)    = r_S(s) + r_A(a) + eps * r_eps(s,a)
///   P(.|s,a)  = P_A(.|a) + eps * Q(.|s,a)
///
/// `kernel_action` is M x N (row a is P_A(.|a)), `reward_perturb` is N x M and
/// `kernel_perturb[a]` is N x N with row s equal to Q(.|s,a).
template <class Scalar = double>
struct SeparableSpec {
  Vector<Scalar> r_state;
  Vector<Scalar> r_action;
  Matrix<Scalar> kernel_action;
  Scalar epsilon{0};
  Matrix<Scalar> reward_perturb;
  std::vector<Matrix<Scalar>> kernel_perturb;

  Index n_states() const { return r_state.size(); }
  Index n_actions() const { return r_action.size(); }

  /// Spec with zero perturbation terms of matching shape.
  static SeparableSpec unperturbed(Vector<Scalar> r_state, Vector<Scalar> r_action,
                                   Matrix<Scalar> kernel_action) {
    SeparableSpec spec;
    const Index n = r_state.size();
    const Index m = r_action.size();
    spec.r_state = std::move(r_state);
    spec.r_action = std::move(r_action);
    spec.kernel_action = std::move(kernel_action);
    spec.reward_perturb = Matrix<Scalar>::Zero(n, m);
    spec.kernel_perturb.assign(static_cast<std::size_t>(m), Matrix<Scalar>::Zero(n, n));
    return spec;
  }

  SeparableSpec with_epsilon(Scalar eps) const {
    SeparableSpec copy = *this;
    copy.epsilon = eps;
    return copy;
  }

  friend bool operator==(const SeparableSpec& a, const SeparableSpec& b) {
    if (a.kernel_perturb.size() != b.kernel_perturb.size()) return false;
    for (std::size_t i = 0; i < a.kernel_perturb.size(); ++i)
      if (!same(a.kernel_perturb[i], b.kernel_perturb[i])) return false;
    return a.epsilon == b.epsilon && same(a.r_state, b.r_state) && same(a.r_action, b.r_action) &&
           same(a.kernel_action, b.kernel_action) && same(a.reward_perturb, b.reward_perturb);
  }

 private:
  template <class D1, class D2>
  static bool same(const Eigen::MatrixBase<D1>& x, const Eigen::MatrixBase<D2>& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.array() == y.array()).all();
  }
};

/// One failed check. `state`/`action` are -1 when the check is not row-specific.
struct Violation {
  Index state{-1};
  Index action{-1};
  std::string message;
};

using ValidationReport = std::vector<Violation>;

namespace detail {

template <class Scalar>
std::string format_number(Scalar x) {
  std::ostringstream os;
  os.precision(12);
  os << static_cast<double>(x);
  return os.str();
}

template <class Derived>
void check_distribution_row(const Eigen::MatrixBase<Derived>& row, Index s, Index a, bool signed_row,
                            ValidationReport& report) {
  using Scalar = typename Derived::Scalar;
  const auto tol = Scalar(kStochasticTol);
  bool finite = true;
  for (Index j = 0; j < row.size(); ++j) {
    const Scalar x = row(j);
    if (!std::isfinite(static_cast<double>(x))) {
      report.push_back({s, a, "entry " + std::to_string(j) + " is not finite"});
      finite = false;
      continue;
    }
    if (signed_row) continue;
    if (x < -tol)
      report.push_back({s, a, "entry " + std::to_string(j) + " = " + format_number(x) + " < 0"});
    else if (x > Scalar(1) + tol)
      report.push_back({s, a, "entry " + std::to_string(j) + " = " + format_number(x) + " > 1"});
  }
  if (!finite) return;
  const Scalar target = signed_row ? Scalar(0) : Scalar(1);
  const Scalar sum = row.sum();
  if (std::abs(sum - target) > tol)
    report.push_back({s, a, "row sum " + format_number(sum) + " != " + format_number(target)});
}

}  // namespace detail

/// Checks shapes, stochasticity of every kernel row and finiteness of rewards.
template <class Scalar>
ValidationReport validate_mdp(const Mdp<Scalar>& m) {
  ValidationReport report;
  const Index n = m.n_states();
  const Index na = m.n_actions();
  if (n < 1) report.push_back({-1, -1, "n_states must be positive"});
  if (na < 1) report.push_back({-1, -1, "n_actions must be positive"});
  if (static_cast<Index>(m.kernel.size()) != na) {
    report.push_back({-1, -1, "kernel has " + std::to_string(m.kernel.size()) + " action blocks, expected " +
                                  std::to_string(na)});
    return report;
  }
  for (Index a = 0; a < na; ++a) {
    const auto& k = m.kernel[static_cast<std::size_t>(a)];
    if (k.rows() != n || k.cols() != n) {
      report.push_back({-1, a, "kernel block is not " + std::to_string(n) + "x" + std::to_string(n)});
      continue;
    }
    for (Index s = 0; s < n; ++s) detail::check_distribution_row(k.row(s), s, a, false, report);
  }
  for (Index s = 0; s < n; ++s)
    for (Index a = 0; a < na; ++a)
      if (!std::isfinite(static_cast<double>(m.reward(s, a))))
        report.push_back({s, a, "reward is not finite"});
  return report;
}

template <class Scalar>
ValidationReport validate_spec(const SeparableSpec<Scalar>& spec) {
  ValidationReport report;
  const Index n = spec.n_states();
  const Index na = spec.n_actions();
  if (n < 1) report.push_back({-1, -1, "n_states must be positive"});
  if (na < 1) report.push_back({-1, -1, "n_actions must be positive"});
  if (spec.kernel_action.rows() != na || spec.kernel_action.cols() != n)
    report.push_back({-1, -1, "kernel_action must be n_actions x n_states"});
  if (spec.reward_perturb.rows() != n || spec.reward_perturb.cols() != na)
    report.push_back({-1, -1, "reward_perturb must be n_states x n_actions"});
  if (static_cast<Index>(spec.kernel_perturb.size()) != na)
    report.push_back({-1, -1, "kernel_perturb must hold one block per action"});
  if (!(spec.epsilon >= Scalar(0)) || !std::isfinite(static_cast<double>(spec.epsilon)))
    report.push_back({-1, -1, "epsilon must be a finite nonnegative number"});
  if (!report.empty()) return report;

  for (Index i = 0; i < n; ++i)
    if (!std::isfinite(static_cast<double>(spec.r_state(i))))
      report.push_back({i, -1, "r_state entry is not finite"});
  for (Index a = 0; a < na; ++a)
    if (!std::isfinite(static_cast<double>(spec.r_action(a))))
      report.push_back({-1, a, "r_action entry is not finite"});
  for (Index a = 0; a < na; ++a) detail::check_distribution_row(spec.kernel_action.row(a), -1, a, false, report);
  for (Index s = 0; s < n; ++s)
    for (Index a = 0; a < na; ++a) {
      if (!std::isfinite(static_cast<double>(spec.reward_perturb(s, a))))
        report.push_back({s, a, "reward_perturb entry is not finite"});
      const auto& q = spec.kernel_perturb[static_cast<std::size_t>(a)];
      if (q.rows() != n || q.cols() != n) {
        if (s == 0) report.push_back({-1, a, "kernel_perturb block has wrong shape"});
        continue;
      }
      detail::check_distribution_row(q.row(s), s, a, true, report);
    }
  return report;
}

/// Largest eps >= 0 keeping every P_A(s'|a) + eps * Q(s'|s,a) nonnegative;
/// +infinity when no entry of Q is negative.
template <class Scalar>
Scalar epsilon_max(const SeparableSpec<Scalar>& spec) {
  Scalar bound = std::numeric_limits<Scalar>::infinity();
  for (Index a = 0; a < spec.n_actions(); ++a) {
    const auto& q = spec.kernel_perturb[static_cast<std::size_t>(a)];
    for (Index s = 0; s < q.rows(); ++s)
      for (Index t = 0; t < q.cols(); ++t)
        if (q(s, t) < Scalar(0)) bound = std::min(bound, spec.kernel_action(a, t) / -q(s, t));
  }
  return bound;
}

/// Assembles the flat MDP at `spec.epsilon`.
template <class Scalar>
Mdp<Scalar> assemble(const SeparableSpec<Scalar>& spec) {
  if (auto report = validate_spec(spec); !report.empty())
    throw InvalidModel("separable spec is invalid: " + report.front().message);
  const Index n = spec.n_states();
  const Index na = spec.n_actions();
  const Scalar eps = spec.epsilon;

  Mdp<Scalar> m;
  m.reward = (spec.r_state.replicate(1, na) + spec.r_action.transpose().replicate(n, 1)) + eps * spec.reward_perturb;
  m.kernel.reserve(static_cast<std::size_t>(na));
  for (Index a = 0; a < na; ++a) {
    Matrix<Scalar> k = spec.kernel_action.row(a).replicate(n, 1);
    if (eps != Scalar(0)) k += eps * spec.kernel_perturb[static_cast<std::size_t>(a)];
    for (Index s = 0; s < n; ++s)
      for (Index t = 0; t < n; ++t) {
        if (k(s, t) < -Scalar(kStochasticTol)) {
          std::ostringstream os;
          os << "assembled kernel entry P(" << t << "|" << s << "," << a << ") = " << static_cast<double>(k(s, t))
             << " is negative at epsilon " << static_cast<double>(eps);
          throw AssemblyInfeasible(os.str());
        }
        if (k(s, t) < Scalar(0)) k(s, t) = Scalar(0);
      }
    m.kernel.push_back(std::move(k));
  }
  return m;
}

/// Transition matrix and reward vector of the chain induced by a policy.
template <class Scalar>
std::pair<Matrix<Scalar>, Vector<Scalar>> restrict(const Mdp<Scalar>& m, const Policy& pi) {
  const Index n = m.n_states();
  if (!pi.is_valid(n, m.n_actions())) throw InvalidModel("policy does not match the MDP dimensions");
  Matrix<Scalar> p(n, n);
  Vector<Scalar> r(n);
  for (Index s = 0; s < n; ++s) {
    p.row(s) = m.kernel[static_cast<std::size_t>(pi[s])].row(s);
    r(s) = m.reward(s, pi[s]);
  }
  return {std::move(p), std::move(r)};
}

}  // namespace sepmdp
