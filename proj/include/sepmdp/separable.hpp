#pragma once

#include "sepmdp/chain.hpp"
#include "sepmdp/mdp.hpp"

#include <string>
#include <vector>

namespace sepmdp {

/// Optimal constant policy of the totally separable model, with its gain and bias.
template <class Scalar = double>
struct BaselineSolution {
  int best_action{0};
  Scalar gain{0};
  Vector<Scalar> per_action_gain;
  Vector<Scalar> bias;
  Vector<Scalar> invariant;  // stationary distribution under best_action
  Policy policy;
};

/// Chain of the constant policy `a` at eps = 0: every row equals P_A(.|a).
template <class Scalar>
Matrix<Scalar> constant_action_chain(const SeparableSpec<Scalar>& spec, Index a) {
  return spec.kernel_action.row(a).replicate(spec.n_states(), 1);
}

namespace detail {

template <class Scalar>
void require_irreducible_actions(const SeparableSpec<Scalar>& spec) {
  std::vector<int> bad;
  for (Index a = 0; a < spec.n_actions(); ++a)
    if (!is_irreducible(constant_action_chain(spec, a))) bad.push_back(static_cast<int>(a));
  if (bad.empty()) return;
  std::string msg = "kernel_action is not irreducible for action";
  msg += bad.size() > 1 ? "s" : "";
  for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? ", " : " ") + std::to_string(bad[i]);
  throw NotIrreducible(msg, std::move(bad));
}

}  // namespace detail

/// g(a) = pi_a . r_S + r_A(a) for every action.
template <class Scalar>
Vector<Scalar> per_action_gain(const SeparableSpec<Scalar>& spec) {
  if (auto report = validate_spec(spec); !report.empty())
    throw InvalidModel("separable spec is invalid: " + report.front().message);
  detail::require_irreducible_actions(spec);
  Vector<Scalar> g(spec.n_actions());
  for (Index a = 0; a < spec.n_actions(); ++a)
    g(a) = invariant_distribution(constant_action_chain(spec, a)).dot(spec.r_state) + spec.r_action(a);
  return g;
}

/// Closed-form optimum of the eps = 0 model. Ties go to the smallest action index.
template <class Scalar>
BaselineSolution<Scalar> solve_baseline(const SeparableSpec<Scalar>& spec) {
  BaselineSolution<Scalar> out;
  out.per_action_gain = per_action_gain(spec);
  for (Index a = 1; a < spec.n_actions(); ++a)
    if (out.per_action_gain(a) > out.per_action_gain(out.best_action)) out.best_action = static_cast<int>(a);
  out.gain = out.per_action_gain(out.best_action);
  out.policy = Policy::constant(spec.n_states(), out.best_action);

  const Matrix<Scalar> p = constant_action_chain(spec, out.best_action);
  const Vector<Scalar> r = spec.r_state.array() + spec.r_action(out.best_action);
  out.invariant = invariant_distribution(p);
  out.bias = solve_poisson(p, r, out.invariant, out.gain);
  return out;
}

/// Q-values r(s,a) + sum_s' P(s'|s,a) h(s') as an N x M matrix.
template <class Scalar, class Derived>
Matrix<Scalar> q_values(const Mdp<Scalar>& m, const Eigen::MatrixBase<Derived>& h) {
  Matrix<Scalar> q = m.reward;
  for (Index a = 0; a < m.n_actions(); ++a) q.col(a) += m.kernel[static_cast<std::size_t>(a)] * h;
  return q;
}

/// ACOE defect per state: max_a [r(s,a) + P(.|s,a) h] - g - h(s).
template <class Scalar, class Derived>
Vector<Scalar> acoe_residual(const Mdp<Scalar>& m, Scalar g, const Eigen::MatrixBase<Derived>& h) {
  return q_values(m, h).rowwise().maxCoeff() - Vector<Scalar>::Constant(m.n_states(), g) - h;
}

/// Smallest maximizing action per state.
template <class Scalar, class Derived>
Policy maximizer_profile(const Mdp<Scalar>& m, const Eigen::MatrixBase<Derived>& h) {
  const Matrix<Scalar> q = q_values(m, h);
  std::vector<int> best(static_cast<std::size_t>(m.n_states()), 0);
  for (Index s = 0; s < q.rows(); ++s)
    for (Index a = 1; a < q.cols(); ++a)
      if (q(s, a) > q(s, best[static_cast<std::size_t>(s)])) best[static_cast<std::size_t>(s)] = static_cast<int>(a);
  return Policy(std::move(best));
}

}  // namespace sepmdp
