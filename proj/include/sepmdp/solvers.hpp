#pragma once

#include "sepmdp/chain.hpp"
#include "sepmdp/mdp.hpp"
#include "sepmdp/separable.hpp"

#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

namespace sepmdp {

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

template <class Scalar = double>
struct PolicySolution {
  Policy policy;
  Scalar gain{0};
  Vector<Scalar> bias;
  Scalar acoe_residual_norm{0};
  std::uint64_t iterations{0};
  std::vector<Scalar> gain_history;  // gain after each evaluation, policy iteration only
};

/// M^N, or nullopt when it exceeds `limit`.
inline std::optional<std::uint64_t> policy_count(Index n_states, Index n_actions, std::uint64_t limit) {
  std::uint64_t count = 1;
  for (Index s = 0; s < n_states; ++s) {
    if (count > limit / static_cast<std::uint64_t>(n_actions)) return std::nullopt;
    count *= static_cast<std::uint64_t>(n_actions);
  }
  return count;
}

template <class Scalar>
PolicySolution<Scalar> policy_evaluation(const Mdp<Scalar>& m, const Policy& pi) {
  const auto [p, r] = restrict(m, pi);
  if (!is_irreducible(p)) {
    std::ostringstream os;
    os << "chain induced by policy " << pi << " is not irreducible";
    throw NotIrreducible(os.str());
  }
  const ChainSolution<Scalar> chain = analyze_chain(p, r);
  PolicySolution<Scalar> out;
  out.policy = pi;
  out.gain = chain.gain;
  out.bias = chain.bias;
  out.acoe_residual_norm = max_norm(acoe_residual(m, out.gain, out.bias));
  return out;
}

/// Howard policy iteration for unichain average-reward MDPs.
///
/// A state switches action only when the best Q-value beats the current one by
/// more than 1e-12; among maximizers the smallest index wins.
template <class Scalar>
PolicySolution<Scalar> policy_iteration(const Mdp<Scalar>& m, const Policy& initial) {
  const Scalar improve_tol(1e-12);
  const std::uint64_t max_rounds =
      policy_count(m.n_states(), m.n_actions(), 10'000'000).value_or(10'000'000) + 1;

  Policy pi = initial;
  std::vector<Scalar> history;
  for (std::uint64_t round = 1; round <= max_rounds; ++round) {
    PolicySolution<Scalar> eval = policy_evaluation(m, pi);
    if (!history.empty() && eval.gain < history.back() - Scalar(1e-10)) {
      std::ostringstream os;
      os << "policy iteration gain decreased from " << static_cast<double>(history.back()) << " to "
         << static_cast<double>(eval.gain);
      throw CrossCheckFailure(os.str());
    }
    history.push_back(eval.gain);

    const Matrix<Scalar> q = q_values(m, eval.bias);
    Policy next = pi;
    for (Index s = 0; s < m.n_states(); ++s) {
      Index best = 0;
      for (Index a = 1; a < m.n_actions(); ++a)
        if (q(s, a) > q(s, best)) best = a;
      if (q(s, best) > q(s, pi[s]) + improve_tol) next[s] = static_cast<int>(best);
    }
    if (next == pi) {
      eval.iterations = round;
      eval.gain_history = std::move(history);
      return eval;
    }
    pi = std::move(next);
  }
  throw NonConvergence("policy iteration exceeded the policy-count bound on improvement rounds");
}

/// Exhaustive search over all M^N deterministic stationary policies. Policies
/// are visited in lexicographic order and only a strict improvement beyond
/// 1e-12 replaces the incumbent, so ties resolve to the smallest action vector.
template <class Scalar>
PolicySolution<Scalar> brute_force(const Mdp<Scalar>& m, std::uint64_t cap = kDefaultEnumerationCap) {
  const Index n = m.n_states();
  const Index na = m.n_actions();
  const auto count = policy_count(n, na, cap);
  if (!count) {
    std::ostringstream os;
    os << "brute force needs " << na << "^" << n << " policies, above the cap " << cap;
    throw CapExceeded(os.str());
  }

  Policy pi = Policy::constant(n, 0);
  std::optional<PolicySolution<Scalar>> best;
  for (std::uint64_t k = 0; k < *count; ++k) {
    PolicySolution<Scalar> eval = policy_evaluation(m, pi);
    if (!best || eval.gain > best->gain + Scalar(1e-12)) best = std::move(eval);
    for (Index s = n - 1; s >= 0; --s) {
      if (++pi[s] < na) break;
      pi[s] = 0;
    }
  }
  best->iterations = *count;
  return *best;
}

template <class Scalar = double>
struct RviResult {
  Scalar gain{0};
  Vector<Scalar> bias;
  Policy policy;
  std::uint64_t sweeps{0};
  Scalar span{0};
  std::optional<Scalar> greedy_gain;  // exact gain of `policy`, when its chain is irreducible
};

/// Damped relative value iteration v <- (1 - tau) v + tau T(v), re-centred at
/// state 0. The gain estimate is the midpoint of min/max of T(v) - v.
template <class Scalar>
RviResult<Scalar> relative_value_iteration(const Mdp<Scalar>& m, Scalar span_tol,
                                           std::uint64_t max_sweeps = 1'000'000, Scalar tau = Scalar(0.5)) {
  const Index n = m.n_states();
  Vector<Scalar> v = Vector<Scalar>::Zero(n);
  for (std::uint64_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    const Matrix<Scalar> q = q_values(m, v);
    const Vector<Scalar> tv = q.rowwise().maxCoeff();
    const Vector<Scalar> diff = tv - v;
    const Scalar hi = diff.maxCoeff();
    const Scalar lo = diff.minCoeff();
    if (hi - lo < span_tol) {
      RviResult<Scalar> out;
      out.gain = (hi + lo) / Scalar(2);
      out.bias = v;
      out.policy = maximizer_profile(m, v);
      out.sweeps = sweep;
      out.span = hi - lo;
      const auto [p, r] = restrict(m, out.policy);
      if (is_irreducible(p)) {
        out.greedy_gain = policy_evaluation(m, out.policy).gain;
        if (std::abs(*out.greedy_gain - out.gain) > span_tol) {
          std::ostringstream os;
          os << "greedy policy gain " << static_cast<double>(*out.greedy_gain) << " is outside the span bound of "
             << static_cast<double>(out.gain);
          throw CrossCheckFailure(os.str());
        }
      }
      return out;
    }
    v = (Scalar(1) - tau) * v + tau * tv;
    v.array() -= v(0);
  }
  throw NonConvergence("relative value iteration did not reach the span tolerance");
}

}  // namespace sepmdp
