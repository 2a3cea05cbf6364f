#pragma once

#include "sepmdp/chain.hpp"
#include "sepmdp/fit.hpp"
#include "sepmdp/mdp.hpp"
#include "sepmdp/separable.hpp"
#include "sepmdp/solvers.hpp"

#include <algorithm>
#include <cstdint>
#include <future>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <type_traits>
#include <utility>
#include <vector>

namespace sepmdp {

/// Residuals at or below this are treated as exactly zero in slope fits.
inline constexpr double kResidualFloor = 1e-12;

/// First-order expansion of one policy's invariant distribution and gain,
/// together with exact re-solves on an epsilon grid.
template <class Scalar = double>
struct ExpansionReport {
  Policy policy;
  Vector<Scalar> pi0;
  Vector<Scalar> pi1;
  Scalar g0{0};
  Scalar g1{0};
  /// (eps, |g_eps - g0 - eps g1|)
  std::vector<std::pair<Scalar, Scalar>> residual_curve;
  /// (eps, max |pi_eps - pi0 - eps pi1|)
  std::vector<std::pair<Scalar, Scalar>> invariant_residual_curve;
  /// Smallest K with invariant residual <= K eps^2 on the grid.
  Scalar invariant_k{0};
  /// Log-log slope of the gain residual; nullopt when fewer than two points
  /// exceed kResidualFloor.
  std::optional<Scalar> residual_slope;
};

template <class Scalar = double>
struct UniformConstant {
  Scalar value{0};
  bool sampled{false};  // true when M^N exceeded the cap and policies were sampled
  std::uint64_t policies{0};
};

template <class Scalar = double>
struct SweepPoint {
  Scalar epsilon{0};
  Scalar optimal_gain{0};
  Scalar fixed_policy_gain{0};
  Scalar gap{0};
  Policy optimal_policy;
  std::optional<Scalar> uniform_c;  // max_pi |g_pi^eps - g_pi^0| / eps, eps > 0 only
  bool uniform_c_sampled{false};
  bool brute_force_checked{false};
};

template <class Scalar = double>
struct SweepReport {
  int baseline_action{0};
  Scalar baseline_gain{0};
  Scalar epsilon_max{0};
  Scalar epsilon0{0};
  std::vector<SweepPoint<Scalar>> points;
  std::optional<Scalar> gap_slope;
  std::optional<Scalar> expansion_slope;
  Scalar uniform_c{0};
  bool uniform_c_sampled{false};

  std::vector<Scalar> epsilons() const { return column(&SweepPoint<Scalar>::epsilon); }
  std::vector<Scalar> gaps() const { return column(&SweepPoint<Scalar>::gap); }

  /// gap <= 2 C eps + tol at every point.
  bool gap_law_holds(Scalar tol = Scalar(1e-9)) const {
    return std::all_of(points.begin(), points.end(),
                       [&](const auto& p) { return p.gap <= Scalar(2) * uniform_c * p.epsilon + tol; });
  }

 private:
  std::vector<Scalar> column(Scalar SweepPoint<Scalar>::*field) const {
    std::vector<Scalar> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.*field);
    return out;
  }
};

struct SweepOptions {
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  unsigned threads = 1;
  std::uint64_t policy_sample = 4096;
  std::uint64_t sample_seed = 0;
};

namespace detail {

/// Gain of a policy by exact stationary solve, without the bias.
template <class Scalar>
Scalar policy_gain(const Mdp<Scalar>& m, const Policy& pi) {
  const auto [p, r] = restrict(m, pi);
  if (!is_irreducible(p)) {
    std::ostringstream os;
    os << "chain induced by policy " << pi << " is not irreducible";
    throw NotIrreducible(os.str());
  }
  return invariant_distribution(p).dot(r);
}

template <class Scalar>
void require_feasible(const SeparableSpec<Scalar>& spec, std::type_identity_t<std::span<const Scalar>> epsilons) {
  const Scalar bound = epsilon_max(spec);
  for (Scalar eps : epsilons)
    if (!(eps >= Scalar(0)) || (eps > Scalar(0) && eps >= bound)) {
      std::ostringstream os;
      os << "epsilon " << static_cast<double>(eps) << " is outside the feasible range [0, "
         << static_cast<double>(bound) << ")";
      throw EpsilonInfeasible(os.str(), static_cast<double>(bound));
    }
}

template <class Scalar>
Matrix<Scalar> perturbation_chain(const SeparableSpec<Scalar>& spec, const Policy& pi) {
  Matrix<Scalar> q(spec.n_states(), spec.n_states());
  for (Index s = 0; s < spec.n_states(); ++s) q.row(s) = spec.kernel_perturb[static_cast<std::size_t>(pi[s])].row(s);
  return q;
}

}  // namespace detail

/// Computes pi1 = pi0 Q_pi (I - P_pi^0)^# and g1 = pi0 . r_eps,pi + pi1 . r_pi^0,
/// then measures the second-order remainder by exact re-solves at each
/// grid epsilon. `spec.epsilon` is ignored.
template <class Scalar>
ExpansionReport<Scalar> first_order_expansion(const SeparableSpec<Scalar>& spec, const Policy& pi,
                                              std::type_identity_t<std::span<const Scalar>> epsilons) {
  const Mdp<Scalar> m0 = assemble(spec.with_epsilon(Scalar(0)));
  const auto [p0, r0] = restrict(m0, pi);
  if (!is_irreducible(p0)) {
    std::ostringstream os;
    os << "unperturbed chain of policy " << pi << " is not irreducible";
    throw NotIrreducible(os.str());
  }

  ExpansionReport<Scalar> out;
  out.policy = pi;
  out.pi0 = invariant_distribution(p0);
  const auto pair = fundamental_and_group_inverse(p0, out.pi0);
  const Matrix<Scalar> q = detail::perturbation_chain(spec, pi);
  Vector<Scalar> r_eps(spec.n_states());
  for (Index s = 0; s < spec.n_states(); ++s) r_eps(s) = spec.reward_perturb(s, pi[s]);

  // pi_eps (I - P0 - eps Q) = 0 differentiated at eps = 0: pi1 (I - P0) = pi0 Q.
  out.pi1 = (out.pi0.transpose() * q * pair.group_inverse).transpose();
  out.g0 = out.pi0.dot(r0);
  out.g1 = out.pi0.dot(r_eps) + out.pi1.dot(r0);

  std::vector<Scalar> xs, ys;
  for (Scalar eps : epsilons) {
    const auto [pe, re] = restrict(assemble(spec.with_epsilon(eps)), pi);
    if (!is_irreducible(pe)) {
      std::ostringstream os;
      os << "perturbed chain of policy " << pi << " is not irreducible at epsilon " << static_cast<double>(eps);
      throw NotIrreducible(os.str());
    }
    const Vector<Scalar> pie = invariant_distribution(pe);
    const Scalar ge = pie.dot(re);
    const Scalar gain_res = std::abs(ge - out.g0 - eps * out.g1);
    const Scalar inv_res = max_norm(pie - out.pi0 - eps * out.pi1);
    out.residual_curve.emplace_back(eps, gain_res);
    out.invariant_residual_curve.emplace_back(eps, inv_res);
    if (eps > Scalar(0)) out.invariant_k = std::max(out.invariant_k, inv_res / (eps * eps));
    xs.push_back(eps);
    ys.push_back(gain_res);
  }
  out.residual_slope = loglog_slope<Scalar>(xs, ys, Scalar(kResidualFloor));
  return out;
}

/// max over policies of |g_pi^eps - g_pi^0| / eps, all policies enumerated
/// when M^N <= cap, otherwise a seeded random sample (flagged).
template <class Scalar>
UniformConstant<Scalar> measure_uniform_c(const SeparableSpec<Scalar>& spec, Scalar eps,
                                          std::uint64_t cap = kDefaultEnumerationCap,
                                          std::uint64_t sample_size = 4096, std::uint64_t seed = 0) {
  if (!(eps > Scalar(0))) throw InvalidModel("uniform constant needs epsilon > 0");
  const Mdp<Scalar> m0 = assemble(spec.with_epsilon(Scalar(0)));
  const Mdp<Scalar> me = assemble(spec.with_epsilon(eps));
  const Index n = spec.n_states();
  const Index na = spec.n_actions();

  UniformConstant<Scalar> out;
  auto visit = [&](const Policy& pi) {
    const Scalar c = std::abs(detail::policy_gain(me, pi) - detail::policy_gain(m0, pi)) / eps;
    out.value = std::max(out.value, c);
    ++out.policies;
  };

  if (const auto count = policy_count(n, na, cap)) {
    Policy pi = Policy::constant(n, 0);
    for (std::uint64_t k = 0; k < *count; ++k) {
      visit(pi);
      for (Index s = n - 1; s >= 0; --s) {
        if (++pi[s] < na) break;
        pi[s] = 0;
      }
    }
  } else {
    out.sampled = true;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(na) - 1);
    for (std::uint64_t k = 0; k < sample_size; ++k) {
      std::vector<int> actions(static_cast<std::size_t>(n));
      for (auto& a : actions) a = pick(rng);
      visit(Policy(std::move(actions)));
    }
  }
  return out;
}

/// Optimality gap of the baseline constant policy across an epsilon grid.
template <class Scalar>
SweepReport<Scalar> sweep(const SeparableSpec<Scalar>& spec, std::type_identity_t<std::span<const Scalar>> epsilons,
                          const SweepOptions& options = {}) {
  detail::require_feasible(spec, epsilons);
  const BaselineSolution<Scalar> baseline = solve_baseline(spec.with_epsilon(Scalar(0)));

  SweepReport<Scalar> report;
  report.baseline_action = baseline.best_action;
  report.baseline_gain = baseline.gain;
  report.epsilon_max = epsilon_max(spec);

  auto run_point = [&](Scalar eps) {
    const Mdp<Scalar> m = assemble(spec.with_epsilon(eps));
    SweepPoint<Scalar> pt;
    pt.epsilon = eps;
    const PolicySolution<Scalar> opt = policy_iteration(m, baseline.policy);
    pt.optimal_gain = opt.gain;
    pt.optimal_policy = opt.policy;
    if (policy_count(m.n_states(), m.n_actions(), options.enumeration_cap)) {
      const PolicySolution<Scalar> bf = brute_force(m, options.enumeration_cap);
      if (std::abs(bf.gain - opt.gain) > Scalar(1e-8)) {
        std::ostringstream os;
        os << "policy iteration gain " << static_cast<double>(opt.gain) << " disagrees with brute force "
           << static_cast<double>(bf.gain) << " at epsilon " << static_cast<double>(eps);
        throw CrossCheckFailure(os.str());
      }
      pt.brute_force_checked = true;
    }
    pt.fixed_policy_gain = policy_evaluation(m, baseline.policy).gain;
    pt.gap = pt.optimal_gain - pt.fixed_policy_gain;
    if (eps > Scalar(0)) {
      const auto c = measure_uniform_c(spec, eps, options.enumeration_cap, options.policy_sample, options.sample_seed);
      pt.uniform_c = c.value;
      pt.uniform_c_sampled = c.sampled;
    }
    return pt;
  };

  const std::size_t width = std::max(1u, options.threads);
  report.points.reserve(epsilons.size());
  for (std::size_t start = 0; start < epsilons.size(); start += width) {
    const std::size_t stop = std::min(epsilons.size(), start + width);
    if (width == 1) {
      report.points.push_back(run_point(epsilons[start]));
      continue;
    }
    std::vector<std::future<SweepPoint<Scalar>>> jobs;
    for (std::size_t i = start; i < stop; ++i) jobs.push_back(std::async(std::launch::async, run_point, epsilons[i]));
    for (auto& job : jobs) report.points.push_back(job.get());
  }

  std::vector<Scalar> pos_eps;
  std::vector<Scalar> pos_gap;
  for (const auto& pt : report.points) {
    if (pt.uniform_c) report.uniform_c = std::max(report.uniform_c, *pt.uniform_c);
    report.uniform_c_sampled = report.uniform_c_sampled || pt.uniform_c_sampled;
    report.epsilon0 = std::max(report.epsilon0, pt.epsilon);
    if (pt.epsilon > Scalar(0)) {
      pos_eps.push_back(pt.epsilon);
      pos_gap.push_back(pt.gap);
    }
  }
  report.epsilon0 = std::min(report.epsilon0, report.epsilon_max);
  report.gap_slope = loglog_slope<Scalar>(pos_eps, pos_gap, Scalar(kResidualFloor));
  if (!pos_eps.empty())
    report.expansion_slope = first_order_expansion<Scalar>(spec, baseline.policy, pos_eps).residual_slope;
  return report;
}

/// Random separable instance with every P_A entry bounded below by
/// min(0.05, 0.5 / N), so every assembled chain with eps < epsilon_max is
/// strictly positive and hence irreducible. Deterministic in `seed`.
template <class Scalar = double>
SeparableSpec<Scalar> sample_instance(std::uint64_t seed, Index n_states, Index n_actions, Scalar perturb_scale) {
  if (n_states < 1 || n_actions < 1) throw InvalidModel("sampler needs n_states >= 1 and n_actions >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  const double floor = std::min(0.05, 0.5 / static_cast<double>(n_states));
  auto stochastic_row = [&]() {
    Vector<Scalar> w(n_states);
    for (Index i = 0; i < n_states; ++i) w(i) = Scalar(expo(rng));
    const Scalar mass = Scalar(1) - Scalar(floor) * Scalar(n_states);
    return Vector<Scalar>((mass * w / w.sum()).array() + Scalar(floor));
  };

  SeparableSpec<Scalar> spec;
  spec.r_state.resize(n_states);
  for (Index i = 0; i < n_states; ++i) spec.r_state(i) = Scalar(unit(rng));
  spec.r_action.resize(n_actions);
  for (Index a = 0; a < n_actions; ++a) spec.r_action(a) = Scalar(unit(rng));
  spec.kernel_action.resize(n_actions, n_states);
  for (Index a = 0; a < n_actions; ++a) spec.kernel_action.row(a) = stochastic_row().transpose();
  spec.reward_perturb.resize(n_states, n_actions);
  for (Index s = 0; s < n_states; ++s)
    for (Index a = 0; a < n_actions; ++a) spec.reward_perturb(s, a) = Scalar(unit(rng));
  spec.kernel_perturb.assign(static_cast<std::size_t>(n_actions), Matrix<Scalar>(n_states, n_states));
  for (Index a = 0; a < n_actions; ++a)
    for (Index s = 0; s < n_states; ++s) {
      const Vector<Scalar> x = stochastic_row();
      const Vector<Scalar> y = stochastic_row();
      Vector<Scalar> d = perturb_scale * (x - y);
      d.array() -= d.mean();
      spec.kernel_perturb[static_cast<std::size_t>(a)].row(s) = d.transpose();
    }
  spec.epsilon = Scalar(0);
  return spec;
}

}  // namespace sepmdp
