#include "oracles.hpp"
#include "sepmdp/perturbation.hpp"
#include "sepmdp/solvers.hpp"

#include <doctest.h>

#include <random>

using namespace sepmdp;

namespace {

/// Random MDP whose kernels are all strictly positive (every policy irreducible).
Mdp<double> random_mdp(Index n, Index na, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mdp<double> m;
  m.reward.resize(n, na);
  for (Index s = 0; s < n; ++s)
    for (Index a = 0; a < na; ++a) m.reward(s, a) = u(rng);
  for (Index a = 0; a < na; ++a) m.kernel.push_back(testing::random_positive_chain(n, rng, 0.02));
  return m;
}

/// Best gain over all policies, each evaluated by power iteration.
double exhaustive_gain_oracle(const Mdp<double>& m) {
  const Index n = m.n_states();
  const Index na = m.n_actions();
  Policy pi = Policy::constant(n, 0);
  double best = -1e300;
  while (true) {
    const auto [p, r] = restrict(m, pi);
    best = std::max(best, testing::power_iteration(p).dot(r));
    Index s = n - 1;
    for (; s >= 0; --s) {
      if (++pi[s] < na) break;
      pi[s] = 0;
    }
    if (s < 0) return best;
  }
}

}  // namespace

TEST_CASE("policy_evaluation") {
  Mdp<double> one;
  one.reward = (Matrix<double>(1, 2) << 3.0, -1.0).finished();
  one.kernel.assign(2, Matrix<double>::Ones(1, 1));
  const auto e = policy_evaluation(one, Policy{1});
  CHECK(e.gain == -1.0);
  CHECK(e.bias(0) == 0.0);
  CHECK(e.iterations == 0);

  const auto spec = sample_instance<double>(21, 4, 3, 1.0);
  const auto pag = per_action_gain(spec);
  const Mdp<double> m = assemble(spec);
  for (int a = 0; a < 3; ++a) CHECK(std::abs(policy_evaluation(m, Policy::constant(4, a)).gain - pag(a)) < 1e-13);

  Mdp<double> shifted = m;
  shifted.reward.array() += 1.75;
  const Policy pi{0, 2, 1, 1};
  const auto e0 = policy_evaluation(m, pi);
  const auto e1 = policy_evaluation(shifted, pi);
  CHECK(std::abs(e1.gain - e0.gain - 1.75) < 1e-13);
  CHECK(max_norm(e1.bias - e0.bias) < 1e-12);

  Mdp<double> reducible;
  reducible.reward = Matrix<double>::Zero(2, 1);
  reducible.kernel = {Matrix<double>::Identity(2, 2)};
  CHECK_THROWS_AS(policy_evaluation(reducible, Policy{0, 0}), NotIrreducible);
}

TEST_CASE("policy_iteration") {
  SUBCASE("single action") {
    std::mt19937_64 rng(1);
    const Mdp<double> m = random_mdp(4, 1, rng);
    const auto sol = policy_iteration(m, Policy::constant(4, 0));
    CHECK(sol.iterations == 1);
  }
  SUBCASE("separable model matches the closed form") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto spec = sample_instance<double>(seed, 5, 3, 1.0);
      const auto base = solve_baseline(spec);
      const auto sol = policy_iteration(assemble(spec), Policy::constant(5, 0));
      CHECK(std::abs(sol.gain - base.gain) < 1e-9);
    }
  }
  SUBCASE("gain is nondecreasing and the result satisfies the ACOE") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
      const Mdp<double> m = random_mdp(6, 4, rng);
      const auto sol = policy_iteration(m, Policy::constant(6, 0));
      for (std::size_t k = 1; k < sol.gain_history.size(); ++k)
        CHECK(sol.gain_history[k] >= sol.gain_history[k - 1] - 1e-12);
      CHECK(sol.acoe_residual_norm < 1e-9);
    }
  }
}

TEST_CASE("brute_force") {
  SUBCASE("one state picks the largest reward") {
    Mdp<double> one;
    one.reward = (Matrix<double>(1, 3) << 0.5, 2.0, -1.0).finished();
    one.kernel.assign(3, Matrix<double>::Ones(1, 1));
    const auto bf = brute_force(one);
    CHECK(bf.gain == 2.0);
    CHECK(bf.policy == Policy{1});
    CHECK(bf.iterations == 3);
  }
  SUBCASE("2x2 agrees with policy iteration") {
    std::mt19937_64 rng(99);
    const Mdp<double> m = random_mdp(2, 2, rng);
    const auto bf = brute_force(m);
    CHECK(bf.iterations == 4);
    CHECK(std::abs(bf.gain - policy_iteration(m, Policy{0, 0}).gain) < 1e-12);
  }
  SUBCASE("equal rewards: lexicographically smallest policy") {
    std::mt19937_64 rng(5);
    Mdp<double> m = random_mdp(3, 3, rng);
    m.reward.setConstant(0.7);
    CHECK(brute_force(m).policy == Policy{0, 0, 0});
  }
  SUBCASE("cap") {
    std::mt19937_64 rng(5);
    const Mdp<double> m = random_mdp(5, 4, rng);
    CHECK_THROWS_AS(brute_force(m, 1000), CapExceeded);
    CHECK_NOTHROW(brute_force(m, 1024));
  }
}

TEST_CASE("relative_value_iteration") {
  SUBCASE("single state") {
    Mdp<double> one;
    one.reward = (Matrix<double>(1, 3) << 0.5, 2.0, -1.0).finished();
    one.kernel.assign(3, Matrix<double>::Ones(1, 1));
    const auto rvi = relative_value_iteration(one, 1e-10);
    CHECK(rvi.sweeps == 1);
    CHECK(rvi.gain == 2.0);
  }
  SUBCASE("periodic chain converges thanks to damping") {
    Mdp<double> m;
    m.reward = (Matrix<double>(2, 1) << 1.0, 0.0).finished();
    m.kernel = {(Matrix<double>(2, 2) << 0, 1, 1, 0).finished()};
    const auto rvi = relative_value_iteration(m, 1e-10);
    CHECK(std::abs(rvi.gain - 0.5) < 1e-10);
  }
  SUBCASE("worked 2-state instance matches brute force") {
    Matrix<double> pa(2, 2);
    pa << 0.8, 0.2, 0.5, 0.5;
    const auto spec = SeparableSpec<double>::unperturbed((Vector<double>(2) << 1.0, 0.0).finished(),
                                                         (Vector<double>(2) << 0.0, 0.25).finished(), pa);
    const Mdp<double> m = assemble(spec);
    const auto rvi = relative_value_iteration(m, 1e-10);
    CHECK(std::abs(rvi.gain - brute_force(m).gain) < 1e-9);
    REQUIRE(rvi.greedy_gain);
  }
}

TEST_CASE("property: three solvers and an exhaustive oracle agree") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 1 + trial % 6;
    const Index na = 1 + (trial / 6) % 4;
    const Mdp<double> m = random_mdp(n, na, rng);
    const auto bf = brute_force(m);
    const auto pi = policy_iteration(m, Policy::constant(n, 0));
    const auto rvi = relative_value_iteration(m, 1e-10);
    CHECK(std::abs(pi.gain - bf.gain) < 1e-9);
    CHECK(std::abs(rvi.gain - bf.gain) < 1e-9);
    CHECK(std::abs(exhaustive_gain_oracle(m) - bf.gain) < 1e-10);
    CHECK(bf.acoe_residual_norm < 1e-8);
  }
}
