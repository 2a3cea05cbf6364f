#include "sepmdp/chain.hpp"
#include "sepmdp/montecarlo.hpp"
#include "sepmdp/perturbation.hpp"

#include <doctest.h>

using namespace sepmdp;

namespace {

Mdp<double> worked_chain() {
  Mdp<double> m;
  m.reward = (Matrix<double>(2, 1) << 1.0, 0.0).finished();
  m.kernel = {(Matrix<double>(2, 2) << 0.9, 0.1, 0.2, 0.8).finished()};
  return m;
}

}  // namespace

TEST_CASE("simulate_gain") {
  SUBCASE("single state is exact") {
    Mdp<double> one;
    one.reward = (Matrix<double>(1, 2) << 0.1, 0.3).finished();
    one.kernel.assign(2, Matrix<double>::Ones(1, 1));
    const auto est = simulate_gain(one, Policy{0}, 20000, 20, 5);
    CHECK(est.mean == 0.1);
    CHECK(est.half_width == 0.0);
    CHECK(est.horizon == est.batches * (est.horizon / est.batches));
  }
  SUBCASE("constant reward is exact") {
    Mdp<double> m = worked_chain();
    m.reward.setConstant(0.7);
    const auto est = simulate_gain(m, Policy{0, 0}, 10000, 20, 1);
    CHECK(est.mean == 0.7);
    CHECK(est.half_width == 0.0);
  }
  SUBCASE("seed determinism") {
    const auto a = simulate_gain(worked_chain(), Policy{0, 0}, 20000, 20, 3);
    const auto b = simulate_gain(worked_chain(), Policy{0, 0}, 20000, 20, 3);
    CHECK(a.mean == b.mean);
    CHECK(a.half_width == b.half_width);
    const auto c = simulate_gain(worked_chain(), Policy{0, 0}, 20000, 20, 4);
    CHECK(a.mean != c.mean);
  }
  SUBCASE("argument checks") {
    CHECK_THROWS_AS(simulate_gain(worked_chain(), Policy{0, 0}, 1000, 20, 0), InvalidModel);
    CHECK_THROWS_AS(simulate_gain(worked_chain(), Policy{0, 0}, 2001, 20, 0), InvalidModel);
    CHECK_THROWS_AS(simulate_gain(worked_chain(), Policy{0, 0}, 2000, 1, 0), InvalidModel);
    Mdp<double> red;
    red.reward = Matrix<double>::Zero(2, 1);
    red.kernel = {Matrix<double>::Identity(2, 2)};
    CHECK_THROWS_AS(simulate_gain(red, Policy{0, 0}, 2000, 20, 0), NotIrreducible);
  }
}

TEST_CASE("property: confidence intervals cover the exact gain") {
  int covered = 0;
  const int runs = 100;
  for (int seed = 0; seed < runs; ++seed) {
    const auto spec = sample_instance<double>(static_cast<std::uint64_t>(seed), 3, 2, 1.0);
    const Mdp<double> m = assemble(spec.with_epsilon(0.05));
    const Policy pi{0, 1, 1};
    const auto [p, r] = restrict(m, pi);
    const double exact = analyze_chain(p, r).gain;
    const auto est = simulate_gain(m, pi, 100000, 20, static_cast<std::uint64_t>(seed));
    if (std::abs(est.mean - exact) <= 3 * est.half_width) ++covered;
  }
  CHECK(covered >= 95);
}
