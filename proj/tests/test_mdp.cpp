#include "oracles.hpp"
#include "sepmdp/mdp.hpp"
#include "sepmdp/perturbation.hpp"

#include <doctest.h>

#include <limits>
#include <random>

using namespace sepmdp;

namespace {

Mdp<double> single_row_mdp(std::initializer_list<double> row) {
  Mdp<double> m;
  const auto n = static_cast<Index>(row.size());
  m.reward = Matrix<double>::Zero(n, 1);
  Matrix<double> k(n, n);
  for (Index s = 0; s < n; ++s) {
    Index j = 0;
    for (double x : row) k(s, j++) = x;
  }
  m.kernel = {k};
  return m;
}

SeparableSpec<double> half_half_spec() {
  Matrix<double> pa(1, 2);
  pa << 0.5, 0.5;
  auto spec = SeparableSpec<double>::unperturbed(Vector<double>::Zero(2), Vector<double>::Zero(1), pa);
  spec.kernel_perturb[0] << 0.5, -0.5, 0.5, -0.5;
  return spec;
}

}  // namespace

TEST_CASE("validate_mdp reports row-level violations") {
  Mdp<double> one;
  one.reward = Matrix<double>::Constant(1, 1, 3.0);
  one.kernel = {Matrix<double>::Ones(1, 1)};
  CHECK(validate_mdp(one).empty());

  const auto sum_report = validate_mdp(single_row_mdp({0.6, 0.6}));
  REQUIRE(sum_report.size() == 2);  // one per state row
  CHECK(sum_report[0].state == 0);
  CHECK(sum_report[0].action == 0);
  CHECK(sum_report[0].message == "row sum 1.2 != 1");

  Mdp<double> range = single_row_mdp({1.2, -0.2});
  range.reward.resize(2, 1);
  range.reward.setZero();
  const auto range_report = validate_mdp(range);
  // rows still sum to 1; each row has one negative and one > 1 entry
  REQUIRE(range_report.size() == 4);
  CHECK(range_report[0].message.find("> 1") != std::string::npos);
  CHECK(range_report[1].message.find("< 0") != std::string::npos);

  Mdp<double> nan_reward = single_row_mdp({0.5, 0.5});
  nan_reward.reward(1, 0) = std::numeric_limits<double>::quiet_NaN();
  const auto nan_report = validate_mdp(nan_reward);
  REQUIRE(nan_report.size() == 1);
  CHECK(nan_report[0].state == 1);
}

TEST_CASE("assemble combines separable parts and perturbations") {
  SUBCASE("eps = 0 reproduces the separable model exactly") {
    const auto spec = sample_instance<double>(11, 4, 3, 1.0);
    const Mdp<double> m = assemble(spec);
    for (Index s = 0; s < 4; ++s)
      for (Index a = 0; a < 3; ++a) {
        CHECK(m.reward(s, a) == spec.r_state(s) + spec.r_action(a));
        CHECK((m.kernel[a].row(s).array() == spec.kernel_action.row(a).array()).all());
      }
  }
  SUBCASE("linear combination of the kernel row") {
    const Mdp<double> m = assemble(half_half_spec().with_epsilon(0.2));
    CHECK(m.kernel[0](0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(m.kernel[0](0, 1) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(validate_mdp(m).empty());
  }
  SUBCASE("negative entries are rejected") {
    CHECK_THROWS_AS(assemble(half_half_spec().with_epsilon(1.5)), AssemblyInfeasible);
  }
}

TEST_CASE("epsilon_max is the sharp nonnegativity bound") {
  const auto null_spec = SeparableSpec<double>::unperturbed(Vector<double>::Zero(2), Vector<double>::Zero(1),
                                                            Matrix<double>::Constant(1, 2, 0.5));
  CHECK(epsilon_max(null_spec) == std::numeric_limits<double>::infinity());
  CHECK(epsilon_max(half_half_spec()) == doctest::Approx(1.0));

  auto two = half_half_spec();
  two.kernel_perturb[0] << 0.5, -0.5, -2.0, 2.0;  // ratios 1.0 and 0.25
  CHECK(epsilon_max(two) == doctest::Approx(0.25));
  CHECK_NOTHROW(assemble(two.with_epsilon(0.25)));
  CHECK_THROWS_AS(assemble(two.with_epsilon(0.26)), AssemblyInfeasible);
}

TEST_CASE("restrict picks the policy's rows") {
  Mdp<double> one;
  one.reward = Matrix<double>(1, 2);
  one.reward << 2.0, 7.0;
  one.kernel = {Matrix<double>::Ones(1, 1), Matrix<double>::Ones(1, 1)};
  const auto [p1, r1] = restrict(one, Policy{1});
  CHECK(p1(0, 0) == 1.0);
  CHECK(r1(0) == 7.0);

  Mdp<double> m;
  m.reward = Matrix<double>(2, 2);
  m.reward << 1, 2, 3, 4;
  Matrix<double> k0(2, 2), k1(2, 2);
  k0 << 0.1, 0.9, 0.2, 0.8;
  k1 << 0.3, 0.7, 0.4, 0.6;
  m.kernel = {k0, k1};
  const auto [p, r] = restrict(m, Policy{0, 1});
  // index-by-hand: state 0 uses action 0, state 1 uses action 1
  CHECK(p(0, 0) == 0.1);
  CHECK(p(0, 1) == 0.9);
  CHECK(p(1, 0) == 0.4);
  CHECK(p(1, 1) == 0.6);
  CHECK(r(0) == 1.0);
  CHECK(r(1) == 4.0);
  CHECK_THROWS_AS(restrict(m, Policy{0, 2}), InvalidModel);
}

TEST_CASE("property: assembled models are valid and affine in eps") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 5);
    const Index na = 1 + static_cast<Index>(seed % 4);
    const auto spec = sample_instance<double>(seed, n, na, 0.5 + 0.1 * static_cast<double>(seed % 7));
    const double bound = epsilon_max(spec);
    REQUIRE(bound > 0);
    const Mdp<double> m0 = assemble(spec);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      const double eps = u(rng) * std::min(bound, 10.0) * 0.999;
      const Mdp<double> me = assemble(spec.with_epsilon(eps));
      CHECK(validate_mdp(me).empty());
      CHECK(max_norm(me.reward - m0.reward - eps * spec.reward_perturb) < 1e-14);
      for (Index a = 0; a < na; ++a)
        CHECK(max_norm(me.kernel[a] - m0.kernel[a] - eps * spec.kernel_perturb[a]) < 1e-14);
    }
    for (Index a = 0; a < na; ++a) {
      const auto [p, r] = restrict(m0, Policy::constant(n, static_cast<int>(a)));
      for (Index s = 0; s < n; ++s) CHECK((p.row(s).array() == spec.kernel_action.row(a).array()).all());
    }
  }
}

TEST_CASE("templated on scalar: long double assembly") {
  Matrix<long double> pa(1, 2);
  pa << 0.5L, 0.5L;
  auto spec = SeparableSpec<long double>::unperturbed(Vector<long double>::Zero(2), Vector<long double>::Zero(1), pa);
  spec.kernel_perturb[0] << 0.5L, -0.5L, 0.5L, -0.5L;
  CHECK(epsilon_max(spec) == 1.0L);
  const auto m = assemble(spec.with_epsilon(0.2L));
  CHECK(validate_mdp(m).empty());
}
