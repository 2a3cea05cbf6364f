#pragma once

#include "sepmdp/chain.hpp"
#include "sepmdp/errors.hpp"
#include "sepmdp/mdp.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <vector>

namespace sepmdp {

inline constexpr std::uint64_t kDefaultBatches = 20;

template <class Scalar = double>
struct SimEstimate {
  Scalar mean{0};
  Scalar half_width{0};  // 95% batch-means confidence half-width
  std::uint64_t horizon{0};
  std::uint64_t batches{0};
  std::uint64_t seed{0};
};

/// Long-run average reward of `pi` estimated from one simulated trajectory.
///
/// The trajectory starts in state 0 and runs horizon / 10 burn-in steps
/// before `horizon` recorded steps, split into `batches` equal batches.
/// Rewards are accumulated relative to the first recorded reward so that a
/// constant reward stream reproduces its value exactly.
template <class Scalar>
SimEstimate<Scalar> simulate_gain(const Mdp<Scalar>& m, const Policy& pi, std::uint64_t horizon,
                                  std::uint64_t batches, std::uint64_t seed) {
  if (batches < 2) throw InvalidModel("simulation needs at least 2 batches");
  if (horizon < 100 * batches) throw InvalidModel("simulation horizon must be at least 100 x batches");
  if (horizon % batches != 0) {
    std::ostringstream os;
    os << "horizon " << horizon << " is not a multiple of the batch count " << batches;
    throw InvalidModel(os.str());
  }
  const auto [p, r] = restrict(m, pi);
  if (!is_irreducible(p)) {
    std::ostringstream os;
    os << "chain induced by policy " << pi << " is not irreducible";
    throw NotIrreducible(os.str());
  }

  const Index n = p.rows();
  std::vector<std::vector<double>> cumulative(static_cast<std::size_t>(n));
  for (Index s = 0; s < n; ++s) {
    auto& row = cumulative[static_cast<std::size_t>(s)];
    double acc = 0.0;
    for (Index t = 0; t < n; ++t) row.push_back(acc += static_cast<double>(p(s, t)));
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Index state = 0;
  auto step = [&] {
    const auto& row = cumulative[static_cast<std::size_t>(state)];
    const double u = unit(rng) * row.back();
    Index next = 0;
    while (next + 1 < n && row[static_cast<std::size_t>(next)] <= u) ++next;
    state = next;
  };

  for (std::uint64_t t = 0; t < horizon / 10; ++t) step();

  const std::uint64_t batch_len = horizon / batches;
  const Scalar anchor = r(state);
  std::vector<Scalar> batch_means;
  batch_means.reserve(batches);
  for (std::uint64_t b = 0; b < batches; ++b) {
    Scalar sum(0);
    for (std::uint64_t t = 0; t < batch_len; ++t) {
      sum += r(state) - anchor;
      step();
    }
    batch_means.push_back(sum / Scalar(batch_len));
  }

  Scalar centre(0);
  for (Scalar x : batch_means) centre += x;
  centre /= Scalar(batches);
  Scalar ss(0);
  for (Scalar x : batch_means) ss += (x - centre) * (x - centre);
  const Scalar variance = ss / Scalar(batches - 1);

  const boost::math::students_t dist(static_cast<double>(batches - 1));
  const double t_crit = boost::math::quantile(dist, 0.975);

  SimEstimate<Scalar> out;
  out.mean = anchor + centre;
  out.half_width = Scalar(t_crit) * std::sqrt(variance / Scalar(batches));
  out.horizon = horizon;
  out.batches = batches;
  out.seed = seed;
  return out;
}

}  // namespace sepmdp
