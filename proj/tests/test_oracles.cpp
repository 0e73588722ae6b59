#include <gtest/gtest.h>

#include <cmath>

#include "avgrew/avgrew.hpp"

using namespace avgrew;

namespace {

MarkovChain swap_chain() {
  Matrix p(2, 2);
  p << 0, 1, 1, 0;
  Vector r(2);
  r << 1, 0;
  return {p, r};
}

MarkovChain complete_graph_walk(Index L) {
  const auto n = static_cast<Eigen::Index>(L);
  return {Matrix::Constant(n, n, 1.0 / static_cast<double>(L)), Vector::Zero(n)};
}

// Independent bias oracle: Cesaro average over N of the partial sums
// sum_{t<n} (P^t r - rho), which converges for periodic chains too.
Vector cesaro_bias(const MarkovChain& c, double rho, Index N) {
  const auto n = c.transition.rows();
  Vector x = c.reward;  // P^t r
  Vector partial = Vector::Zero(n), acc = Vector::Zero(n);
  for (Index k = 0; k < N; ++k) {
    partial += x - Vector::Constant(n, rho);
    acc += partial;
    x = c.transition * x;
  }
  return acc / static_cast<double>(N);
}

// Independent mixing oracle: explicit distribution propagation per start state.
Index brute_mixing(const MarkovChain& c, const Vector& mu, Index cap) {
  const auto n = c.transition.rows();
  Matrix rows = Matrix::Identity(n, n);
  for (Index t = 0; t <= cap; ++t) {
    double worst = 0;
    for (Eigen::Index s = 0; s < n; ++s) worst = std::max(worst, (rows.row(s).transpose() - mu).lpNorm<1>());
    if (worst <= 0.5) return t;
    rows = rows * c.transition;
  }
  return cap + 1;
}

}  // namespace

TEST(Classify, IdentityHasThreeClasses) {
  const auto cls = classify({Matrix::Identity(3, 3), Vector::Zero(3)});
  EXPECT_EQ(cls.recurrent_classes.size(), 3u);
  EXPECT_TRUE(cls.transient_states.empty());
}

TEST(Classify, SwapChainIsIrreducible) {
  const auto cls = classify(swap_chain());
  ASSERT_EQ(cls.recurrent_classes.size(), 1u);
  EXPECT_EQ(cls.recurrent_classes[0], (std::vector<Index>{0, 1}));
}

TEST(Classify, Figure2LeaveStay) {
  const auto f = build_figure2(20, 5);
  const auto cls = classify(induce_chain(f.mdp, DeterministicPolicy{{kLeave, kStay}}));
  ASSERT_EQ(cls.recurrent_classes.size(), 1u);
  EXPECT_EQ(cls.recurrent_classes[0], std::vector<Index>{1});
  EXPECT_EQ(cls.transient_states, std::vector<Index>{0});
}

TEST(Classify, TinyProbabilitiesAreNotEdges) {
  Matrix p(2, 2);
  p << 1 - 1e-16, 1e-16, 0, 1;
  EXPECT_EQ(classify({p, Vector::Zero(2)}).recurrent_classes.size(), 2u);
}

TEST(Stationary, SwapAndCompleteGraph) {
  EXPECT_TRUE(stationary_distribution(swap_chain()).isApprox(Vector::Constant(2, 0.5), 1e-14));
  for (Index L : {3, 10, 25})
    EXPECT_LE((stationary_distribution(complete_graph_walk(L)) - Vector::Constant(static_cast<Eigen::Index>(L), 1.0 / L))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-14);
}

TEST(Stationary, Figure2LeaveLeaveBalance) {
  const double m = 40, T = 6;
  const auto f = build_figure2(m, T);
  const Vector mu = stationary_distribution(induce_chain(f.mdp, DeterministicPolicy{{kLeave, kLeave}}));
  EXPECT_NEAR(mu(0), m / (m + T), 1e-12);
}

TEST(Stationary, MultichainThrows) {
  EXPECT_THROW(stationary_distribution({Matrix::Identity(2, 2), Vector::Zero(2)}), NotUnichain);
}

TEST(GainBias, SwapChainMatchesCesaroOracle) {
  const auto ev = gain_bias(swap_chain());
  const Vector oracle = cesaro_bias(swap_chain(), 0.5, 100000);
  EXPECT_NEAR(oracle(0), 0.25, 1e-4);
  EXPECT_NEAR(oracle(1), -0.25, 1e-4);
  ASSERT_TRUE(ev.bias);
  EXPECT_NEAR(ev.gain(0), 0.5, 1e-12);
  EXPECT_NEAR((*ev.bias)(0), 0.25, 1e-12);
  EXPECT_NEAR((*ev.bias)(1), -0.25, 1e-12);
}

TEST(GainBias, UnichainInvariantsOnRandomChains) {
  for (std::uint64_t t = 0; t < 100; ++t) {
    CounterRng rng(CounterRng::key_of(21, t));
    const auto c = random::unichain_chain(rng, random::integer(rng, 1, 7));
    const auto ev = gain_bias(c);
    ASSERT_TRUE(ev.unichain && ev.bias && ev.stationary);
    EXPECT_LE(span(ev.gain), 1e-9);
    EXPECT_NEAR(ev.stationary->sum(), 1.0, 1e-12);
    EXPECT_NEAR(ev.gain(0), ev.stationary->dot(c.reward), 1e-9);
    EXPECT_LE((ev.gain + *ev.bias - c.reward - c.transition * *ev.bias).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(GainBias, MultichainGainsAreAbsorptionMixtures) {
  // 0 -> {1 absorbing r=1, 2 absorbing r=0} with probs (0.25, 0.75), state 0 also loops.
  Matrix p(3, 3);
  p << 0.2, 0.2, 0.6, 0, 1, 0, 0, 0, 1;
  Vector r(3);
  r << 0.5, 1, 0;
  const auto ev = gain_bias({p, r});
  EXPECT_FALSE(ev.unichain);
  EXPECT_FALSE(ev.bias.has_value());
  EXPECT_NEAR(ev.gain(0), 0.25, 1e-12);
  EXPECT_NEAR(ev.gain(1), 1.0, 1e-12);
  EXPECT_NEAR(ev.gain(2), 0.0, 1e-12);
}

TEST(GainBias, MultichainGainInConvexHullOfReachableClasses) {
  for (std::uint64_t t = 0; t < 100; ++t) {
    CounterRng rng(CounterRng::key_of(22, t));
    const auto c = random::chain(rng, random::integer(rng, 2, 7));
    const auto ev = gain_bias(c);
    const auto cls = classify(c);
    double lo = 1e300, hi = -1e300;
    for (const auto& k : cls.recurrent_classes) {
      lo = std::min(lo, ev.gain(static_cast<Eigen::Index>(k[0])));
      hi = std::max(hi, ev.gain(static_cast<Eigen::Index>(k[0])));
    }
    for (Index s : cls.transient_states) {
      EXPECT_GE(ev.gain(static_cast<Eigen::Index>(s)), lo - 1e-12);
      EXPECT_LE(ev.gain(static_cast<Eigen::Index>(s)), hi + 1e-12);
    }
  }
}

TEST(HittingTimes, BasicCases) {
  const double T = 9;
  Matrix p(2, 2);
  p << 1, 0, 1 / T, 1 - 1 / T;
  const auto h = hitting_times({p, Vector::Zero(2)}, 0);
  EXPECT_EQ(h[0], Extended::finite(0.0));
  EXPECT_NEAR(h[1].value(), T, 1e-12);
  const auto blocked = hitting_times({Matrix::Identity(2, 2), Vector::Zero(2)}, 0);
  EXPECT_TRUE(blocked[1].is_infinite());
}

TEST(HittingTimes, PartialReachIsInfinite) {
  // From state 1 the chain may fall into absorbing state 2 and never reach 0.
  Matrix p(3, 3);
  p << 1, 0, 0, 0.5, 0, 0.5, 0, 0, 1;
  const auto h = hitting_times({p, Vector::Zero(3)}, 0);
  EXPECT_TRUE(h[1].is_infinite());
  EXPECT_TRUE(h[2].is_infinite());
}

TEST(HittingRadius, Examples) {
  for (Index L : {3, 10, 25}) {
    const auto hr = policy_hitting_radius(complete_graph_walk(L));
    EXPECT_NEAR(hr.t_hit.value(), static_cast<double>(L), 1e-10);
  }
  const double T = 11;
  Matrix p(2, 2);
  p << 1, 0, 1 / T, 1 - 1 / T;
  const auto hr = policy_hitting_radius({p, Vector::Zero(2)});
  EXPECT_NEAR(hr.t_hit.value(), T, 1e-12);
  EXPECT_EQ(hr.center, 0u);
  const auto multi = policy_hitting_radius({Matrix::Identity(2, 2), Vector::Zero(2)});
  EXPECT_TRUE(multi.t_hit.is_infinite());
  EXPECT_FALSE(multi.center.has_value());
}

TEST(MixingTime, Examples) {
  EXPECT_EQ(mixing_time(complete_graph_walk(10)).steps, 1u);
  Matrix lazy(2, 2);
  lazy << 1 - 1e-6, 1e-6, 1e-6, 1 - 1e-6;
  const auto slow = mixing_time({lazy, Vector::Zero(2)}, 100);
  EXPECT_FALSE(slow.mixed);
  EXPECT_EQ(slow.cap, 100u);
  EXPECT_FALSE(mixing_time(swap_chain(), 1000).mixed);
  EXPECT_THROW(mixing_time({Matrix::Identity(2, 2), Vector::Zero(2)}), NotUnichain);
}

TEST(MixingTime, AgreesWithPropagationOracle) {
  for (std::uint64_t t = 0; t < 50; ++t) {
    CounterRng rng(CounterRng::key_of(23, t));
    const auto c = random::unichain_chain(rng, random::integer(rng, 2, 6));
    const auto mix = mixing_time(c, 500);
    const Index oracle = brute_mixing(c, stationary_distribution(c), 500);
    if (oracle <= 500) {
      ASSERT_TRUE(mix.mixed);
      EXPECT_EQ(mix.steps, oracle);
    } else {
      EXPECT_FALSE(mix.mixed);
    }
  }
}

TEST(Diameter, SingleStateIsZero) {
  const TabularMdp one(1, 2, Matrix::Ones(2, 1), Matrix::Zero(1, 2));
  EXPECT_EQ(diameter(one), Extended::finite(0.0));
}

TEST(Diameter, DisconnectedIsInfinite) {
  const TabularMdp two(2, 1, Matrix::Identity(2, 2), Matrix::Zero(2, 1));
  EXPECT_TRUE(diameter(two).is_infinite());
}

TEST(Diameter, TwoStateGeometric) {
  // Best escape from 0 has prob 1/4, from 1 prob 1/2: diameter 4.
  Matrix k(4, 2);
  k << 0.9, 0.1, 0.75, 0.25, 0.5, 0.5, 0.6, 0.4;
  EXPECT_NEAR(diameter(TabularMdp::checked(2, 2, k, Matrix::Zero(2, 2))).value(), 4.0, 1e-9);
}

TEST(Discounted, ValueExamples) {
  const Vector v = discounted_value(swap_chain(), 0.5);
  EXPECT_NEAR(v(0), 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(v(1), 2.0 / 3.0, 1e-14);
  MarkovChain ones{swap_chain().transition, Vector::Ones(2)};
  EXPECT_TRUE(discounted_value(ones, 0.9).isApprox(Vector::Constant(2, 10.0), 1e-12));
  EXPECT_TRUE(discounted_value(swap_chain(), 0.0).isApprox(swap_chain().reward));
}

TEST(Discounted, OccupancyExamples) {
  CounterRng rng(9);
  const auto c = random::chain(rng, 5);
  for (double g : {0.0, 0.5, 0.99}) {
    const Vector d = discounted_occupancy(c, g, 2);
    EXPECT_NEAR(d.sum(), 1.0 / (1.0 - g), 1e-9);
    EXPECT_GE(d.minCoeff(), 0.0);
  }
  EXPECT_TRUE(discounted_occupancy(c, 0.0, 3).isApprox(Vector::Unit(5, 3)));
  const Vector absorbed = discounted_occupancy({Matrix::Identity(3, 3), Vector::Zero(3)}, 0.8, 1);
  EXPECT_TRUE(absorbed.isApprox(5.0 * Vector::Unit(3, 1)));
}

TEST(Discounted, AverageRewardReduction) {
  for (std::uint64_t t = 0; t < 100; ++t) {
    CounterRng rng(CounterRng::key_of(24, t));
    const auto c = random::unichain_chain(rng, random::integer(rng, 1, 7));
    const double rho = gain_bias(c).gain(0);
    for (double g : {0.9, 0.99}) {
      const Vector v = discounted_value(c, g);
      EXPECT_LE((1 - g) * v.minCoeff(), rho + 1e-9);
      EXPECT_LE((v.array() - rho / (1 - g)).abs().maxCoeff(), span(v) + 1e-9);
    }
  }
}

TEST(Cesaro, Examples) {
  MarkovChain constant{swap_chain().transition, Vector::Constant(2, 0.3)};
  EXPECT_NEAR(cesaro_gain(constant, 0, 17), 0.3, 1e-15);
  EXPECT_NEAR(cesaro_gain(swap_chain(), 0, 100000), 0.5, 1e-4);
  MarkovChain absorbing{Matrix::Identity(1, 1), Vector::Ones(1)};
  EXPECT_DOUBLE_EQ(cesaro_gain(absorbing, 0, 10), 1.0);
}

TEST(Enumerate, SingleStateTwoActions) {
  Matrix r(1, 2);
  r << 0.3, 0.7;
  const auto res = enumerate_optimal(TabularMdp(1, 2, Matrix::Ones(2, 1), r));
  EXPECT_DOUBLE_EQ(res.optimal_gain, 0.7);
  EXPECT_EQ(res.optimal_policy.action, std::vector<Index>{1});
}

TEST(Enumerate, Figure2OptimumIsStayLeave) {
  const auto f = build_figure2(30, 6);
  const auto res = enumerate_optimal(f.mdp);
  EXPECT_EQ(res.optimal_policy, (DeterministicPolicy{{kStay, kLeave}}));
  EXPECT_EQ(res.num_optimal, 1u);
  EXPECT_DOUBLE_EQ(res.optimal_gain, 1.0);
}

TEST(Enumerate, BudgetIsEnforced) {
  CounterRng rng(1);
  EnumerationOptions opt;
  opt.budget = 100;
  EXPECT_THROW(enumerate_optimal(random::mdp(rng, 5, 3), opt), BudgetExceeded);
}

TEST(Enumerate, UniformQuantitiesMatchTable) {
  CounterRng rng(2);
  const auto mdp = random::mdp(rng, 3, 2, 0.2);
  const auto res = enumerate_optimal(mdp);
  ASSERT_EQ(res.table.size(), 8u);
  double h = 0;
  for (const auto& rec : res.table)
    if (rec.unichain) h = std::max(h, rec.bias_span);
  EXPECT_DOUBLE_EQ(res.h_unif, h);
}
