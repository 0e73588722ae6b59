#include <gtest/gtest.h>

#include "avgrew/avgrew.hpp"

using namespace avgrew;

namespace {

TabularMdp identity_mdp(Index S, Index A) {
  Matrix k = Matrix::Zero(static_cast<Eigen::Index>(S * A), static_cast<Eigen::Index>(S));
  for (Index s = 0; s < S; ++s)
    for (Index a = 0; a < A; ++a) k(static_cast<Eigen::Index>(s * A + a), static_cast<Eigen::Index>(s)) = 1.0;
  return TabularMdp(S, A, k, Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A)));
}

bool has_kind(const ValidationReport& r, Violation::Kind k) {
  for (const auto& v : r.violations)
    if (v.kind == k) return true;
  return false;
}

}  // namespace

TEST(Validate, IdentityKernelZeroRewardIsValid) { EXPECT_TRUE(validate(identity_mdp(3, 2)).ok()); }

TEST(Validate, ShortRowIsReported) {
  Matrix k = identity_mdp(2, 1).kernel();
  k(1, 1) = 0.9;
  const auto rep = validate(TabularMdp(2, 1, k, Matrix::Zero(2, 1)));
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_EQ(rep.violations[0].kind, Violation::Kind::NonStochasticRow);
  EXPECT_EQ(rep.violations[0].state, 1u);
  EXPECT_DOUBLE_EQ(rep.violations[0].value, 0.9);
}

TEST(Validate, RewardAboveOneIsReported) {
  Matrix r = Matrix::Zero(2, 1);
  r(0, 0) = 1.5;
  EXPECT_TRUE(has_kind(validate(TabularMdp(2, 1, identity_mdp(2, 1).kernel(), r)), Violation::Kind::RewardOutOfRange));
}

TEST(Validate, NegativeEntryAndEveryViolationListed) {
  Matrix k(2, 2);
  k << 1.2, -0.2, 0.5, 0.4;
  const auto rep = validate(TabularMdp(2, 1, k, Matrix::Constant(2, 1, 0.5)));
  EXPECT_TRUE(has_kind(rep, Violation::Kind::NegativeEntry));
  EXPECT_TRUE(has_kind(rep, Violation::Kind::NonStochasticRow));
  EXPECT_THROW(TabularMdp::checked(2, 1, k, Matrix::Constant(2, 1, 0.5)), InvalidModel);
}

TEST(Validate, ToleranceIsOneEMinusTwelve) {
  Matrix k(1, 2);
  k << 0.5, 0.5 + 5e-13;
  EXPECT_TRUE(validate(TabularMdp(2, 1, Matrix(k.replicate(2, 1)), Matrix::Zero(2, 1))).ok());
  k(0, 1) = 0.5 + 5e-12;
  EXPECT_FALSE(validate(TabularMdp(2, 1, Matrix(k.replicate(2, 1)), Matrix::Zero(2, 1))).ok());
}

TEST(Validate, ShapeErrors) {
  EXPECT_THROW(TabularMdp(2, 2, Matrix::Zero(3, 2), Matrix::Zero(2, 2)), DimensionMismatch);
  EXPECT_THROW(TabularMdp(0, 1, Matrix::Zero(0, 0), Matrix::Zero(0, 1)), DimensionMismatch);
}

TEST(InduceChain, ActionZeroSelectsKernelSlice) {
  CounterRng rng(11);
  const auto mdp = random::mdp(rng, 4, 3);
  const auto chain = induce_chain(mdp, DeterministicPolicy{{0, 0, 0, 0}});
  for (Index s = 0; s < 4; ++s) {
    EXPECT_EQ(Vector(chain.transition.row(static_cast<Eigen::Index>(s))), Vector(mdp.row(s, 0)));
    EXPECT_EQ(chain.reward(static_cast<Eigen::Index>(s)), mdp.reward(s, 0));
  }
}

TEST(InduceChain, UniformOverIdenticalActionsEqualsEitherSlice) {
  Matrix k(4, 2);
  k << 0.3, 0.7, 0.3, 0.7, 1.0, 0.0, 1.0, 0.0;
  const TabularMdp mdp = TabularMdp::checked(2, 2, k, Matrix::Constant(2, 2, 0.4));
  const auto chain = induce_chain(mdp, StochasticPolicy{Matrix::Constant(2, 2, 0.5)});
  Matrix expect(2, 2);
  expect << 0.3, 0.7, 1.0, 0.0;
  EXPECT_TRUE(chain.transition.isApprox(expect, 1e-15));
}

TEST(InduceChain, Figure2StayLeave) {
  const double T = 7;
  const auto f = build_figure2(50, T);
  const auto chain = induce_chain(f.mdp, DeterministicPolicy{{kStay, kLeave}});
  Matrix expect(2, 2);
  expect << 1.0, 0.0, 1.0 / T, 1.0 - 1.0 / T;
  EXPECT_TRUE(chain.transition.isApprox(expect, 1e-15));
}

TEST(InduceChain, RejectsWrongShapes) {
  const auto mdp = identity_mdp(2, 2);
  EXPECT_THROW(induce_chain(mdp, DeterministicPolicy{{0}}), DimensionMismatch);
  EXPECT_THROW(induce_chain(mdp, StochasticPolicy{Matrix::Constant(2, 3, 1.0 / 3)}), DimensionMismatch);
}

TEST(InduceChain, PropertyValidChainAndLinearInPolicy) {
  for (std::uint64_t t = 0; t < 200; ++t) {
    CounterRng rng(CounterRng::key_of(5, t));
    const Index S = random::integer(rng, 1, 6), A = random::integer(rng, 1, 4);
    const auto mdp = random::mdp(rng, S, A, 0.3);
    StochasticPolicy p1{random::stochastic_matrix(rng, S, A, 0.3)};
    StochasticPolicy p2{random::stochastic_matrix(rng, S, A, 0.3)};
    const double lam = rng.uniform();
    const auto c1 = induce_chain(mdp, p1), c2 = induce_chain(mdp, p2);
    const auto mix = induce_chain(mdp, StochasticPolicy{lam * p1.dist + (1 - lam) * p2.dist});
    EXPECT_NO_THROW(check_chain(c1));
    EXPECT_LE((mix.transition - (lam * c1.transition + (1 - lam) * c2.transition)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((mix.reward - (lam * c1.reward + (1 - lam) * c2.reward)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LiftPolicy, OneHotRows) {
  const auto a = lift_policy(DeterministicPolicy{{0, 1}}, 2);
  EXPECT_EQ(a.dist, Matrix::Identity(2, 2));
  const auto b = lift_policy(DeterministicPolicy{{1, 1}}, 2);
  Matrix expect(2, 2);
  expect << 0, 1, 0, 1;
  EXPECT_EQ(b.dist, expect);
  EXPECT_THROW(lift_policy(DeterministicPolicy{{2, 0}}, 2), ParameterOutOfRange);
}

TEST(Json, MdpAndPolicyRoundTrip) {
  CounterRng rng(3);
  const auto mdp = random::mdp(rng, 3, 2, 0.2);
  const auto back = io::mdp_from_json(io::Json::parse(io::mdp_to_json(mdp).dump()));
  EXPECT_EQ(back.kernel(), mdp.kernel());
  EXPECT_EQ(back.reward(), mdp.reward());
  const auto pi = io::policy_from_json(io::policy_to_json(DeterministicPolicy{{1, 0, 1}}), 3, 2);
  EXPECT_EQ(io::as_deterministic(pi)->action, (std::vector<Index>{1, 0, 1}));
  EXPECT_THROW(io::mdp_from_json(io::Json::parse(R"({"S":1,"A":1,"kernel":[[[0.5]]],"reward":[[0]]})")),
               InvalidModel);
  EXPECT_THROW(io::mdp_from_json(io::Json::parse(R"({"S":1,"kernel":[]})")), io::FormatError);
}
