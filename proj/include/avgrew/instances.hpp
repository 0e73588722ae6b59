#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "avgrew/core.hpp"
#include "avgrew/mdp.hpp"
#include "avgrew/solver.hpp"

namespace avgrew {

/// Generated MDP together with its sample sizes and target policy.
struct InstanceBundle {
  TabularMdp mdp;
  SampleSizeFn sizes;
  DeterministicPolicy target;
};

inline constexpr Index kDefaultActionCap = 4096;

// Two-state family with a rare exit from the rewarding state and a slow return.
struct TransientInstance {
  double T = 8;
  double m = 64;
  double delta = 1e-4;
  Index i = 0;  // stay action at state 0
  Index b = 0;  // fast-return action at state 1
  Index action_cap = kDefaultActionCap;
  // Also enforce the lower-bound regime bounds (T >= 4, delta <= e^-9).
  bool strict = false;

  double p() const { return 1.0 / (3.0 * (m + T)); }
  Index num_actions() const { return static_cast<Index>(std::ceil(16.0 / (p() * T))); }
  double q() const { return 1.0 / (static_cast<double>(num_actions()) * T); }
  std::uint64_t t_delta() const { return static_cast<std::uint64_t>(std::ceil(T / 6.0 * std::log(1.0 / delta))); }

  void check() const {
    if (!(T >= 1.0 && std::isfinite(T))) throw ParameterOutOfRange("T must be >= 1");
    if (!(m >= 1.0 && std::isfinite(m))) throw ParameterOutOfRange("m must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterOutOfRange("delta must be in (0, 1)");
    if (strict) {
      if (T < 4.0) throw ParameterOutOfRange("T must be >= 4");
      if (delta > std::exp(-9.0)) throw ParameterOutOfRange("delta must be <= e^-9");
    }
    const double a = std::ceil(16.0 / (p() * T));
    if (a > static_cast<double>(action_cap))
      throw ParameterOutOfRange("A = " + std::to_string(a) + " exceeds the action cap " + std::to_string(action_cap));
    if (i > 1) throw ParameterOutOfRange("theta.i must be 0 or 1");
    if (b >= num_actions()) throw ParameterOutOfRange("theta.b must be < A");
  }
};

inline InstanceBundle build_transient(const TransientInstance& inst) {
  inst.check();
  const Index A = inst.num_actions();
  const double p = inst.p(), q = inst.q(), T = inst.T;
  const auto eA = static_cast<Eigen::Index>(A);
  Matrix kernel = Matrix::Zero(2 * eA, 2);
  Matrix reward(2, eA);
  reward.row(0).setOnes();
  reward.row(1).setZero();
  for (Index a = 0; a < A; ++a) {
    const auto r0 = static_cast<Eigen::Index>(a), r1 = static_cast<Eigen::Index>(A + a);
    if (a == inst.i) {
      kernel(r0, 0) = 1.0;
    } else if (a == 1 - inst.i) {
      kernel(r0, 0) = 1.0 - p;
      kernel(r0, 1) = p;
    } else {
      kernel(r0, 1) = 1.0;
    }
    const double back = a == inst.b ? 1.0 / T : q;
    kernel(r1, 0) = back;
    kernel(r1, 1) = 1.0 - back;
  }
  SampleSizeFn sizes{CountTable::Zero(2, eA)};
  const auto td = inst.t_delta();
  const auto m = static_cast<std::uint64_t>(std::ceil(inst.m));
  sizes.n(0, 0) = sizes.n(0, 1) = m + td;
  sizes.n.row(1).setConstant(td);
  return {TabularMdp::checked(2, A, std::move(kernel), std::move(reward)), std::move(sizes),
          DeterministicPolicy{{inst.i, inst.b}}};
}

class UnsupportedPolicy : public Error {
 public:
  using Error::Error;
};

// Many-state family: trap state 0 plus S - 1 rewarding states whose good action is theta_s.
struct RecurrentInstance {
  double T = 8;
  Index S = 6;
  double m = 2048;
  double k = 0;
  std::vector<int> theta;  // length S - 1, entries 0/1; empty means all zeros
  // Also enforce the lower-bound regime bounds (S >= 33, m >= max(TS, kS)).
  bool strict = false;

  Index s_prime() const { return S - 1; }
  double D() const { return T - 2.0; }
  double eps() const { return std::sqrt(T * static_cast<double>(S) / m) / 256.0; }
  double p() const { return (1.0 - eps()) / D(); }
  double q() const { return 1.0 / D(); }
  int theta_at(Index s) const { return theta.empty() ? 0 : theta.at(s - 1); }

  void check() const {
    if (!(T >= 4.0 && std::isfinite(T))) throw ParameterOutOfRange("T must be >= 4");
    if (S < 2) throw ParameterOutOfRange("S must be >= 2");
    if (!(m >= 1.0 && std::isfinite(m))) throw ParameterOutOfRange("m must be >= 1");
    if (!(k >= 0.0)) throw ParameterOutOfRange("k must be >= 0");
    if (!theta.empty() && theta.size() != S - 1) throw DimensionMismatch("theta must have length S - 1");
    for (int t : theta)
      if (t != 0 && t != 1) throw ParameterOutOfRange("theta entries must be 0 or 1");
    if (!(eps() < 1.0)) throw ParameterOutOfRange("epsilon must be < 1");
    if (strict) {
      if (S < 33) throw ParameterOutOfRange("S must be >= 33");
      const double s = static_cast<double>(S);
      if (m < std::max(T * s, k * s)) throw ParameterOutOfRange("m must be >= max(TS, kS)");
    }
  }
};

inline InstanceBundle build_recurrent(const RecurrentInstance& inst) {
  inst.check();
  const Index S = inst.S, A = S, Sp = inst.s_prime();
  const double p = inst.p(), q = inst.q(), sp = static_cast<double>(Sp);
  const auto eS = static_cast<Eigen::Index>(S);
  Matrix kernel = Matrix::Zero(eS * eS, eS);
  Matrix reward = Matrix::Zero(eS, eS);
  auto row = [&](Index s, Index a) { return kernel.row(static_cast<Eigen::Index>(s * A + a)); };

  for (Index a = 0; a < A; ++a) {
    const double leave = a == 0 ? q : q / 2.0;
    auto r = row(0, a);
    r(0) = 1.0 - leave;
    for (Index t = 1; t < S; ++t) r(static_cast<Eigen::Index>(t)) = leave / sp;
  }
  for (Index s = 1; s < S; ++s) {
    const auto es = static_cast<Eigen::Index>(s);
    reward(es, 0) = reward(es, 1) = 1.0;
    for (Index a = 0; a < A; ++a) {
      auto r = row(s, a);
      if (a <= 1) {
        const double exit = static_cast<int>(a) == inst.theta_at(s) ? p : q;
        r(es) = 1.0 - exit;
        r(0) = exit;
        continue;
      }
      for (Index t = 1; t < S; ++t) r(static_cast<Eigen::Index>(t)) = 1.0 / (2.0 * sp);
      const Index half_to = (s >= 2 && a == s) ? 1 : a;
      r(static_cast<Eigen::Index>(half_to)) += 0.5;
    }
  }

  SampleSizeFn sizes{CountTable::Zero(eS, eS)};
  sizes.n(0, 0) = static_cast<std::uint64_t>(std::ceil(inst.m));
  const auto per = static_cast<std::uint64_t>(std::ceil(2.0 * inst.m / sp));
  for (Eigen::Index s = 1; s < eS; ++s) sizes.n(s, 0) = sizes.n(s, 1) = per;

  DeterministicPolicy target;
  target.action.assign(S, 0);
  for (Index s = 1; s < S; ++s) target.action[s] = static_cast<Index>(inst.theta_at(s));
  return {TabularMdp::checked(S, A, std::move(kernel), std::move(reward)), std::move(sizes), std::move(target)};
}

/// Gain of a policy that plays action 0 at the trap and mixes only actions {0, 1}
/// elsewhere, from the balance equations mu(s) kappa_s = mu(0) q / S'.
inline double recurrent_gain_closed_form(const RecurrentInstance& inst, const StochasticPolicy& pi) {
  inst.check();
  const Index S = inst.S;
  check_policy(pi, S, S);
  for (Index a = 1; a < S; ++a)
    if (pi.dist(0, static_cast<Eigen::Index>(a)) != 0.0)
      throw UnsupportedPolicy("closed form requires action 0 at state 0");
  for (Index s = 1; s < S; ++s)
    for (Index a = 2; a < S; ++a)
      if (pi.dist(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) != 0.0)
        throw UnsupportedPolicy("closed form requires actions {0, 1} at states s >= 1");
  const double p = inst.p(), q = inst.q(), sp = static_cast<double>(inst.s_prime());
  double inv = 0.0;
  for (Index s = 1; s < S; ++s) {
    const double L = pi.dist(static_cast<Eigen::Index>(s), 1 - inst.theta_at(s));
    inv += 1.0 / (L * q + (1.0 - L) * p);
  }
  const double x = q / sp * inv;
  return x / (1.0 + x);
}

/// Upper bound (1 + eps^2) / (2 - eps (1 - L / S')) on the gain given the total wrong-action mass L.
inline double gain_upper_bound_from_L(const RecurrentInstance& inst, double L_total) {
  const double sp = static_cast<double>(inst.s_prime());
  if (!(L_total >= 0.0 && L_total <= sp)) throw ParameterOutOfRange("L_total must be in [0, S']");
  const double e = inst.eps();
  return (1.0 + e * e) / (2.0 - e * (1.0 - L_total / sp));
}

inline constexpr Index kStay = 0;
inline constexpr Index kLeave = 1;

/// Two-state stay/leave MDP. State 0 pays 1 and leave exits with probability 1/m;
/// state 1 pays 0 and leave exits with probability 1/T.
inline InstanceBundle build_figure2(double m, double T) {
  if (!(m >= 1.0) || !(T >= 1.0)) throw ParameterOutOfRange("m and T must be >= 1");
  Matrix kernel = Matrix::Zero(4, 2);
  kernel(0, 0) = 1.0;
  kernel(1, 0) = 1.0 - 1.0 / m;
  kernel(1, 1) = 1.0 / m;
  kernel(2, 1) = 1.0;
  kernel(3, 0) = 1.0 / T;
  kernel(3, 1) = 1.0 - 1.0 / T;
  Matrix reward(2, 2);
  reward << 1.0, 1.0, 0.0, 0.0;
  // m samples of both state-0 actions and ceil(T) of both state-1 actions.
  SampleSizeFn sizes{CountTable::Zero(2, 2)};
  sizes.n.row(0).setConstant(static_cast<std::uint64_t>(std::ceil(m)));
  sizes.n.row(1).setConstant(static_cast<std::uint64_t>(std::ceil(T)));
  return {TabularMdp::checked(2, 2, std::move(kernel), std::move(reward)), std::move(sizes),
          DeterministicPolicy{{kStay, kLeave}}};
}

/// Moves eps of self-loop mass to state 0 in every state-1 action whose row is
/// absorbing, making every deterministic policy unichain.
inline TabularMdp unichain_patch(const TabularMdp& mdp, double eps) {
  if (!(eps >= 0.0 && eps <= 1e-2)) throw ParameterOutOfRange("eps must be in [0, 0.01]");
  if (mdp.num_states() != 2) throw DimensionMismatch("unichain_patch expects a two-state MDP");
  Matrix kernel = mdp.kernel();
  const Index A = mdp.num_actions();
  for (Index a = 0; a < A; ++a) {
    const auto r = static_cast<Eigen::Index>(A + a);
    if (kernel(r, 1) == 1.0) {
      kernel(r, 1) = 1.0 - eps;
      kernel(r, 0) = eps;
    }
  }
  return TabularMdp::checked(2, A, std::move(kernel), mdp.reward());
}

}  // namespace avgrew
