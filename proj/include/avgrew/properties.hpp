#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "avgrew/core.hpp"
#include "avgrew/instances.hpp"
#include "avgrew/mdp.hpp"
#include "avgrew/oracles.hpp"
#include "avgrew/pessimism.hpp"
#include "avgrew/random.hpp"
#include "avgrew/rng.hpp"
#include "avgrew/solver.hpp"

// Randomized invariant checks. Each check draws one instance from a counter
// stream and returns a counterexample description on failure.
namespace avgrew::props {

enum class Mutation { None, PenaltySignFlip };

/// Negated penalty, used to confirm the checks can fail.
struct FlippedPenalty {
  double operator()(double beta, double var, double sp, std::uint64_t n_tot) const {
    return -StandardPenalty{}(beta, var, sp, n_tot);
  }
};

using Outcome = std::optional<std::string>;
using Check = std::function<Outcome(CounterRng&, Mutation)>;

struct Property {
  std::string name;
  std::string group;  // "operator", "solver", "oracle", "instance"
  Check check;
};

namespace detail {

// Relative slack for comparisons that are exact in real arithmetic.
inline double slack(double scale) { return 1e-12 * (1.0 + std::abs(scale)); }

inline std::string fmt(const Matrix& m) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) os << "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
  }
  os << "]";
  return os.str();
}

/// First entry where a < b beyond slack, if any.
inline Outcome dominates(const Matrix& a, const Matrix& b, const char* what) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) < b(i, j) - slack(b(i, j))) {
        std::ostringstream os;
        os.precision(17);
        os << what << " violated at (" << i << "," << j << "): " << a(i, j) << " < " << b(i, j);
        return os.str();
      }
  return std::nullopt;
}

/// Small operator instance: empirical kernel, rewards, and a config whose
/// beta entries straddle 1 so both clipping regimes are exercised.
struct OperatorCase {
  Matrix reward;
  Matrix p_hat;
  PessimismConfig cfg;
  Index S = 0, A = 0;
};

inline OperatorCase operator_case(CounterRng& rng) {
  OperatorCase c;
  c.S = random::integer(rng, 2, 6);
  c.A = random::integer(rng, 1, 3);
  c.reward = random::matrix(rng, c.S, c.A, 0.0, 1.0);
  c.p_hat = random::stochastic_matrix(rng, c.S * c.A, c.S, random::uniform(rng, 0.0, 0.6));
  c.cfg.gamma = random::uniform(rng, 0.5, 0.99);
  c.cfg.delta = 0.1;
  c.cfg.n_tot = random::integer(rng, 1, 1000);
  c.cfg.alpha = 0.0;
  c.cfg.beta = random::matrix(rng, c.S, c.A, 0.0, 1.3);
  return c;
}

inline QFunction random_q(CounterRng& rng, const OperatorCase& c) {
  return random::matrix(rng, c.S, c.A, -5.0, 5.0);
}

template <typename Penalty>
QFunction apply(const OperatorCase& c, const QFunction& q, const Penalty& pen) {
  return pessimistic_bellman(c.reward, c.p_hat, q, c.cfg, pen);
}

/// Dispatches on the mutation so every check runs against the chosen penalty.
template <typename F>
auto with_penalty(Mutation m, F&& f) {
  if (m == Mutation::PenaltySignFlip) return f(FlippedPenalty{});
  return f(StandardPenalty{});
}

inline StochasticPolicy random_policy(CounterRng& rng, Index S, Index A) {
  StochasticPolicy pi{Matrix(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A))};
  for (Eigen::Index s = 0; s < pi.dist.rows(); ++s) pi.dist.row(s) = random::simplex(rng, A, 0.5).transpose();
  return pi;
}

// Operator checks.

inline Outcome monotonicity(CounterRng& rng, Mutation m) {
  const auto c = operator_case(rng);
  const QFunction lo = random_q(rng, c);
  QFunction hi = lo;
  for (Eigen::Index i = 0; i < hi.rows(); ++i)
    for (Eigen::Index j = 0; j < hi.cols(); ++j)
      if (random::coin(rng, 0.6)) hi(i, j) += random::uniform(rng, 0.0, 6.0);
  return with_penalty(m, [&](auto pen) -> Outcome {
    const auto r = dominates(apply(c, hi, pen), apply(c, lo, pen), "T(Q) >= T(Q')");
    if (r) return *r + " with Q=" + fmt(hi) + " Q'=" + fmt(lo);
    return std::nullopt;
  });
}

inline Outcome policy_monotonicity(CounterRng& rng, Mutation m) {
  const auto c = operator_case(rng);
  const auto pi = random_policy(rng, c.S, c.A);
  const QFunction lo = random_q(rng, c);
  const QFunction hi = lo + random::matrix(rng, c.S, c.A, 0.0, 3.0);
  return with_penalty(m, [&](auto pen) -> Outcome {
    return dominates(pessimistic_bellman_policy(c.reward, c.p_hat, hi, c.cfg, pi, pen),
                     pessimistic_bellman_policy(c.reward, c.p_hat, lo, c.cfg, pi, pen), "T^pi(Q) >= T^pi(Q')");
  });
}

inline Outcome constant_shift(CounterRng& rng, Mutation m) {
  const auto c = operator_case(rng);
  const QFunction q = random_q(rng, c);
  const double shift = random::uniform(rng, -10.0, 10.0);
  return with_penalty(m, [&](auto pen) -> Outcome {
    const QFunction lhs = apply(c, (q.array() + shift).matrix(), pen);
    const QFunction rhs = (apply(c, q, pen).array() + c.cfg.gamma * shift).matrix();
    const double err = (lhs - rhs).cwiseAbs().maxCoeff();
    if (err > 1e-10) return "constant shift error " + std::to_string(err) + " for c=" + std::to_string(shift);
    return std::nullopt;
  });
}

inline Outcome contraction(CounterRng& rng, Mutation m) {
  const auto c = operator_case(rng);
  const QFunction q1 = random_q(rng, c), q2 = random_q(rng, c);
  return with_penalty(m, [&](auto pen) -> Outcome {
    const double out = (apply(c, q1, pen) - apply(c, q2, pen)).cwiseAbs().maxCoeff();
    const double in = (q1 - q2).cwiseAbs().maxCoeff();
    if (out > c.cfg.gamma * in + slack(in))
      return "contraction: " + std::to_string(out) + " > gamma * " + std::to_string(in);
    return std::nullopt;
  });
}

inline Outcome clipping_sandwich(CounterRng& rng, Mutation) {
  const Index S = random::integer(rng, 1, 8);
  const Vector mu = random::simplex(rng, S, 0.4);
  const Vector v = random::vector(rng, S, -5.0, 5.0);
  const double beta = random::uniform(rng, 0.0, 1.0);
  const double clipped = mu.dot(quantile_clip(mu, v, beta));
  const double plain = mu.dot(v);
  const double tol = slack(v.cwiseAbs().maxCoeff());
  if (clipped > plain + tol) return "P T(V) > P V";
  if (plain > clipped + beta * span(v) + tol) return "P V > P T(V) + beta span(V)";
  return std::nullopt;
}

inline Outcome variance_contraction(CounterRng& rng, Mutation) {
  const Index S = random::integer(rng, 1, 8);
  const Vector mu = random::simplex(rng, S, 0.4);
  const Vector v = random::vector(rng, S, -5.0, 5.0);
  const double beta = random::uniform(rng, 0.0, 1.5);
  const double a = next_state_variance(mu, quantile_clip(mu, v, beta));
  const double b = next_state_variance(mu, v);
  if (a > b + slack(b)) return "Var[T(V)] = " + std::to_string(a) + " > Var[V] = " + std::to_string(b);
  return std::nullopt;
}

inline Outcome quantile_lipschitz(CounterRng& rng, Mutation) {
  const Index S = random::integer(rng, 1, 8);
  const Vector mu = random::simplex(rng, S, 0.4);
  const Vector v = random::vector(rng, S, -5.0, 5.0);
  Vector w = v + random::vector(rng, S, -1.0, 1.0);
  // Occasionally create ties, the delicate case for level sets.
  if (S > 1 && random::coin(rng, 0.3)) w(1) = w(0);
  const double beta = random::uniform(rng, 0.0, 1.0);
  const double d = std::abs(upper_quantile(mu, v, beta) - upper_quantile(mu, w, beta));
  const double lim = (v - w).cwiseAbs().maxCoeff();
  if (d > lim + slack(lim)) return "quantile moved " + std::to_string(d) + " > " + std::to_string(lim);
  return std::nullopt;
}

inline Outcome clip_shift_equivariance(CounterRng& rng, Mutation) {
  const Index S = random::integer(rng, 1, 8);
  const Vector mu = random::simplex(rng, S, 0.4);
  const Vector v = random::vector(rng, S, -5.0, 5.0);
  const double beta = random::uniform(rng, 0.0, 1.5), shift = random::uniform(rng, -10.0, 10.0);
  const Vector lhs = quantile_clip(mu, (v.array() + shift).matrix(), beta);
  const Vector rhs = (quantile_clip(mu, v, beta).array() + shift).matrix();
  if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-10) return "T(V + c) != T(V) + c";
  return std::nullopt;
}

inline constexpr double kFixedPointTol = 1e-9;

inline Outcome fixed_point_bounds(CounterRng& rng, Mutation m) {
  auto c = operator_case(rng);
  c.cfg.gamma = random::uniform(rng, 0.5, 0.95);
  return with_penalty(m, [&](auto pen) -> Outcome {
    const auto fp = fixed_point([&](const QFunction& q) { return apply(c, q, pen); }, c.cfg.gamma, kFixedPointTol,
                                QFunction::Zero(c.S, c.A));
    const double hi = 1.0 / (1.0 - c.cfg.gamma);
    if (fp.q.minCoeff() < -kFixedPointTol || fp.q.maxCoeff() > hi + kFixedPointTol)
      return "fixed point outside [0, 1/(1-gamma)]: " + fmt(fp.q);
    return std::nullopt;
  });
}

inline Outcome fixed_point_dominance(CounterRng& rng, Mutation m) {
  auto c = operator_case(rng);
  c.cfg.gamma = random::uniform(rng, 0.5, 0.95);
  const auto pi = random_policy(rng, c.S, c.A);
  return with_penalty(m, [&](auto pen) -> Outcome {
    const auto zero = QFunction::Zero(c.S, c.A);
    const auto star = fixed_point([&](const QFunction& q) { return apply(c, q, pen); }, c.cfg.gamma,
                                  kFixedPointTol, zero);
    const auto pol = fixed_point(
        [&](const QFunction& q) { return pessimistic_bellman_policy(c.reward, c.p_hat, q, c.cfg, pi, pen); },
        c.cfg.gamma, kFixedPointTol, zero);
    return dominates((star.q.array() + 2 * kFixedPointTol).matrix(), pol.q, "Q*_pe >= Q^pi_pe");
  });
}

// Solver checks.

inline Outcome solver_sandwich(CounterRng& rng, Mutation) {
  const Index S = random::integer(rng, 2, 6), A = random::integer(rng, 1, 3);
  const TabularMdp mdp = random::mdp(rng, S, A, 0.3);
  SampleSizeFn sizes{CountTable(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A))};
  for (Eigen::Index s = 0; s < sizes.n.rows(); ++s)
    for (Eigen::Index a = 0; a < sizes.n.cols(); ++a) sizes.n(s, a) = random::integer(rng, 0, 60);
  if (sizes.total() == 0) sizes.n(0, 0) = 1;
  const auto data = sample_dataset(mdp, sizes, rng.next_u64());
  SolverOptions opt;
  opt.gamma = 0.95;
  const auto out = solve(data, mdp.reward(), 0.1, opt);
  const Matrix p_hat = empirical_kernel(data);
  const auto star = fixed_point([&](const QFunction& q) { return pessimistic_bellman(mdp.reward(), p_hat, q, out.config); },
                                0.95, kFixedPointTol, QFunction::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A)));
  const double gap = 1.0 / (2.0 * static_cast<double>(sizes.total()));
  if (auto r = dominates((star.q.array() + kFixedPointTol).matrix(), out.q_hat, "Q* >= Q_hat")) return r;
  if (auto r = dominates((out.q_hat.array() + gap + kFixedPointTol).matrix(), star.q, "Q_hat + 1/(2 n_tot) >= Q*"))
    return r;
  const QFunction next = pessimistic_bellman(mdp.reward(), p_hat, out.q_hat, out.config);
  return dominates(next, out.q_hat, "T(Q_hat) >= Q_hat");
}

inline Outcome greedy_shift_invariance(CounterRng& rng, Mutation) {
  const Index S = random::integer(rng, 1, 6), A = random::integer(rng, 1, 4);
  Matrix q = random::matrix(rng, S, A, -1.0, 1.0);
  if (A > 1 && random::coin(rng, 0.3)) q(0, 1) = q(0, 0);
  const double shift = std::ldexp(std::floor(random::uniform(rng, -64.0, 64.0)), -3);  // exact in binary
  if (!(greedy(q) == greedy((q.array() + shift).matrix()))) return "greedy changed under a constant shift";
  return std::nullopt;
}

inline Outcome sampling_determinism(CounterRng& rng, Mutation) {
  const Index S = random::integer(rng, 2, 5), A = random::integer(rng, 1, 3);
  const TabularMdp mdp = random::mdp(rng, S, A, 0.3);
  SampleSizeFn sizes{CountTable::Constant(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A), 25)};
  const auto seed = rng.next_u64();
  const auto a = sample_dataset(mdp, sizes, seed), b = sample_dataset(mdp, sizes, seed);
  if (a.counts != b.counts) return "sample_dataset not reproducible";
  for (Eigen::Index r = 0; r < a.counts.rows(); ++r)
    if (a.counts.row(r).sum() != 25) return "histogram row does not sum to n(s,a)";
  return std::nullopt;
}

// Oracle checks.

inline Outcome span_vs_hitting_radius(CounterRng& rng, Mutation) {
  const Index S = random::integer(rng, 2, 8);
  const auto chain = random::unichain_chain(rng, S);
  const auto ev = gain_bias(chain);
  const auto hr = policy_hitting_radius(chain);
  if (!ev.bias || hr.t_hit.is_infinite()) return "unichain chain without bias or finite T_hit";
  const double lhs = span(*ev.bias), rhs = 4.0 * hr.t_hit.value();
  if (lhs > rhs + slack(rhs)) return "span(h) = " + std::to_string(lhs) + " > 4 T_hit = " + std::to_string(rhs);
  return std::nullopt;
}

inline Outcome occupancy_vs_hitting_radius(CounterRng& rng, Mutation) {
  const Index S = random::integer(rng, 2, 8);
  const auto chain = random::unichain_chain(rng, S);
  const double t_hit = policy_hitting_radius(chain).t_hit.value();
  const Vector mu = stationary_distribution(chain);
  for (double gamma : {0.9, 0.99}) {
    const Index s0 = random::integer(rng, 0, S - 1), s1 = random::integer(rng, 0, S - 1);
    const Vector d0 = discounted_occupancy(chain, gamma, s0), d1 = discounted_occupancy(chain, gamma, s1);
    const double lim = 4.0 * t_hit + slack(4.0 * t_hit / (1.0 - gamma));
    if ((d0 - d1).lpNorm<1>() > lim) return "||d_s0 - d_s1||_1 > 4 T_hit";
    if ((d0 - mu / (1.0 - gamma)).lpNorm<1>() > lim) return "||d_s0 - mu/(1-gamma)||_1 > 4 T_hit";
  }
  return std::nullopt;
}

inline Outcome hitting_radius_iff_unichain(CounterRng& rng, Mutation) {
  const Index S = random::integer(rng, 2, 8);
  const auto chain = random::coin(rng, 0.5) ? random::chain(rng, S) : random::multichain_chain(rng, S);
  const bool uni = classify(chain).unichain();
  const bool finite = policy_hitting_radius(chain).t_hit.is_finite();
  if (uni != finite) return std::string("unichain=") + (uni ? "true" : "false") + " but T_hit finite=" + (finite ? "true" : "false");
  return std::nullopt;
}

inline Outcome stationary_balance(CounterRng& rng, Mutation) {
  const auto chain = random::unichain_chain(rng, random::integer(rng, 1, 8));
  const Vector mu = stationary_distribution(chain);
  if ((mu.minCoeff() < 0.0) || std::abs(mu.sum() - 1.0) > 1e-12) return "stationary not a distribution";
  if ((chain.transition.transpose() * mu - mu).cwiseAbs().maxCoeff() > 1e-10) return "mu P != mu";
  return std::nullopt;
}

inline Outcome bias_equation(CounterRng& rng, Mutation) {
  const auto chain = random::unichain_chain(rng, random::integer(rng, 1, 8));
  const auto ev = gain_bias(chain);
  const Vector& h = *ev.bias;
  const Vector resid = ev.gain + h - chain.reward - chain.transition * h;
  if (resid.cwiseAbs().maxCoeff() > 1e-9) return "Poisson equation residual " + std::to_string(resid.cwiseAbs().maxCoeff());
  if (std::abs(ev.stationary->dot(h)) > 1e-9) return "bias not normalized";
  return std::nullopt;
}

inline Outcome gain_vs_cesaro(CounterRng& rng, Mutation) {
  // The partial-sum error is ((I - P^H) h)(s0) / H, so span(h) / H bounds it.
  const Index S = random::integer(rng, 2, 8);
  const auto chain = random::unichain_chain(rng, S);
  const Index horizon = 2000;
  const Index s0 = random::integer(rng, 0, S - 1);
  const auto ev = gain_bias(chain);
  const double exact = ev.gain(static_cast<Eigen::Index>(s0));
  const double approx = cesaro_gain(chain, s0, horizon);
  if (std::abs(exact - approx) > span(*ev.bias) / static_cast<double>(horizon) + 1e-9)
    return "gain " + std::to_string(exact) + " vs Cesaro " + std::to_string(approx);
  return std::nullopt;
}

// Instance checks.

inline Outcome recurrent_closed_form(CounterRng& rng, Mutation) {
  RecurrentInstance inst;
  inst.T = static_cast<double>(random::integer(rng, 4, 12));
  inst.S = random::integer(rng, 2, 8);
  inst.m = inst.T * static_cast<double>(inst.S) * random::uniform(rng, 1.0, 64.0);
  for (Index s = 1; s < inst.S; ++s) inst.theta.push_back(static_cast<int>(random::integer(rng, 0, 1)));
  const auto bundle = build_recurrent(inst);
  StochasticPolicy pi{Matrix::Zero(static_cast<Eigen::Index>(inst.S), static_cast<Eigen::Index>(inst.S))};
  pi.dist(0, 0) = 1.0;
  double L = 0.0;
  for (Index s = 1; s < inst.S; ++s) {
    const double l = random::coin(rng, 0.3) ? static_cast<double>(random::integer(rng, 0, 1)) : rng.uniform();
    const auto es = static_cast<Eigen::Index>(s);
    pi.dist(es, 1 - inst.theta_at(s)) = l;
    pi.dist(es, inst.theta_at(s)) = 1.0 - l;
    L += l;
  }
  const double closed = recurrent_gain_closed_form(inst, pi);
  const double exact = gain_bias(induce_chain(bundle.mdp, pi)).gain(0);
  if (std::abs(closed - exact) > 1e-10) return "closed form " + std::to_string(closed) + " vs exact " + std::to_string(exact);
  if (exact > gain_upper_bound_from_L(inst, L) + 1e-12) return "gain exceeds the L-based upper bound";
  return std::nullopt;
}

inline Outcome generated_models_valid(CounterRng& rng, Mutation) {
  TransientInstance t;
  t.T = static_cast<double>(random::integer(rng, 4, 16));
  t.m = static_cast<double>(random::integer(rng, 1, 64));
  t.delta = std::exp(-random::uniform(rng, 9.0, 12.0));
  t.i = random::integer(rng, 0, 1);
  t.b = random::integer(rng, 0, t.num_actions() - 1);
  const auto tb = build_transient(t);
  if (!validate(tb.mdp).ok()) return "transient instance invalid";
  const auto ev = evaluate_policy(tb.mdp, tb.target);
  if (std::abs(ev.gain.minCoeff() - 1.0) > 1e-9) return "transient target gain != 1";
  const auto f = build_figure2(static_cast<double>(random::integer(rng, 1, 100)),
                               static_cast<double>(random::integer(rng, 1, 100)));
  if (!validate(f.mdp).ok()) return "figure-2 instance invalid";
  const auto patched = unichain_patch(f.mdp, random::uniform(rng, 1e-6, 1e-2));
  for (Index a0 = 0; a0 < 2; ++a0)
    for (Index a1 = 0; a1 < 2; ++a1)
      if (!classify(induce_chain(patched, DeterministicPolicy{{a0, a1}})).unichain())
        return "patched figure-2 policy not unichain";
  return std::nullopt;
}

}  // namespace detail

inline const std::vector<Property>& registry() {
  static const std::vector<Property> all = {
      {"monotonicity", "operator", detail::monotonicity},
      {"policy_monotonicity", "operator", detail::policy_monotonicity},
      {"constant_shift", "operator", detail::constant_shift},
      {"contraction", "operator", detail::contraction},
      {"clipping_sandwich", "operator", detail::clipping_sandwich},
      {"variance_contraction", "operator", detail::variance_contraction},
      {"quantile_lipschitz", "operator", detail::quantile_lipschitz},
      {"clip_shift_equivariance", "operator", detail::clip_shift_equivariance},
      {"fixed_point_bounds", "operator", detail::fixed_point_bounds},
      {"fixed_point_dominance", "operator", detail::fixed_point_dominance},
      {"solver_sandwich", "solver", detail::solver_sandwich},
      {"greedy_shift_invariance", "solver", detail::greedy_shift_invariance},
      {"sampling_determinism", "solver", detail::sampling_determinism},
      {"span_vs_hitting_radius", "oracle", detail::span_vs_hitting_radius},
      {"occupancy_vs_hitting_radius", "oracle", detail::occupancy_vs_hitting_radius},
      {"hitting_radius_iff_unichain", "oracle", detail::hitting_radius_iff_unichain},
      {"stationary_balance", "oracle", detail::stationary_balance},
      {"bias_equation", "oracle", detail::bias_equation},
      {"gain_vs_cesaro", "oracle", detail::gain_vs_cesaro},
      {"recurrent_closed_form", "instance", detail::recurrent_closed_form},
      {"generated_models_valid", "instance", detail::generated_models_valid},
  };
  return all;
}

inline const Property& find(const std::string& name) {
  for (const auto& p : registry())
    if (p.name == name) return p;
  throw ParameterOutOfRange("unknown property " + name);
}

/// Seed of one trial; replaying it reproduces the exact instance.
inline std::uint64_t trial_seed(std::uint64_t seed, const std::string& name, Index trial) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a of the name
  for (unsigned char ch : name) h = (h ^ ch) * 1099511628211ULL;
  return CounterRng::key_of(seed, h, trial);
}

/// Runs one trial; thrown library errors count as failures.
inline Outcome run_trial(const Property& p, std::uint64_t tseed, Mutation m) {
  CounterRng rng(tseed);
  try {
    return p.check(rng, m);
  } catch (const std::exception& e) {
    return std::string("exception: ") + e.what();
  }
}

struct PropertyResult {
  std::string name;
  Index trials = 0;
  Index failures = 0;
  std::optional<std::string> counterexample;
  std::optional<std::uint64_t> replay_seed;
};

struct PropsReport {
  std::uint64_t seed = 0;
  Mutation mutation = Mutation::None;
  std::vector<PropertyResult> results;

  bool ok() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.failures == 0; });
  }
};

struct PropsOptions {
  Mutation mutation = Mutation::None;
  std::vector<std::string> only;  // property names or group names; empty runs everything
};

inline bool selected(const Property& p, const std::vector<std::string>& only) {
  if (only.empty()) return true;
  return std::any_of(only.begin(), only.end(), [&](const auto& s) { return s == p.name || s == p.group; });
}

inline PropsReport run_props(std::uint64_t seed, Index trials, const PropsOptions& opt = {}) {
  if (trials < 1) throw ParameterOutOfRange("trials must be >= 1");
  PropsReport rep{seed, opt.mutation, {}};
  for (const auto& p : registry()) {
    if (!selected(p, opt.only)) continue;
    PropertyResult r{p.name, trials, 0, std::nullopt, std::nullopt};
    for (Index t = 0; t < trials; ++t) {
      const auto ts = trial_seed(seed, p.name, t);
      if (auto fail = run_trial(p, ts, opt.mutation)) {
        if (r.failures++ == 0) {
          r.counterexample = *fail;
          r.replay_seed = ts;
        }
      }
    }
    rep.results.push_back(std::move(r));
  }
  return rep;
}

}  // namespace avgrew::props
