#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "avgrew/core.hpp"
#include "avgrew/linalg.hpp"
#include "avgrew/mdp.hpp"

// Exact (linear-algebra) evaluation of Markov chains and small MDPs. These are
// the ground truth every statistical component is checked against.

namespace avgrew {

/// Transition probabilities below this are not edges of the support graph.
inline constexpr double kEdgeThreshold = 1e-15;

struct ChainClassification {
  std::vector<std::vector<Index>> recurrent_classes;  // each sorted, ordered by first state
  std::vector<Index> transient_states;                // sorted

  bool unichain() const { return recurrent_classes.size() == 1; }
};

namespace detail {

inline std::vector<std::vector<Index>> support_graph(const Matrix& p) {
  const auto S = static_cast<Index>(p.rows());
  std::vector<std::vector<Index>> adj(S);
  for (Index s = 0; s < S; ++s)
    for (Index t = 0; t < S; ++t)
      if (p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) >= kEdgeThreshold) adj[s].push_back(t);
  return adj;
}

/// Tarjan's algorithm; returns the component id of every vertex.
inline std::vector<Index> strongly_connected(const std::vector<std::vector<Index>>& adj, Index& count) {
  const Index n = adj.size();
  constexpr Index kUnset = static_cast<Index>(-1);
  std::vector<Index> index(n, kUnset), low(n, 0), comp(n, kUnset), stack;
  std::vector<bool> on_stack(n, false);
  Index next = 0;
  count = 0;

  // Iterative DFS: (vertex, next edge position).
  std::vector<std::pair<Index, Index>> work;
  for (Index root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    work.push_back({root, 0});
    while (!work.empty()) {
      auto& [v, pos] = work.back();
      if (pos == 0 && index[v] == kUnset) {
        index[v] = low[v] = next++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (pos < adj[v].size()) {
        const Index w = adj[v][pos++];
        if (index[w] == kUnset) {
          work.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        Index w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      const Index finished = v;
      work.pop_back();
      if (!work.empty()) {
        const Index parent = work.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return comp;
}

/// States that can reach any state in `targets` (targets included).
inline std::vector<bool> can_reach(const std::vector<std::vector<Index>>& adj, const std::vector<bool>& targets,
                                   const std::vector<bool>& blocked = {}) {
  const Index n = adj.size();
  std::vector<std::vector<Index>> rev(n);
  for (Index v = 0; v < n; ++v)
    for (Index w : adj[v]) rev[w].push_back(v);
  std::vector<bool> seen = targets;
  std::vector<Index> queue;
  for (Index v = 0; v < n; ++v)
    if (seen[v]) queue.push_back(v);
  while (!queue.empty()) {
    const Index w = queue.back();
    queue.pop_back();
    for (Index v : rev[w]) {
      if (seen[v] || (!blocked.empty() && blocked[v])) continue;
      seen[v] = true;
      queue.push_back(v);
    }
  }
  return seen;
}

}  // namespace detail

inline ChainClassification classify(const MarkovChain& chain) {
  check_chain(chain);
  const auto adj = detail::support_graph(chain.transition);
  Index count = 0;
  const auto comp = detail::strongly_connected(adj, count);
  std::vector<bool> closed(count, true);
  for (Index v = 0; v < adj.size(); ++v)
    for (Index w : adj[v])
      if (comp[w] != comp[v]) closed[comp[v]] = false;

  ChainClassification out;
  std::vector<Index> slot(count, static_cast<Index>(-1));
  for (Index v = 0; v < adj.size(); ++v) {
    if (!closed[comp[v]]) {
      out.transient_states.push_back(v);
      continue;
    }
    if (slot[comp[v]] == static_cast<Index>(-1)) {
      slot[comp[v]] = out.recurrent_classes.size();
      out.recurrent_classes.emplace_back();
    }
    out.recurrent_classes[slot[comp[v]]].push_back(v);
  }
  return out;
}

namespace detail {

/// Stationary distribution of an irreducible stochastic matrix.
inline Vector irreducible_stationary(const Matrix& p) {
  const auto n = p.rows();
  // mu (I - P) = 0 with the last equation replaced by sum(mu) = 1.
  Matrix m = Matrix::Identity(n, n) - p;
  m.col(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  return linalg::solve(Matrix(m.transpose()), rhs, "stationary equations");
}

}  // namespace detail

/// Unique stationary distribution of a unichain chain (zero on transient states).
inline Vector stationary_distribution(const MarkovChain& chain) {
  const auto cls = classify(chain);
  if (!cls.unichain()) throw NotUnichain();
  // The full-size system is nonsingular for unichain chains; solving it
  // directly also gives exact zeros (up to roundoff) on transient states.
  Vector mu = detail::irreducible_stationary(chain.transition);
  for (Index t : cls.transient_states) mu(static_cast<Eigen::Index>(t)) = 0.0;
  mu = mu.cwiseMax(0.0);
  return mu / mu.sum();
}

struct PolicyEvaluation {
  Vector gain;                       // per-state long-run average reward
  std::optional<Vector> bias;        // present iff unichain, normalized mu . h = 0
  std::optional<Vector> stationary;  // present iff unichain
  bool unichain = false;

  double min_gain() const { return gain.minCoeff(); }
};

inline PolicyEvaluation gain_bias(const MarkovChain& chain) {
  const auto cls = classify(chain);
  const auto n = chain.transition.rows();
  PolicyEvaluation out;
  out.unichain = cls.unichain();
  if (out.unichain) {
    Vector mu = stationary_distribution(chain);
    const double rho = mu.dot(chain.reward);
    // h = (I - P + 1 mu)^{-1} (r - rho 1) solves (I - P) h = r - rho 1 with mu . h = 0.
    Matrix z = Matrix::Identity(n, n) - chain.transition + Vector::Ones(n) * mu.transpose();
    Vector h = linalg::solve(z, Vector(chain.reward.array() - rho), "bias equations");
    out.gain = Vector::Constant(n, rho);
    out.bias = std::move(h);
    out.stationary = std::move(mu);
    return out;
  }

  out.gain = Vector::Zero(n);
  std::vector<Index> recurrent;
  for (const auto& c : cls.recurrent_classes) {
    Matrix pc = linalg::submatrix(chain.transition, c, c);
    // Closed class: renormalize away sub-threshold leakage.
    for (Eigen::Index i = 0; i < pc.rows(); ++i) pc.row(i) /= pc.row(i).sum();
    const Vector mu = detail::irreducible_stationary(pc);
    const double g = mu.dot(linalg::subvector(chain.reward, c));
    for (Index s : c) {
      out.gain(static_cast<Eigen::Index>(s)) = g;
      recurrent.push_back(s);
    }
  }
  const auto& tr = cls.transient_states;
  if (!tr.empty()) {
    // g_T = (I - P_TT)^{-1} P_TR g_R
    const Matrix ptt = linalg::submatrix(chain.transition, tr, tr);
    const Matrix ptr = linalg::submatrix(chain.transition, tr, recurrent);
    const Vector gr = linalg::subvector(out.gain, recurrent);
    const Matrix lhs = Matrix::Identity(ptt.rows(), ptt.cols()) - ptt;
    const Vector gt = linalg::solve(lhs, Vector(ptr * gr), "absorption equations");
    for (Index i = 0; i < tr.size(); ++i) out.gain(static_cast<Eigen::Index>(tr[i])) = gt(static_cast<Eigen::Index>(i));
  }
  return out;
}

inline PolicyEvaluation evaluate_policy(const TabularMdp& mdp, const DeterministicPolicy& pi) {
  return gain_bias(induce_chain(mdp, pi));
}

/// Expected first hitting times E_s[eta_target], eta = inf{t >= 0 : S_t = target}.
inline std::vector<Extended> hitting_times(const MarkovChain& chain, Index target) {
  check_chain(chain);
  const Index S = chain.num_states();
  if (target >= S) throw ParameterOutOfRange("target state out of range");
  const auto adj = detail::support_graph(chain.transition);

  std::vector<bool> is_target(S, false);
  is_target[target] = true;
  const auto reach = detail::can_reach(adj, is_target);
  // States that can drift (avoiding the target) into a region that never sees
  // it have infinite expected hitting time.
  std::vector<bool> lost(S);
  for (Index s = 0; s < S; ++s) lost[s] = !reach[s];
  const auto doomed = detail::can_reach(adj, lost, is_target);

  std::vector<Extended> out(S, Extended::infinite());
  out[target] = Extended::finite(0.0);
  std::vector<Index> finite;
  for (Index s = 0; s < S; ++s)
    if (s != target && !doomed[s]) finite.push_back(s);
  if (finite.empty()) return out;

  const Matrix pff = linalg::submatrix(chain.transition, finite, finite);
  const Matrix lhs = Matrix::Identity(pff.rows(), pff.cols()) - pff;
  const Vector x = linalg::solve(lhs, Vector::Ones(pff.rows()), "hitting-time equations");
  for (Index i = 0; i < finite.size(); ++i) out[finite[i]] = Extended::finite(x(static_cast<Eigen::Index>(i)));
  return out;
}

struct HittingRadius {
  Extended t_hit = Extended::infinite();
  std::optional<Index> center;  // absent when t_hit is infinite
};

/// min over centers of max over starts of the expected hitting time.
inline HittingRadius policy_hitting_radius(const MarkovChain& chain) {
  HittingRadius best;
  const Index S = chain.num_states();
  for (Index c = 0; c < S; ++c) {
    const auto times = hitting_times(chain, c);
    Extended worst = Extended::finite(0.0);
    for (const auto& t : times)
      if (worst < t) worst = t;
    if (worst < best.t_hit) {
      best.t_hit = worst;
      best.center = c;
    }
  }
  return best;
}

struct MixingTime {
  bool mixed = false;
  Index steps = 0;  // valid when mixed
  Index cap = 0;
};

inline Index default_mixing_cap(const MarkovChain& chain) {
  const auto r = policy_hitting_radius(chain);
  if (r.t_hit.is_infinite()) throw NotUnichain();
  return static_cast<Index>(std::ceil(10.0 * static_cast<double>(chain.num_states()) * r.t_hit.value()));
}

/// Smallest t <= cap with max_s || e_s P^t - mu ||_1 <= 1/2.
inline MixingTime mixing_time(const MarkovChain& chain, std::optional<Index> cap = std::nullopt) {
  const Vector mu = stationary_distribution(chain);
  MixingTime out;
  out.cap = cap ? *cap : default_mixing_cap(chain);
  const auto n = chain.transition.rows();
  Matrix pt = Matrix::Identity(n, n);
  for (Index t = 0;; ++t) {
    double worst = 0.0;
    for (Eigen::Index s = 0; s < n; ++s)
      worst = std::max(worst, (pt.row(s) - mu.transpose()).cwiseAbs().sum());
    if (worst <= 0.5) {
      out.mixed = true;
      out.steps = t;
      return out;
    }
    if (t == out.cap) return out;
    pt = pt * chain.transition;
  }
}

/// V solving (I - gamma P) V = r.
inline Vector discounted_value(const MarkovChain& chain, double gamma) {
  check_chain(chain);
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterOutOfRange("discount must be in [0, 1)");
  const auto n = chain.transition.rows();
  const Matrix lhs = Matrix::Identity(n, n) - gamma * chain.transition;
  return linalg::solve(lhs, chain.reward, "discounted evaluation");
}

/// Row vector e_{s0}^T (I - gamma P)^{-1}: expected discounted visit counts.
inline Vector discounted_occupancy(const MarkovChain& chain, double gamma, Index s0) {
  check_chain(chain);
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterOutOfRange("discount must be in [0, 1)");
  const auto n = chain.transition.rows();
  if (s0 >= static_cast<Index>(n)) throw ParameterOutOfRange("start state out of range");
  const Matrix lhs = (Matrix::Identity(n, n) - gamma * chain.transition).transpose();
  Vector e = Vector::Zero(n);
  e(static_cast<Eigen::Index>(s0)) = 1.0;
  return linalg::solve(lhs, e, "occupancy equations");
}

/// Exact discounted action values Q(s,a) = r(s,a) + gamma P_sa V^pi.
inline Matrix discounted_q(const TabularMdp& mdp, const DeterministicPolicy& pi, double gamma) {
  const Vector v = discounted_value(induce_chain(mdp, pi), gamma);
  const auto S = static_cast<Eigen::Index>(mdp.num_states());
  const auto A = static_cast<Eigen::Index>(mdp.num_actions());
  Matrix q(S, A);
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index a = 0; a < A; ++a)
      q(s, a) = mdp.reward(static_cast<Index>(s), static_cast<Index>(a)) +
                gamma * mdp.row(static_cast<Index>(s), static_cast<Index>(a)).dot(v);
  return q;
}

/// (1/T) sum_{t<T} e_{s0} P^t r, a Cesaro partial-sum estimate of the gain.
inline double cesaro_gain(const MarkovChain& chain, Index s0, Index horizon) {
  check_chain(chain);
  if (horizon < 1) throw ParameterOutOfRange("horizon must be >= 1");
  const auto n = chain.transition.rows();
  if (s0 >= static_cast<Index>(n)) throw ParameterOutOfRange("start state out of range");
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(n);
  x(static_cast<Eigen::Index>(s0)) = 1.0;
  double total = 0.0;
  for (Index t = 0; t < horizon; ++t) {
    total += x.dot(chain.reward);
    x = x * chain.transition;
  }
  return total / static_cast<double>(horizon);
}

namespace detail {

/// Minimum expected steps to reach `target` from every state, by value
/// iteration followed by exact policy-iteration polishing.
inline std::vector<Extended> min_hitting_times(const TabularMdp& mdp, Index target, double residual) {
  const Index S = mdp.num_states(), A = mdp.num_actions();
  std::vector<std::vector<Index>> adj(S);
  for (Index s = 0; s < S; ++s)
    for (Index t = 0; t < S; ++t)
      for (Index a = 0; a < A; ++a)
        if (mdp.prob(s, a, t) >= kEdgeThreshold) {
          adj[s].push_back(t);
          break;
        }
  std::vector<bool> is_target(S, false);
  is_target[target] = true;
  const auto reach = can_reach(adj, is_target);

  std::vector<Index> live;
  for (Index s = 0; s < S; ++s)
    if (reach[s] && s != target) live.push_back(s);

  std::vector<Extended> out(S, Extended::infinite());
  out[target] = Extended::finite(0.0);
  if (live.empty()) return out;

  Vector x = Vector::Zero(static_cast<Eigen::Index>(S));
  auto backup = [&](Index s, Index a, const Vector& v) {
    double acc = 1.0;
    for (Index t : live) acc += mdp.prob(s, a, t) * v(static_cast<Eigen::Index>(t));
    return acc;
  };
  constexpr Index kMaxSweeps = 10'000'000;
  for (Index sweep = 0;; ++sweep) {
    if (sweep == kMaxSweeps) throw Error("diameter value iteration did not converge");
    Vector next = x;
    double diff = 0.0;
    for (Index s : live) {
      double best = std::numeric_limits<double>::infinity();
      for (Index a = 0; a < A; ++a) best = std::min(best, backup(s, a, x));
      next(static_cast<Eigen::Index>(s)) = best;
      diff = std::max(diff, std::abs(best - x(static_cast<Eigen::Index>(s))));
    }
    x = std::move(next);
    if (diff <= residual) break;
  }

  // Polish: evaluate the greedy policy exactly and improve until stable.
  std::vector<Index> policy(S, 0);
  auto improve = [&](const Vector& v) {
    bool changed = false;
    for (Index s : live) {
      Index arg = policy[s];
      double best = backup(s, arg, v);
      for (Index a = 0; a < A; ++a) {
        const double q = backup(s, a, v);
        if (q < best - 1e-12 * std::max(1.0, std::abs(best))) {
          best = q;
          arg = a;
        }
      }
      if (arg != policy[s]) changed = true;
      policy[s] = arg;
    }
    return changed;
  };
  for (Index s : live) {
    double best = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < A; ++a) {
      const double q = backup(s, a, x);
      if (q < best) {
        best = q;
        policy[s] = a;
      }
    }
  }
  for (int round = 0; round < 100; ++round) {
    Matrix lhs = Matrix::Identity(static_cast<Eigen::Index>(live.size()), static_cast<Eigen::Index>(live.size()));
    for (Index i = 0; i < live.size(); ++i)
      for (Index j = 0; j < live.size(); ++j)
        lhs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -= mdp.prob(live[i], policy[live[i]], live[j]);
    Vector sol;
    try {
      sol = linalg::solve(lhs, Vector::Ones(lhs.rows()), "policy hitting equations");
    } catch (const SingularSystem&) {
      break;  // improper greedy policy; keep the value-iteration answer
    }
    if ((sol.array() < 0.0).any()) break;
    Vector candidate = x;
    for (Index i = 0; i < live.size(); ++i) candidate(static_cast<Eigen::Index>(live[i])) = sol(static_cast<Eigen::Index>(i));
    // Accept only if consistent with the value-iteration estimate.
    double gap = 0.0;
    for (Index s : live)
      gap = std::max(gap, std::abs(candidate(static_cast<Eigen::Index>(s)) - x(static_cast<Eigen::Index>(s))));
    if (gap > 1e-6 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
    x = candidate;
    if (!improve(x)) break;
  }
  for (Index s : live) out[s] = Extended::finite(x(static_cast<Eigen::Index>(s)));
  return out;
}

}  // namespace detail

/// max over (source, target) of the best-policy expected hitting time.
inline Extended diameter(const TabularMdp& mdp, double residual = 1e-10) {
  const auto report = validate(mdp);
  if (!report.ok()) throw InvalidModel(report);
  Extended worst = Extended::finite(0.0);
  for (Index target = 0; target < mdp.num_states(); ++target) {
    for (const auto& t : detail::min_hitting_times(mdp, target, residual))
      if (worst < t) worst = t;
    if (worst.is_infinite()) break;
  }
  return worst;
}

struct EnumerationOptions {
  std::uint64_t budget = 1'000'000;
  /// Optional per-state action restriction; empty means all actions.
  std::vector<std::vector<Index>> allowed;
  bool compute_mixing = true;
  std::optional<Index> mixing_cap;
  double tie_tolerance = 1e-9;
};

struct PolicyRecord {
  DeterministicPolicy policy;
  double min_gain = 0.0;
  bool unichain = false;
  double bias_span = 0.0;  // 0 when not unichain
};

struct EnumerationResult {
  double optimal_gain = 0.0;
  DeterministicPolicy optimal_policy;
  Index num_optimal = 0;  // policies within tie_tolerance of the optimum
  double h_unif = 0.0;    // max bias span over unichain policies
  std::optional<MixingTime> tau_unif;
  std::vector<PolicyRecord> table;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Exhaustive evaluation of all deterministic policies (within `allowed`).
/// Ties are broken toward the lexicographically smallest policy.
inline EnumerationResult enumerate_optimal(const TabularMdp& mdp, const EnumerationOptions& opt = {}) {
  const Index S = mdp.num_states(), A = mdp.num_actions();
  std::vector<std::vector<Index>> choices(S);
  for (Index s = 0; s < S; ++s) {
    if (!opt.allowed.empty() && !opt.allowed[s].empty()) {
      choices[s] = opt.allowed[s];
      std::sort(choices[s].begin(), choices[s].end());
      for (Index a : choices[s])
        if (a >= A) throw ParameterOutOfRange("allowed action out of range");
    } else {
      for (Index a = 0; a < A; ++a) choices[s].push_back(a);
    }
  }
  if (!opt.allowed.empty() && opt.allowed.size() != S) throw DimensionMismatch("allowed must have S entries");
  double total = 1.0;
  for (const auto& c : choices) total *= static_cast<double>(c.size());
  if (total > static_cast<double>(opt.budget))
    throw BudgetExceeded("enumeration of " + std::to_string(total) + " policies exceeds budget");

  EnumerationResult out;
  out.optimal_gain = -std::numeric_limits<double>::infinity();
  std::vector<Index> digit(S, 0);
  DeterministicPolicy pi{std::vector<Index>(S)};
  bool any_unmixed = false;
  Index worst_mix = 0, mix_cap = 0;
  while (true) {
    for (Index s = 0; s < S; ++s) pi.action[s] = choices[s][digit[s]];
    const auto chain = induce_chain(mdp, pi);
    const auto ev = gain_bias(chain);
    PolicyRecord rec{pi, ev.min_gain(), ev.unichain, ev.bias ? span(*ev.bias) : 0.0};
    if (rec.min_gain > out.optimal_gain) {
      out.optimal_gain = rec.min_gain;
      out.optimal_policy = pi;
    }
    if (ev.unichain) {
      out.h_unif = std::max(out.h_unif, rec.bias_span);
      if (opt.compute_mixing) {
        const auto mt = mixing_time(chain, opt.mixing_cap);
        mix_cap = std::max(mix_cap, mt.cap);
        if (!mt.mixed) any_unmixed = true;
        else worst_mix = std::max(worst_mix, mt.steps);
      }
    }
    out.table.push_back(std::move(rec));

    // Mixed-radix increment, last state fastest: lexicographic order.
    bool advanced = false;
    for (Index s = S; s-- > 0;) {
      if (++digit[s] < choices[s].size()) {
        advanced = true;
        break;
      }
      digit[s] = 0;
    }
    if (!advanced) break;
  }
  for (const auto& rec : out.table)
    if (rec.min_gain >= out.optimal_gain - opt.tie_tolerance) ++out.num_optimal;
  if (opt.compute_mixing) out.tau_unif = MixingTime{!any_unmixed, worst_mix, mix_cap};
  return out;
}

}  // namespace avgrew
