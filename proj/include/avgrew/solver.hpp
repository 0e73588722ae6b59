#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "avgrew/core.hpp"
#include "avgrew/mdp.hpp"
#include "avgrew/pessimism.hpp"
#include "avgrew/rng.hpp"

namespace avgrew {

/// Per-(s,a) sample counts n(s,a).
struct SampleSizeFn {
  CountTable n;

  Index num_states() const { return static_cast<Index>(n.rows()); }
  Index num_actions() const { return static_cast<Index>(n.cols()); }
  std::uint64_t total() const { return n.sum(); }
  std::uint64_t operator()(Index s, Index a) const {
    return n(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }
};

/// Next-state histograms: row s*A + a of counts holds c[s][a][.].
struct OfflineDataset {
  CountTable counts;
  SampleSizeFn sizes;

  Index num_states() const { return sizes.num_states(); }
  Index num_actions() const { return sizes.num_actions(); }
};

inline void check_dataset(const OfflineDataset& d) {
  const auto S = d.sizes.n.rows(), A = d.sizes.n.cols();
  if (d.counts.rows() != S * A || d.counts.cols() != S) throw DimensionMismatch("counts must be (S*A) x S");
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index a = 0; a < A; ++a)
      if (d.counts.row(s * A + a).sum() != d.sizes.n(s, a))
        throw ParameterOutOfRange("histogram row (" + std::to_string(s) + "," + std::to_string(a) +
                                  ") does not sum to n(s,a)");
}

/// Multinomial draws of n(s,a) next states per pair, one counter stream per (seed, s, a).
inline OfflineDataset sample_dataset(const TabularMdp& mdp, const SampleSizeFn& sizes, std::uint64_t seed) {
  const Index S = mdp.num_states(), A = mdp.num_actions();
  if (sizes.num_states() != S || sizes.num_actions() != A) throw DimensionMismatch("sizes must be S x A");
  OfflineDataset out{CountTable::Zero(static_cast<Eigen::Index>(S * A), static_cast<Eigen::Index>(S)), sizes};
  std::vector<double> cdf(S);
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      const std::uint64_t n = sizes(s, a);
      if (n == 0) continue;
      const auto row = mdp.row(s, a);
      double acc = 0.0;
      Index last = 0;
      for (Index t = 0; t < S; ++t) {
        acc += row(static_cast<Eigen::Index>(t));
        cdf[t] = acc;
        if (row(static_cast<Eigen::Index>(t)) > 0.0) last = t;
      }
      CounterRng rng(CounterRng::key_of(seed, s, a));
      auto hist = out.counts.row(static_cast<Eigen::Index>(s * A + a));
      for (std::uint64_t k = 0; k < n; ++k) {
        // Scale by the row total so rounding in the sum never leaves a gap.
        const double u = rng.uniform() * acc;
        Index t = 0;
        while (t < last && u >= cdf[t]) ++t;
        hist(static_cast<Eigen::Index>(t)) += 1;
      }
    }
  }
  return out;
}

/// Empirical kernel: frequencies, or the uniform row when n(s,a) = 0.
inline Matrix empirical_kernel(const OfflineDataset& d) {
  check_dataset(d);
  const auto S = d.sizes.n.rows(), A = d.sizes.n.cols();
  Matrix p(S * A, S);
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index a = 0; a < A; ++a) {
      const auto n = d.sizes.n(s, a);
      if (n == 0) {
        p.row(s * A + a).setConstant(1.0 / static_cast<double>(S));
      } else {
        p.row(s * A + a) = d.counts.row(s * A + a).cast<double>() / static_cast<double>(n);
      }
    }
  return p;
}

/// Argmax per state, lowest action index on ties.
inline DeterministicPolicy greedy(const QFunction& q) {
  DeterministicPolicy pi;
  pi.action.resize(static_cast<Index>(q.rows()));
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q.cols(); ++a)
      if (q(s, a) > q(s, best)) best = a;
    pi.action[static_cast<Index>(s)] = static_cast<Index>(best);
  }
  return pi;
}

class IterationBudget : public Error {
 public:
  using Error::Error;
};

/// Iteration count K = ceil(ln(2 n_tot / (1 - gamma)) / (1 - gamma)).
inline Index iteration_count(std::uint64_t n_tot, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterOutOfRange("gamma must be in [0, 1)");
  const double k = std::ceil(std::log(2.0 * static_cast<double>(n_tot) / (1.0 - gamma)) / (1.0 - gamma));
  return static_cast<Index>(std::max(k, 0.0));
}

struct SolverOptions {
  std::optional<double> gamma;  // default 1 - 1/n_tot
  double max_scalar_updates = 1e8;
};

struct SolverOutput {
  QFunction q_hat;
  DeterministicPolicy policy;
  Index iterations = 0;
  PessimismConfig config;
  double bellman_residual = 0.0;
};

/// Pessimistic value iteration with quantile clipping, from Q = 0.
template <typename Penalty = StandardPenalty>
SolverOutput solve(const OfflineDataset& data, const Matrix& reward, double delta, const SolverOptions& opt = {},
                   const Penalty& pen = {}) {
  if (reward.rows() != data.sizes.n.rows() || reward.cols() != data.sizes.n.cols())
    throw DimensionMismatch("reward must be S x A");
  const Matrix p_hat = empirical_kernel(data);
  const std::uint64_t n_tot = data.sizes.total();
  if (n_tot == 0) throw ParameterOutOfRange("dataset is empty (n_tot = 0)");
  const double gamma = opt.gamma.value_or(1.0 - 1.0 / static_cast<double>(n_tot));

  SolverOutput out;
  out.config = PessimismConfig::make(data.sizes.n, gamma, delta);
  out.iterations = iteration_count(n_tot, gamma);
  const double S = static_cast<double>(reward.rows()), A = static_cast<double>(reward.cols());
  const double work = static_cast<double>(out.iterations) * S * A * S;
  if (work > opt.max_scalar_updates)
    throw IterationBudget("K = " + std::to_string(out.iterations) + " needs " + std::to_string(work) +
                          " scalar updates, above the cap; override gamma or shrink the instance");

  QFunction q = QFunction::Zero(reward.rows(), reward.cols());
  for (Index k = 0; k < out.iterations; ++k) q = pessimistic_bellman(reward, p_hat, q, out.config, pen);
  out.bellman_residual = (pessimistic_bellman(reward, p_hat, q, out.config, pen) - q).cwiseAbs().maxCoeff();
  out.policy = greedy(q);
  out.q_hat = std::move(q);
  return out;
}

/// Absolute constant in the coverage overhead alpha (C2 T_hit)^2 + 4.
inline constexpr double kDefaultCoverageC2 = 576.0;

struct CoverageReport {
  std::vector<bool> holds;        // per state, at the queried m
  std::vector<double> required;   // per state right-hand side at the queried m
  bool all = true;
  std::optional<double> largest_m;  // absent if no m >= 0 works; +inf if unconstrained
};

/// Checks n(s, pi(s)) >= m mu(s) + overhead for every state.
inline CoverageReport coverage_check_overhead(const SampleSizeFn& sizes, const DeterministicPolicy& target,
                                              const Vector& stationary, double m, double overhead) {
  const Index S = sizes.num_states();
  check_policy(target, S, sizes.num_actions());
  if (static_cast<Index>(stationary.size()) != S) throw DimensionMismatch("stationary must have length S");
  CoverageReport rep;
  double best = std::numeric_limits<double>::infinity();
  bool feasible = true;
  for (Index s = 0; s < S; ++s) {
    const double n = static_cast<double>(sizes(s, target.action[s]));
    const double mu = stationary(static_cast<Eigen::Index>(s));
    const double rhs = m * mu + overhead;
    rep.required.push_back(rhs);
    rep.holds.push_back(n >= rhs);
    rep.all = rep.all && n >= rhs;
    if (mu > 0.0) {
      best = std::min(best, std::floor((n - overhead) / mu));
    } else if (n < overhead) {
      feasible = false;
    }
  }
  if (feasible && best >= 0.0) rep.largest_m = best;
  return rep;
}

/// Coverage condition of the main guarantee with overhead alpha (C2 T_hit)^2 + 4.
inline CoverageReport coverage_check(const SampleSizeFn& sizes, const DeterministicPolicy& target,
                                     const Vector& stationary, double m, double t_hit, const PessimismConfig& cfg,
                                     double c2 = kDefaultCoverageC2) {
  const double overhead = cfg.alpha * (c2 * t_hit) * (c2 * t_hit) + 4.0;
  return coverage_check_overhead(sizes, target, stationary, m, overhead);
}

}  // namespace avgrew
