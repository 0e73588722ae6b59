#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "avgrew/core.hpp"
#include "avgrew/mdp.hpp"

namespace avgrew {

/// Action-value table indexed (s, a).
using QFunction = Matrix;

/// Every scalar entering the pessimistic Bellman operator.
struct PessimismConfig {
  double gamma = 0.0;
  double delta = 0.0;
  std::uint64_t n_tot = 0;
  double alpha = 0.0;
  Matrix beta;  // S x A penalty rates

  /// alpha = 8 ln(6 S^2 A n_tot / ((1 - gamma) delta)), beta = alpha / max(n - 1, 1).
  static PessimismConfig make(const CountTable& n, double gamma, double delta) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterOutOfRange("gamma must be in [0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterOutOfRange("delta must be in (0, 1)");
    PessimismConfig cfg;
    cfg.gamma = gamma;
    cfg.delta = delta;
    cfg.n_tot = n.sum();
    if (cfg.n_tot == 0) throw ParameterOutOfRange("dataset is empty (n_tot = 0)");
    const double S = static_cast<double>(n.rows());
    const double A = static_cast<double>(n.cols());
    cfg.alpha = 8.0 * std::log(6.0 * S * S * A * static_cast<double>(cfg.n_tot) / ((1.0 - gamma) * delta));
    cfg.beta.resize(n.rows(), n.cols());
    for (Eigen::Index s = 0; s < n.rows(); ++s)
      for (Eigen::Index a = 0; a < n.cols(); ++a) {
        const double denom = std::max<double>(static_cast<double>(n(s, a)) - 1.0, 1.0);
        cfg.beta(s, a) = cfg.alpha / denom;
      }
    return cfg;
  }
};

/// Largest v(x) whose upper level set {x'' : v(x'') >= v(x)} has mu-mass >= beta.
///
/// Equal values form one level. The lowest level has the whole mass and always
/// qualifies, so the result is well defined for every beta in [0, 1].
inline double upper_quantile(const Vector& mu, const Vector& v, double beta) {
  const auto n = v.size();
  if (mu.size() != n || n == 0) throw DimensionMismatch("upper_quantile: size mismatch");
  std::vector<Eigen::Index> order(static_cast<Index>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return v(i) > v(j); });
  double mass = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double level = v(order[k]);
    while (k < order.size() && v(order[k]) == level) mass += mu(order[k++]);
    if (mass >= beta || k == order.size()) return level;
  }
  return v(order.back());
}

/// Quantile clipping: entries above the upper (1 - beta) quantile are clipped
/// down to it. For beta > 1 every entry is clipped to min(v).
inline Vector quantile_clip(const Vector& mu, const Vector& v, double beta) {
  if (beta > 1.0) return Vector::Constant(v.size(), v.minCoeff());
  const double q = upper_quantile(mu, v, beta);
  return v.cwiseMin(q);
}

/// Population variance of v under mu, clamped at zero.
inline double next_state_variance(const Vector& mu, const Vector& v) {
  if (mu.size() != v.size()) throw DimensionMismatch("next_state_variance: size mismatch");
  const double mean = mu.dot(v);
  const double var = mu.dot((v.array() - mean).square().matrix());
  return var > 0.0 ? var : 0.0;
}

/// Penalty b(s,a,V) for one empirical row.
inline double penalty(const Vector& mu_hat, const Vector& v, double beta, std::uint64_t n_tot) {
  if (n_tot < 1) throw ParameterOutOfRange("n_tot must be >= 1");
  const Vector clipped = quantile_clip(mu_hat, v, beta);
  const double var_term = std::sqrt(beta * next_state_variance(mu_hat, clipped));
  const double span_term = beta * span(clipped);
  return std::max(var_term, span_term) + 5.0 / static_cast<double>(n_tot);
}

/// The penalty combination rule: max{sqrt(beta var), beta span} + 5 / n_tot.
/// Operators take this as a template parameter so property tests can inject
/// deliberately broken variants.
struct StandardPenalty {
  double operator()(double beta, double clipped_variance, double clipped_span, std::uint64_t n_tot) const {
    return std::max(std::sqrt(beta * clipped_variance), beta * clipped_span) + 5.0 / static_cast<double>(n_tot);
  }
};

namespace detail {

inline void check_operator_shapes(const Matrix& reward, const Matrix& p_hat, const QFunction& q,
                                  const PessimismConfig& cfg) {
  const auto S = reward.rows(), A = reward.cols();
  if (p_hat.rows() != S * A || p_hat.cols() != S) throw DimensionMismatch("p_hat must be (S*A) x S");
  if (q.rows() != S || q.cols() != A) throw DimensionMismatch("Q must be S x A");
  if (cfg.beta.rows() != S || cfg.beta.cols() != A) throw DimensionMismatch("beta must be S x A");
}

/// r(s,a) + gamma max{ P_sa T_beta(P_sa, V) - b(s,a,V), min V } for all (s,a).
///
/// V is sorted once; each row then finds its quantile level in O(S).
template <typename Penalty>
QFunction pessimistic_backup(const Matrix& reward, const Matrix& p_hat, const Vector& v,
                             const PessimismConfig& cfg, const Penalty& pen) {
  const auto S = reward.rows(), A = reward.cols();
  std::vector<Eigen::Index> order(static_cast<Index>(S));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return v(i) > v(j); });
  const double vmin = v(order.back());

  QFunction out(S, A);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index a = 0; a < A; ++a) {
      const auto row = p_hat.row(s * A + a);
      const double beta = cfg.beta(s, a);
      double clip = vmin;
      if (beta <= 1.0) {
        double mass = 0.0;
        for (std::size_t k = 0; k < order.size();) {
          const double level = v(order[k]);
          while (k < order.size() && v(order[k]) == level) mass += row(order[k++]);
          if (mass >= beta || k == order.size()) {
            clip = level;
            break;
          }
        }
      }
      // Clipped vector is min(v, clip); clip <= max v, and min is untouched.
      double mean = 0.0;
      for (Eigen::Index t = 0; t < S; ++t) mean += row(t) * std::min(v(t), clip);
      double var = 0.0;
      for (Eigen::Index t = 0; t < S; ++t) {
        const double d = std::min(v(t), clip) - mean;
        var += row(t) * d * d;
      }
      if (var < 0.0) var = 0.0;
      const double b = pen(beta, var, clip - vmin, cfg.n_tot);
      out(s, a) = reward(s, a) + cfg.gamma * std::max(mean - b, vmin);
    }
  }
  return out;
}

}  // namespace detail

/// Action maximization M Q.
inline Vector max_over_actions(const QFunction& q) { return q.rowwise().maxCoeff(); }

/// Policy-weighted value M^pi Q.
inline Vector policy_value(const QFunction& q, const StochasticPolicy& pi) {
  if (pi.dist.rows() != q.rows() || pi.dist.cols() != q.cols()) throw DimensionMismatch("policy shape");
  return q.cwiseProduct(pi.dist).rowwise().sum();
}

/// Pessimistic Bellman operator applied to Q.
template <typename Penalty = StandardPenalty>
QFunction pessimistic_bellman(const Matrix& reward, const Matrix& p_hat, const QFunction& q,
                              const PessimismConfig& cfg, const Penalty& pen = {}) {
  detail::check_operator_shapes(reward, p_hat, q, cfg);
  return detail::pessimistic_backup(reward, p_hat, max_over_actions(q), cfg, pen);
}

/// Policy-evaluation variant: M replaced by M^pi.
template <typename Penalty = StandardPenalty>
QFunction pessimistic_bellman_policy(const Matrix& reward, const Matrix& p_hat, const QFunction& q,
                                     const PessimismConfig& cfg, const StochasticPolicy& pi,
                                     const Penalty& pen = {}) {
  detail::check_operator_shapes(reward, p_hat, q, cfg);
  return detail::pessimistic_backup(reward, p_hat, policy_value(q, pi), cfg, pen);
}

class IterationCapExceeded : public Error {
 public:
  using Error::Error;
};

struct FixedPointResult {
  QFunction q;
  Index iterations = 0;
};

/// Iterates a gamma-contraction until ||Q_{t+1} - Q_t|| <= tol (1 - gamma) / gamma,
/// which puts the returned iterate within tol of the fixed point.
template <typename Operator>
FixedPointResult fixed_point(Operator&& op, double gamma, double tol, QFunction start) {
  if (!(tol > 0.0)) throw ParameterOutOfRange("tol must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterOutOfRange("gamma must be in [0, 1)");
  const double stop = gamma > 0.0 ? tol * (1.0 - gamma) / gamma : std::numeric_limits<double>::infinity();
  const double raw_cap = 10.0 * std::log(1.0 / ((1.0 - gamma) * tol)) / (1.0 - gamma);
  const auto cap = static_cast<Index>(std::max(1.0, std::ceil(raw_cap)));
  QFunction cur = std::move(start);
  for (Index it = 1; it <= cap; ++it) {
    QFunction next = op(cur);
    if (!next.allFinite()) throw IterationCapExceeded("fixed_point: iterate diverged at step " + std::to_string(it));
    const double diff = (next - cur).cwiseAbs().maxCoeff();
    cur = std::move(next);
    if (diff <= stop) return {std::move(cur), it};
  }
  throw IterationCapExceeded("fixed_point: no convergence within " + std::to_string(cap) + " iterations");
}

}  // namespace avgrew
