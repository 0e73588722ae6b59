#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "avgrew/core.hpp"

namespace avgrew {

inline constexpr double kSimplexTolerance = 1e-12;

/// One violated invariant found by validate().
struct Violation {
  enum class Kind { NonStochasticRow, NegativeEntry, RewardOutOfRange, NonFinite };
  Kind kind;
  Index state = 0;
  Index action = 0;
  Index next_state = 0;  // only meaningful for NegativeEntry
  double value = 0.0;    // offending row sum / entry / reward

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::NonStochasticRow:
        os << "NonStochasticRow(s=" << state << ", a=" << action << ", sum=" << value << ")";
        break;
      case Kind::NegativeEntry:
        os << "NegativeEntry(s=" << state << ", a=" << action << ", s'=" << next_state
           << ", p=" << value << ")";
        break;
      case Kind::RewardOutOfRange:
        os << "RewardOutOfRange(s=" << state << ", a=" << action << ", r=" << value << ")";
        break;
      case Kind::NonFinite:
        os << "NonFinite(s=" << state << ", a=" << action << ")";
        break;
    }
    return os.str();
  }
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string describe() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v.describe();
    }
    return out;
  }
};

class InvalidModel : public Error {
 public:
  explicit InvalidModel(ValidationReport report)
      : Error("invalid MDP: " + report.describe()), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Finite MDP with dense kernel and reward table.
///
/// The kernel is stored as an (S*A) x S matrix whose row s*A + a is P(. | s, a).
/// The constructor only checks shapes; use validate() or TabularMdp::checked()
/// for the probabilistic invariants.
class TabularMdp {
 public:
  TabularMdp(Index num_states, Index num_actions, Matrix kernel, Matrix reward)
      : S_(num_states), A_(num_actions), kernel_(std::move(kernel)), reward_(std::move(reward)) {
    if (S_ == 0 || A_ == 0) throw DimensionMismatch("MDP needs S >= 1 and A >= 1");
    if (static_cast<Index>(kernel_.rows()) != S_ * A_ || static_cast<Index>(kernel_.cols()) != S_)
      throw DimensionMismatch("kernel must be (S*A) x S");
    if (static_cast<Index>(reward_.rows()) != S_ || static_cast<Index>(reward_.cols()) != A_)
      throw DimensionMismatch("reward must be S x A");
  }

  /// Builds and validates; throws InvalidModel listing every violation.
  static TabularMdp checked(Index num_states, Index num_actions, Matrix kernel, Matrix reward);

  Index num_states() const { return S_; }
  Index num_actions() const { return A_; }
  const Matrix& kernel() const { return kernel_; }
  const Matrix& reward() const { return reward_; }

  auto row(Index s, Index a) const { return kernel_.row(static_cast<Eigen::Index>(s * A_ + a)); }
  double prob(Index s, Index a, Index next) const {
    return kernel_(static_cast<Eigen::Index>(s * A_ + a), static_cast<Eigen::Index>(next));
  }
  double reward(Index s, Index a) const {
    return reward_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }

 private:
  Index S_;
  Index A_;
  Matrix kernel_;
  Matrix reward_;
};

inline ValidationReport validate(const TabularMdp& mdp) {
  ValidationReport report;
  const Index S = mdp.num_states(), A = mdp.num_actions();
  for (Index s = 0; s < S; ++s) {
    for (Index a = 0; a < A; ++a) {
      const double r = mdp.reward(s, a);
      if (!std::isfinite(r)) {
        report.violations.push_back({Violation::Kind::NonFinite, s, a, 0, r});
      } else if (r < 0.0 || r > 1.0) {
        report.violations.push_back({Violation::Kind::RewardOutOfRange, s, a, 0, r});
      }
      double sum = 0.0;
      bool finite = true;
      for (Index t = 0; t < S; ++t) {
        const double p = mdp.prob(s, a, t);
        if (!std::isfinite(p)) {
          finite = false;
          continue;
        }
        if (p < 0.0) report.violations.push_back({Violation::Kind::NegativeEntry, s, a, t, p});
        sum += p;
      }
      if (!finite) {
        report.violations.push_back({Violation::Kind::NonFinite, s, a, 0, 0.0});
      } else if (std::abs(sum - 1.0) > kSimplexTolerance) {
        report.violations.push_back({Violation::Kind::NonStochasticRow, s, a, 0, sum});
      }
    }
  }
  return report;
}

inline TabularMdp TabularMdp::checked(Index num_states, Index num_actions, Matrix kernel,
                                      Matrix reward) {
  TabularMdp mdp(num_states, num_actions, std::move(kernel), std::move(reward));
  auto report = validate(mdp);
  if (!report.ok()) throw InvalidModel(std::move(report));
  return mdp;
}

struct DeterministicPolicy {
  std::vector<Index> action;

  Index num_states() const { return action.size(); }
  friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;
};

/// Randomized stationary policy; row s of dist is a distribution over actions.
struct StochasticPolicy {
  Matrix dist;

  Index num_states() const { return static_cast<Index>(dist.rows()); }
  Index num_actions() const { return static_cast<Index>(dist.cols()); }
};

inline void check_policy(const DeterministicPolicy& pi, Index num_states, Index num_actions) {
  if (pi.num_states() != num_states)
    throw DimensionMismatch("policy has " + std::to_string(pi.num_states()) + " states, expected " +
                            std::to_string(num_states));
  for (Index s = 0; s < pi.action.size(); ++s)
    if (pi.action[s] >= num_actions)
      throw ParameterOutOfRange("policy action " + std::to_string(pi.action[s]) + " at state " +
                                std::to_string(s) + " is out of range");
}

inline void check_policy(const StochasticPolicy& pi, Index num_states, Index num_actions) {
  if (pi.num_states() != num_states || pi.num_actions() != num_actions)
    throw DimensionMismatch("stochastic policy shape does not match S x A");
  for (Index s = 0; s < num_states; ++s) {
    double sum = 0.0;
    for (Index a = 0; a < num_actions; ++a) {
      const double p = pi.dist(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
      if (!(p >= 0.0)) throw ParameterOutOfRange("negative policy probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance)
      throw ParameterOutOfRange("policy row " + std::to_string(s) + " does not sum to 1");
  }
}

/// One-hot embedding of a deterministic policy.
inline StochasticPolicy lift_policy(const DeterministicPolicy& pi, Index num_actions) {
  check_policy(pi, pi.num_states(), num_actions);
  StochasticPolicy out{Matrix::Zero(static_cast<Eigen::Index>(pi.num_states()),
                                    static_cast<Eigen::Index>(num_actions))};
  for (Index s = 0; s < pi.num_states(); ++s)
    out.dist(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(pi.action[s])) = 1.0;
  return out;
}

/// Policy-induced chain: transition P_pi and reward r_pi.
struct MarkovChain {
  Matrix transition;
  Vector reward;

  Index num_states() const { return static_cast<Index>(transition.rows()); }
};

inline void check_chain(const MarkovChain& chain) {
  const auto S = chain.transition.rows();
  if (S == 0 || chain.transition.cols() != S || chain.reward.size() != S)
    throw DimensionMismatch("chain must be S x S with a length-S reward");
  for (Eigen::Index s = 0; s < S; ++s) {
    if ((chain.transition.row(s).array() < 0.0).any())
      throw ParameterOutOfRange("negative transition probability in row " + std::to_string(s));
    if (std::abs(chain.transition.row(s).sum() - 1.0) > kSimplexTolerance)
      throw ParameterOutOfRange("chain row " + std::to_string(s) + " does not sum to 1");
  }
}

inline MarkovChain induce_chain(const TabularMdp& mdp, const StochasticPolicy& pi) {
  const Index S = mdp.num_states(), A = mdp.num_actions();
  check_policy(pi, S, A);
  MarkovChain chain{Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S)),
                    Vector::Zero(static_cast<Eigen::Index>(S))};
  for (Index s = 0; s < S; ++s) {
    const auto es = static_cast<Eigen::Index>(s);
    for (Index a = 0; a < A; ++a) {
      const double w = pi.dist(es, static_cast<Eigen::Index>(a));
      if (w == 0.0) continue;
      chain.transition.row(es) += w * mdp.row(s, a);
      chain.reward(es) += w * mdp.reward(s, a);
    }
  }
  return chain;
}

inline MarkovChain induce_chain(const TabularMdp& mdp, const DeterministicPolicy& pi) {
  check_policy(pi, mdp.num_states(), mdp.num_actions());
  const Index S = mdp.num_states();
  MarkovChain chain{Matrix(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S)),
                    Vector(static_cast<Eigen::Index>(S))};
  for (Index s = 0; s < S; ++s) {
    chain.transition.row(static_cast<Eigen::Index>(s)) = mdp.row(s, pi.action[s]);
    chain.reward(static_cast<Eigen::Index>(s)) = mdp.reward(s, pi.action[s]);
  }
  return chain;
}

}  // namespace avgrew
