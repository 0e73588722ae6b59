#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "avgrew/core.hpp"
#include "avgrew/mdp.hpp"
#include "avgrew/oracles.hpp"
#include "avgrew/solver.hpp"

namespace avgrew::io {

using Json = nlohmann::json;

class FormatError : public Error {
 public:
  using Error::Error;
};

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

/// +inf is written as the string "inf" since JSON has no infinity literal.
inline Json to_json(const Extended& x) { return x.is_finite() ? Json(x.value()) : Json("inf"); }

inline Json mdp_to_json(const TabularMdp& mdp) {
  const Index S = mdp.num_states(), A = mdp.num_actions();
  Json kernel = Json::array();
  for (Index s = 0; s < S; ++s) {
    Json per_action = Json::array();
    for (Index a = 0; a < A; ++a) per_action.push_back(to_json(Vector(mdp.row(s, a).transpose())));
    kernel.push_back(std::move(per_action));
  }
  return {{"S", S}, {"A", A}, {"kernel", std::move(kernel)}, {"reward", to_json(mdp.reward())}};
}

namespace detail {

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

inline std::vector<double> doubles(const Json& j, Index expected, const char* what) {
  if (!j.is_array() || j.size() != expected)
    throw FormatError(std::string(what) + ": expected an array of length " + std::to_string(expected));
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw FormatError(std::string(what) + ": expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline Index count(const Json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw FormatError(std::string(what) + " must be a nonnegative integer");
  return j.get<Index>();
}

}  // namespace detail

/// Parses {"S","A","kernel":[S][A][S],"reward":[S][A]} and validates the model.
inline TabularMdp mdp_from_json(const Json& j) {
  const Index S = detail::count(detail::field(j, "S"), "S");
  const Index A = detail::count(detail::field(j, "A"), "A");
  if (S == 0 || A == 0) throw FormatError("S and A must be positive");
  const Json& kj = detail::field(j, "kernel");
  const Json& rj = detail::field(j, "reward");
  if (!kj.is_array() || kj.size() != S) throw FormatError("kernel must have S entries");
  if (!rj.is_array() || rj.size() != S) throw FormatError("reward must have S rows");
  const auto eS = static_cast<Eigen::Index>(S), eA = static_cast<Eigen::Index>(A);
  Matrix kernel(eS * eA, eS), reward(eS, eA);
  for (Index s = 0; s < S; ++s) {
    if (!kj[s].is_array() || kj[s].size() != A) throw FormatError("kernel[s] must have A rows");
    for (Index a = 0; a < A; ++a) {
      const auto row = detail::doubles(kj[s][a], S, "kernel[s][a]");
      for (Index t = 0; t < S; ++t)
        kernel(static_cast<Eigen::Index>(s * A + a), static_cast<Eigen::Index>(t)) = row[t];
    }
    const auto r = detail::doubles(rj[s], A, "reward[s]");
    for (Index a = 0; a < A; ++a) reward(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = r[a];
  }
  return TabularMdp::checked(S, A, std::move(kernel), std::move(reward));
}

inline Json policy_to_json(const DeterministicPolicy& pi) { return {{"actions", pi.action}}; }
inline Json policy_to_json(const StochasticPolicy& pi) { return {{"dist", to_json(pi.dist)}}; }

/// Either form of policy, lifted to a distribution over actions.
inline StochasticPolicy policy_from_json(const Json& j, Index S, Index A) {
  if (j.is_object() && j.contains("actions")) {
    const Json& a = j.at("actions");
    if (!a.is_array()) throw FormatError("actions must be an array");
    DeterministicPolicy pi;
    for (const auto& x : a) pi.action.push_back(detail::count(x, "action"));
    check_policy(pi, S, A);
    return lift_policy(pi, A);
  }
  if (j.is_object() && j.contains("dist")) {
    const Json& d = j.at("dist");
    if (!d.is_array() || d.size() != S) throw FormatError("dist must have S rows");
    StochasticPolicy pi{Matrix(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A))};
    for (Index s = 0; s < S; ++s) {
      const auto row = detail::doubles(d[s], A, "dist[s]");
      for (Index a = 0; a < A; ++a) pi.dist(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = row[a];
    }
    check_policy(pi, S, A);
    return pi;
  }
  throw FormatError("policy must have \"actions\" or \"dist\"");
}

/// Returns the deterministic form if every row is one-hot.
inline std::optional<DeterministicPolicy> as_deterministic(const StochasticPolicy& pi) {
  DeterministicPolicy out;
  for (Eigen::Index s = 0; s < pi.dist.rows(); ++s) {
    Eigen::Index arg = 0;
    if (pi.dist.row(s).maxCoeff(&arg) != 1.0) return std::nullopt;
    out.action.push_back(static_cast<Index>(arg));
  }
  return out;
}

inline Json sizes_to_json(const SampleSizeFn& sizes) {
  Json n = Json::array();
  for (Eigen::Index s = 0; s < sizes.n.rows(); ++s) {
    Json row = Json::array();
    for (Eigen::Index a = 0; a < sizes.n.cols(); ++a) row.push_back(sizes.n(s, a));
    n.push_back(std::move(row));
  }
  return {{"n", std::move(n)}};
}

inline SampleSizeFn sizes_from_json(const Json& j, Index S, Index A) {
  const Json& n = detail::field(j, "n");
  if (!n.is_array() || n.size() != S) throw FormatError("n must have S rows");
  SampleSizeFn out{CountTable(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A))};
  for (Index s = 0; s < S; ++s) {
    if (!n[s].is_array() || n[s].size() != A) throw FormatError("n[s] must have A entries");
    for (Index a = 0; a < A; ++a)
      out.n(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = detail::count(n[s][a], "n(s,a)");
  }
  return out;
}

inline Json solver_output_to_json(const SolverOutput& out) {
  return {{"q_hat", to_json(out.q_hat)},      {"policy", out.policy.action}, {"K", out.iterations},
          {"gamma", out.config.gamma},        {"alpha", out.config.alpha},   {"residual", out.bellman_residual}};
}

/// {gain, bias, span_bias, stationary, t_hit, center, mixing_time, diameter};
/// quantities undefined for a multichain policy are null.
inline Json oracle_report(const TabularMdp& mdp, const StochasticPolicy& pi) {
  const MarkovChain chain = induce_chain(mdp, pi);
  const PolicyEvaluation ev = gain_bias(chain);
  const HittingRadius hr = policy_hitting_radius(chain);
  const MixingTime mix = mixing_time(chain);
  Json j;
  j["gain"] = to_json(ev.gain);
  j["bias"] = ev.bias ? to_json(*ev.bias) : Json(nullptr);
  j["span_bias"] = ev.bias ? Json(span(*ev.bias)) : Json(nullptr);
  j["stationary"] = ev.stationary ? to_json(*ev.stationary) : Json(nullptr);
  j["t_hit"] = to_json(hr.t_hit);
  j["center"] = hr.center ? Json(*hr.center) : Json(nullptr);
  j["mixing_time"] = mix.mixed ? Json(mix.steps) : Json(nullptr);
  j["diameter"] = to_json(diameter(mdp));
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace avgrew::io
