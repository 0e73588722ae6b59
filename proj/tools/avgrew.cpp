// avgrew: command-line front end for instance generation, solving, oracles,
// sweeps and the property suite.
//
// Exit codes: 0 success, 1 property failure or computation error, 2 usage error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "avgrew/avgrew.hpp"

namespace {

using avgrew::io::Json;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Errors caused by what the user passed in rather than by the computation.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const Json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    avgrew::io::write_json_file(path, j);
  }
}

// A file may hold the object itself or a gen bundle containing it under `key`.
Json load_part(const std::string& path, const char* key) {
  Json j = avgrew::io::read_json_file(path);
  if (j.is_object() && j.contains(key)) return j.at(key);
  return j;
}

std::vector<int> parse_bits(const std::string& s) {
  std::vector<int> out;
  for (char c : s) {
    if (c == '0' || c == '1') out.push_back(c - '0');
    else if (c != ',' && c != ' ') throw UsageError("theta must be a string of 0/1 digits");
  }
  return out;
}

struct GenArgs {
  std::string family;
  double T = 8, m = 64, delta = 1e-4, k = 0;
  std::size_t S = 6;
  std::string theta;
  bool strict = false;
  std::optional<double> patch_eps;
  std::string out;
};

int run_gen(const GenArgs& a) {
  avgrew::InstanceBundle b = [&] {
    if (a.family == "transient") {
      avgrew::TransientInstance t;
      t.T = a.T;
      t.m = a.m;
      t.delta = a.delta;
      t.strict = a.strict;
      if (!a.theta.empty()) {
        const auto comma = a.theta.find(',');
        if (comma == std::string::npos) throw UsageError("transient theta is \"i,b\"");
        t.i = std::stoul(a.theta.substr(0, comma));
        t.b = std::stoul(a.theta.substr(comma + 1));
      }
      return avgrew::build_transient(t);
    }
    if (a.family == "recurrent") {
      avgrew::RecurrentInstance r;
      r.T = a.T;
      r.S = a.S;
      r.m = a.m;
      r.k = a.k;
      r.strict = a.strict;
      r.theta = parse_bits(a.theta);
      return avgrew::build_recurrent(r);
    }
    auto f = avgrew::build_figure2(a.m, a.T);
    if (a.patch_eps) f.mdp = avgrew::unichain_patch(f.mdp, *a.patch_eps);
    return f;
  }();
  Json params = {{"T", a.T}, {"m", a.m}};
  if (a.family == "transient") params["delta"] = a.delta;
  if (a.family == "recurrent") params["S"] = a.S, params["k"] = a.k;
  if (!a.theta.empty()) params["theta"] = a.theta;
  emit({{"family", a.family},
        {"params", params},
        {"mdp", avgrew::io::mdp_to_json(b.mdp)},
        {"sizes", avgrew::io::sizes_to_json(b.sizes)},
        {"policy", avgrew::io::policy_to_json(b.target)}},
       a.out);
  return kOk;
}

struct SolveArgs {
  std::string mdp, sizes, out;
  std::uint64_t seed = 0;
  double delta = 0.1;
  std::optional<double> gamma;
};

int run_solve(const SolveArgs& a) {
  const auto mdp = avgrew::io::mdp_from_json(load_part(a.mdp, "mdp"));
  const auto sizes = avgrew::io::sizes_from_json(load_part(a.sizes, "sizes"), mdp.num_states(), mdp.num_actions());
  const auto data = avgrew::sample_dataset(mdp, sizes, a.seed);
  avgrew::SolverOptions opt;
  opt.gamma = a.gamma;
  emit(avgrew::io::solver_output_to_json(avgrew::solve(data, mdp.reward(), a.delta, opt)), a.out);
  return kOk;
}

int run_oracle(const std::string& mdp_path, const std::string& policy_path, const std::string& out) {
  const auto mdp = avgrew::io::mdp_from_json(load_part(mdp_path, "mdp"));
  const auto pi = avgrew::io::policy_from_json(load_part(policy_path, "policy"), mdp.num_states(), mdp.num_actions());
  emit(avgrew::io::oracle_report(mdp, pi), out);
  return kOk;
}

int run_sweep_cmd(const std::string& config, const std::string& csv, const std::string& summary) {
  auto cfg = avgrew::sweep_config_from_json(avgrew::io::read_json_file(config));
  if (!csv.empty()) cfg.output = csv;
  const auto res = avgrew::run_sweep(cfg);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  if (!cfg.output) avgrew::emit_csv(std::cout, res.records);
  const Json s = avgrew::summary_to_json(res);
  if (!summary.empty()) {
    emit(s, summary);
  } else if (cfg.output) {
    std::cout << s.dump(2) << '\n';
  }
  return kOk;
}

struct PropsArgs {
  std::uint64_t seed = 1;
  std::size_t trials = 100;
  std::string mutation = "none";
  std::vector<std::string> only;
  std::string replay;
  bool json = false;
};

int run_props_cmd(const PropsArgs& a) {
  avgrew::props::PropsOptions opt;
  if (a.mutation == "penalty-sign-flip") opt.mutation = avgrew::props::Mutation::PenaltySignFlip;
  else if (a.mutation != "none") throw UsageError("mutation must be none or penalty-sign-flip");
  opt.only = a.only;

  if (!a.replay.empty()) {
    const auto colon = a.replay.find(':');
    if (colon == std::string::npos) throw UsageError("--replay expects NAME:SEED");
    const auto& p = avgrew::props::find(a.replay.substr(0, colon));
    const auto fail = avgrew::props::run_trial(p, std::stoull(a.replay.substr(colon + 1)), opt.mutation);
    std::cout << p.name << ": " << (fail ? "FAIL " + *fail : std::string("pass")) << '\n';
    return fail ? kFailure : kOk;
  }

  const auto rep = avgrew::props::run_props(a.seed, a.trials, opt);
  if (a.json) {
    Json arr = Json::array();
    for (const auto& r : rep.results) {
      Json j = {{"name", r.name}, {"trials", r.trials}, {"failures", r.failures}};
      j["counterexample"] = r.counterexample ? Json(*r.counterexample) : Json(nullptr);
      j["replay"] = r.replay_seed ? Json(r.name + ":" + std::to_string(*r.replay_seed)) : Json(nullptr);
      arr.push_back(j);
    }
    std::cout << Json{{"seed", rep.seed}, {"ok", rep.ok()}, {"results", arr}}.dump(2) << '\n';
  } else {
    for (const auto& r : rep.results) {
      std::cout << (r.failures ? "FAIL " : "pass ") << r.name << " (" << r.trials - r.failures << "/" << r.trials
                << ")";
      if (r.counterexample) std::cout << "\n     " << *r.counterexample << "\n     replay: --replay " << r.name << ":"
                                      << *r.replay_seed;
      std::cout << '\n';
    }
  }
  return rep.ok() ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline average-reward RL: instances, solver, exact oracles, sweeps"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a hard instance bundle (MDP, sizes, target policy)");
  g->add_option("--family", gen.family, "transient | recurrent | figure2")
      ->required()
      ->check(CLI::IsMember({"transient", "recurrent", "figure2"}));
  g->add_option("--T", gen.T, "hitting scale");
  g->add_option("--m", gen.m, "effective dataset size");
  g->add_option("--delta", gen.delta, "failure probability (transient)");
  g->add_option("--S", gen.S, "number of states (recurrent)");
  g->add_option("--k", gen.k, "transient overhead (recurrent)");
  g->add_option("--theta", gen.theta, "transient: i,b; recurrent: S-1 bits such as 0110");
  g->add_flag("--strict", gen.strict, "enforce the lower-bound parameter regime");
  g->add_option("--patch-eps", gen.patch_eps, "figure2: apply the unichain patch with this eps");
  g->add_option("-o,--out", gen.out, "output file (default stdout)");

  SolveArgs sv;
  auto* s = app.add_subcommand("solve", "sample a dataset and run pessimistic value iteration");
  s->add_option("--mdp", sv.mdp, "MDP JSON or gen bundle")->required();
  s->add_option("--sizes", sv.sizes, "sample sizes JSON {\"n\": [[...]]} or gen bundle")->required();
  s->add_option("--seed", sv.seed, "dataset seed");
  s->add_option("--delta", sv.delta, "failure probability")->check(CLI::Range(0.0, 1.0));
  s->add_option("--gamma", sv.gamma, "discount override (default 1 - 1/n_tot)");
  s->add_option("-o,--out", sv.out, "output file (default stdout)");

  std::string o_mdp, o_policy, o_out;
  auto* o = app.add_subcommand("oracle", "exact gain, bias, hitting radius, mixing time and diameter");
  o->add_option("--mdp", o_mdp, "MDP JSON or gen bundle")->required();
  o->add_option("--policy", o_policy, "policy JSON {\"actions\"} / {\"dist\"} or gen bundle")->required();
  o->add_option("-o,--out", o_out, "output file (default stdout)");

  std::string sw_config, sw_csv, sw_summary;
  auto* w = app.add_subcommand("sweep", "run an m x seed sweep from a JSON config");
  w->add_option("config", sw_config, "sweep config JSON")->required();
  w->add_option("--csv", sw_csv, "CSV output (overrides the config)");
  w->add_option("--summary", sw_summary, "summary JSON output");

  PropsArgs pr;
  auto* p = app.add_subcommand("props", "randomized invariant suite");
  p->add_option("--seed", pr.seed, "base seed");
  p->add_option("--trials", pr.trials, "trials per property")->check(CLI::PositiveNumber);
  p->add_option("--mutation", pr.mutation, "none | penalty-sign-flip");
  p->add_option("--only", pr.only, "property or group names (operator, solver, oracle, instance)");
  p->add_option("--replay", pr.replay, "rerun one trial, NAME:SEED");
  p->add_flag("--json", pr.json, "JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*g) return run_gen(gen);
    if (*s) return run_solve(sv);
    if (*o) return run_oracle(o_mdp, o_policy, o_out);
    if (*w) return run_sweep_cmd(sw_config, sw_csv, sw_summary);
    if (*p) return run_props_cmd(pr);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const avgrew::io::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const avgrew::InvalidModel& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const avgrew::ParameterOutOfRange& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const avgrew::DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
