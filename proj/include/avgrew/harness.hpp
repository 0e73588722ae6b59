#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "avgrew/core.hpp"
#include "avgrew/instances.hpp"
#include "avgrew/io.hpp"
#include "avgrew/mdp.hpp"
#include "avgrew/oracles.hpp"
#include "avgrew/solver.hpp"

namespace avgrew {

/// How the per-cell sample sizes are chosen.
enum class Coverage {
  Target,     // n(s, pi*(s)) = ceil(m mu(s)) + k_transient, n_off elsewhere
  Uniform,    // n(s, a) = m everywhere
  Generator,  // the family's own sizes at this m
};

struct InstanceSpec {
  std::string family = "mdp";  // mdp | transient | recurrent | figure2
  nlohmann::json params = nlohmann::json::object();
  std::optional<TabularMdp> mdp;             // family "mdp"
  std::optional<DeterministicPolicy> target;  // optional for "mdp"; generators supply their own
};

struct SweepConfig {
  InstanceSpec instance;
  std::vector<std::uint64_t> m_grid;
  std::vector<std::uint64_t> seeds;
  double delta = 0.1;
  std::optional<double> gamma;  // nullopt: 1 - 1/n_tot per dataset
  Coverage coverage = Coverage::Target;
  std::uint64_t k_transient = 0;
  std::uint64_t n_off = 0;
  bool record_time = true;  // false writes 0 so reruns give identical bytes
  std::optional<Index> workers;
  std::optional<std::string> output;  // CSV path
  double enumerate_budget = 4096;     // largest policy count enumerated for rho*
  double max_scalar_updates = 1e8;
};

struct SweepRecord {
  std::uint64_t m = 0;
  std::uint64_t seed = 0;
  double subopt = 0.0;
  double span_h = 0.0;  // bias span of the target policy; inf if multichain
  double t_hit = 0.0;   // hitting radius of the target policy; may be inf
  Index K = 0;
  double ms = 0.0;
  bool pessimism = false;  // exact Q^{pi_hat}_gamma >= Q_hat entrywise

  friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

struct SweepSummaryRow {
  std::uint64_t m = 0;
  double median_subopt = 0.0;
};

struct SweepResult {
  std::vector<SweepRecord> records;  // sorted by (m, seed)
  std::vector<SweepSummaryRow> summary;
  std::optional<double> slope;  // least-squares slope of log median vs log m
  std::vector<std::string> warnings;
};

class SweepError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kSweepWarnIterations = 1e6;

inline Coverage coverage_from_string(const std::string& s) {
  if (s == "target") return Coverage::Target;
  if (s == "uniform") return Coverage::Uniform;
  if (s == "generator") return Coverage::Generator;
  throw ParameterOutOfRange("coverage must be target, uniform or generator");
}

/// Worker count: the request (default hardware concurrency), capped by
/// AVGREW_WORKERS when set and by the job count.
inline Index worker_count(Index jobs, std::optional<Index> requested = std::nullopt) {
  Index n = requested.value_or(std::max<unsigned>(1, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("AVGREW_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = std::min(n, static_cast<Index>(v));
  }
  return std::max<Index>(1, std::min(n, jobs));
}

namespace detail {

inline double param(const nlohmann::json& p, const char* key, double fallback) {
  return p.contains(key) ? p.at(key).get<double>() : fallback;
}

/// Builds the family's model at effective size m.
inline InstanceBundle instance_at(const InstanceSpec& spec, double m) {
  const auto& p = spec.params;
  if (spec.family == "transient") {
    TransientInstance t;
    t.T = param(p, "T", t.T);
    t.m = m;
    t.delta = param(p, "delta", t.delta);
    t.i = static_cast<Index>(param(p, "i", 0));
    t.b = static_cast<Index>(param(p, "b", 0));
    return build_transient(t);
  }
  if (spec.family == "recurrent") {
    RecurrentInstance r;
    r.T = param(p, "T", r.T);
    r.S = static_cast<Index>(param(p, "S", static_cast<double>(r.S)));
    r.k = param(p, "k", 0);
    r.m = m;
    if (p.contains("theta")) r.theta = p.at("theta").get<std::vector<int>>();
    return build_recurrent(r);
  }
  if (spec.family == "figure2") {
    auto b = build_figure2(m, param(p, "T", 8));
    if (p.contains("patch_eps")) b.mdp = unichain_patch(b.mdp, p.at("patch_eps").get<double>());
    return b;
  }
  if (spec.family == "mdp") {
    if (!spec.mdp) throw ParameterOutOfRange("family \"mdp\" needs an MDP");
    const Index S = spec.mdp->num_states(), A = spec.mdp->num_actions();
    return {*spec.mdp, SampleSizeFn{CountTable::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A))},
            spec.target.value_or(DeterministicPolicy{})};
  }
  throw ParameterOutOfRange("unknown family " + spec.family);
}

/// Optimal gain and target policy for one model, computed once per m.
struct Reference {
  TabularMdp mdp;
  SampleSizeFn sizes;
  DeterministicPolicy target;
  double rho_star = 0.0;
  Vector stationary;
  double span_h = 0.0;
  double t_hit = 0.0;
};

inline Reference reference_at(const SweepConfig& cfg, std::uint64_t m) {
  InstanceBundle b = instance_at(cfg.instance, static_cast<double>(m));
  const Index S = b.mdp.num_states(), A = b.mdp.num_actions();
  const double policies = std::pow(static_cast<double>(A), static_cast<double>(S));
  const bool have_target = !b.target.action.empty();
  double rho_star = 0.0;
  if (policies <= cfg.enumerate_budget) {
    EnumerationOptions eo;
    eo.compute_mixing = false;
    const auto res = enumerate_optimal(b.mdp, eo);
    rho_star = res.optimal_gain;
    if (!have_target) b.target = res.optimal_policy;
  } else {
    if (!have_target) throw SweepError("too many policies to enumerate and no target policy supplied");
    rho_star = evaluate_policy(b.mdp, b.target).min_gain();
  }
  const MarkovChain chain = induce_chain(b.mdp, b.target);
  const auto ev = gain_bias(chain);
  Reference ref{b.mdp, b.sizes, b.target, rho_star, Vector::Zero(static_cast<Eigen::Index>(S)), 0.0, 0.0};
  ref.span_h = ev.bias ? span(*ev.bias) : std::numeric_limits<double>::infinity();
  if (ev.stationary) ref.stationary = *ev.stationary;
  ref.t_hit = policy_hitting_radius(chain).t_hit.as_double();

  switch (cfg.coverage) {
    case Coverage::Generator:
      if (cfg.instance.family == "mdp") throw SweepError("generator coverage needs a generated family");
      break;
    case Coverage::Uniform:
      ref.sizes.n.setConstant(m);
      break;
    case Coverage::Target:
      if (!ev.stationary) throw SweepError("target coverage needs a unichain target policy");
      ref.sizes.n.setConstant(cfg.n_off);
      for (Index s = 0; s < S; ++s) {
        const double need = std::ceil(static_cast<double>(m) * ref.stationary(static_cast<Eigen::Index>(s)));
        ref.sizes.n(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(ref.target.action[s])) =
            static_cast<std::uint64_t>(need) + cfg.k_transient;
      }
      break;
  }
  return ref;
}

inline SweepRecord run_cell(const SweepConfig& cfg, const Reference& ref, std::uint64_t m, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const auto data = sample_dataset(ref.mdp, ref.sizes, seed);
  SolverOptions opt;
  opt.gamma = cfg.gamma;
  opt.max_scalar_updates = cfg.max_scalar_updates;
  const auto out = solve(data, ref.mdp.reward(), cfg.delta, opt);
  const auto ev = evaluate_policy(ref.mdp, out.policy);
  const Matrix q_true = discounted_q(ref.mdp, out.policy, out.config.gamma);
  const bool held = ((q_true - out.q_hat).array() >= -1e-9).all();
  const auto stop = std::chrono::steady_clock::now();
  SweepRecord rec;
  rec.m = m;
  rec.seed = seed;
  rec.subopt = ref.rho_star - ev.min_gain();
  rec.span_h = ref.span_h;
  rec.t_hit = ref.t_hit;
  rec.K = out.iterations;
  rec.ms = cfg.record_time ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0;
  rec.pessimism = held;
  return rec;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Ordinary least-squares slope of y on x.
inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterOutOfRange("slope needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

/// Per-m medians and the log-log slope, skipping the slope if a median is not positive.
inline void summarize(SweepResult& res) {
  std::map<std::uint64_t, std::vector<double>> by_m;
  for (const auto& r : res.records) by_m[r.m].push_back(r.subopt);
  res.summary.clear();
  std::vector<double> lx, ly;
  bool positive = true;
  for (const auto& [m, v] : by_m) {
    const double med = detail::median(v);
    res.summary.push_back({m, med});
    positive = positive && med > 0.0;
    lx.push_back(std::log(static_cast<double>(m)));
    ly.push_back(std::log(med));
  }
  res.slope.reset();
  if (positive && lx.size() >= 2) res.slope = least_squares_slope(lx, ly);
}

inline void emit_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  out << "m,seed,subopt,span_h,t_hit,K,ms,pessimism\n";
  char buf[512];
  for (const auto& r : records) {
    for (double x : {r.subopt, r.span_h, r.t_hit, r.ms})
      if (std::isnan(x)) throw Error("NaN in sweep record (m=" + std::to_string(r.m) + ")");
    std::snprintf(buf, sizeof buf, "%llu,%llu,%.17g,%.17g,%.17g,%llu,%.17g,%d\n",
                  static_cast<unsigned long long>(r.m), static_cast<unsigned long long>(r.seed), r.subopt, r.span_h,
                  r.t_hit, static_cast<unsigned long long>(r.K), r.ms, r.pessimism ? 1 : 0);
    out << buf;
  }
}

inline void emit_csv(const std::string& path, const std::vector<SweepRecord>& records) {
  std::ostringstream body;
  emit_csv(body, records);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << body.str();
  if (!f) throw Error("write failed: " + path);
}

inline std::vector<SweepRecord> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "m,seed,subopt,span_h,t_hit,K,ms,pessimism")
    throw Error("missing or unexpected CSV header");
  std::vector<SweepRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw Error("CSV row needs 8 fields: " + line);
    SweepRecord r;
    r.m = std::stoull(f[0]);
    r.seed = std::stoull(f[1]);
    r.subopt = std::strtod(f[2].c_str(), nullptr);
    r.span_h = std::strtod(f[3].c_str(), nullptr);
    r.t_hit = std::strtod(f[4].c_str(), nullptr);
    r.K = static_cast<Index>(std::stoull(f[5]));
    r.ms = std::strtod(f[6].c_str(), nullptr);
    r.pessimism = f[7] == "1";
    out.push_back(r);
  }
  return out;
}

inline nlohmann::json summary_to_json(const SweepResult& res) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : res.summary) rows.push_back({{"m", r.m}, {"median_subopt", r.median_subopt}});
  return {{"summary", rows}, {"slope_fit", res.slope ? nlohmann::json(*res.slope) : nlohmann::json(nullptr)},
          {"warnings", res.warnings}};
}

/// Runs every (m, seed) cell, in parallel up to the worker budget.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  if (cfg.m_grid.empty() || cfg.seeds.empty()) throw ParameterOutOfRange("m_grid and seeds must be nonempty");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ParameterOutOfRange("delta must be in (0, 1)");

  SweepResult res;
  std::vector<detail::Reference> refs;
  for (auto m : cfg.m_grid) {
    refs.push_back(detail::reference_at(cfg, m));
    const auto n_tot = refs.back().sizes.total();
    if (n_tot == 0) throw SweepError("coverage pattern gives an empty dataset at m=" + std::to_string(m));
    const double gamma = cfg.gamma.value_or(1.0 - 1.0 / static_cast<double>(n_tot));
    const double k = static_cast<double>(iteration_count(n_tot, gamma));
    if (!cfg.gamma && k > kSweepWarnIterations)
      res.warnings.push_back("m=" + std::to_string(m) + ": K=" + std::to_string(static_cast<long long>(k)) +
                             " sweeps under the default gamma; consider a fixed gamma");
  }

  struct Job {
    std::size_t ref;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < refs.size(); ++i)
    for (auto s : cfg.seeds) jobs.push_back({i, s});

  std::vector<std::optional<SweepRecord>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t j; !failed && (j = next++) < jobs.size();) {
      try {
        slots[j] = detail::run_cell(cfg, refs[jobs[j].ref], cfg.m_grid[jobs[j].ref], jobs[j].seed);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  const Index n = worker_count(jobs.size(), cfg.workers);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto& s : slots)
    if (s) res.records.push_back(*s);
  std::sort(res.records.begin(), res.records.end(),
            [](const auto& a, const auto& b) { return std::tie(a.m, a.seed) < std::tie(b.m, b.seed); });
  if (cfg.output) emit_csv(*cfg.output, res.records);  // partial results on failure too
  if (first_error) std::rethrow_exception(first_error);
  summarize(res);
  return res;
}

/// Reads a sweep configuration document.
inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  SweepConfig cfg;
  const auto& inst = io::detail::field(j, "instance");
  cfg.instance.family = inst.value("family", std::string("mdp"));
  cfg.instance.params = inst.value("params", nlohmann::json::object());
  if (inst.contains("mdp")) {
    const nlohmann::json& mj = inst.at("mdp");
    cfg.instance.mdp = io::mdp_from_json(mj.is_string() ? io::read_json_file(mj.get<std::string>()) : mj);
  }
  if (inst.contains("target")) {
    DeterministicPolicy pi;
    pi.action = inst.at("target").at("actions").get<std::vector<Index>>();
    cfg.instance.target = pi;
  }
  cfg.m_grid = io::detail::field(j, "m_grid").get<std::vector<std::uint64_t>>();
  cfg.seeds = io::detail::field(j, "seeds").get<std::vector<std::uint64_t>>();
  cfg.delta = j.value("delta", cfg.delta);
  const auto gm = j.value("gamma_mode", nlohmann::json("theorem_default"));
  if (gm.is_object()) {
    cfg.gamma = gm.at("fixed").get<double>();
  } else if (gm.is_number()) {
    cfg.gamma = gm.get<double>();
  } else if (gm.get<std::string>() != "theorem_default") {
    throw ParameterOutOfRange("gamma_mode must be \"theorem_default\", a number, or {\"fixed\": gamma}");
  }
  cfg.coverage = coverage_from_string(j.value("coverage", std::string("target")));
  cfg.k_transient = j.value("k_transient", cfg.k_transient);
  cfg.n_off = j.value("n_off", cfg.n_off);
  cfg.record_time = j.value("record_time", cfg.record_time);
  if (j.contains("workers")) cfg.workers = j.at("workers").get<Index>();
  if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
  cfg.enumerate_budget = j.value("enumerate_budget", cfg.enumerate_budget);
  cfg.max_scalar_updates = j.value("max_scalar_updates", cfg.max_scalar_updates);
  return cfg;
}

}  // namespace avgrew
