#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "avgrew/avgrew.hpp"

using namespace avgrew;

namespace {

TabularMdp small_mdp() {
  CounterRng rng(101);
  return random::mdp(rng, 3, 2, 0.2);
}

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.instance.family = "mdp";
  cfg.instance.mdp = small_mdp();
  cfg.m_grid = {20, 80};
  cfg.seeds = {1, 2, 3};
  cfg.gamma = 0.9;
  cfg.coverage = Coverage::Uniform;
  cfg.record_time = false;
  return cfg;
}

std::string csv_of(const std::vector<SweepRecord>& r) {
  std::ostringstream out;
  emit_csv(out, r);
  return out.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "avgrew_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("AVGREW_CLI");
  if (!cli) return -1;
  const int status = std::system((std::string(cli) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Csv, RoundTrip) {
  std::vector<SweepRecord> recs{{16, 1, 0.125, 3.5, 8.0, 42, 1.5, true},
                                {16, 2, 1.0 / 3.0, INFINITY, INFINITY, 7, 0.0, false}};
  std::istringstream in(csv_of(recs));
  EXPECT_EQ(parse_csv(in), recs);
}

TEST(Csv, HeaderOnlyForEmptySweep) {
  EXPECT_EQ(csv_of({}), "m,seed,subopt,span_h,t_hit,K,ms,pessimism\n");
  std::istringstream in(csv_of({}));
  EXPECT_TRUE(parse_csv(in).empty());
}

TEST(Csv, NanRejected) {
  std::vector<SweepRecord> recs{{1, 1, NAN, 0, 0, 1, 0, true}};
  EXPECT_THROW(csv_of(recs), Error);
  std::istringstream bad("m,seed\n");
  EXPECT_THROW(parse_csv(bad), Error);
}

TEST(Slope, ExactLine) {
  EXPECT_NEAR(least_squares_slope({0, 1, 2, 3}, {1, -0.5, -2, -3.5}), -1.5, 1e-12);
  EXPECT_THROW(least_squares_slope({1}, {1}), ParameterOutOfRange);
}

TEST(Sweep, DeterministicBytes) {
  const auto cfg = small_sweep();
  EXPECT_EQ(csv_of(run_sweep(cfg).records), csv_of(run_sweep(cfg).records));
}

TEST(Sweep, ParallelEqualsSerial) {
  auto cfg = small_sweep();
  cfg.workers = 1;
  const auto serial = run_sweep(cfg);
  cfg.workers = 4;
  const auto parallel = run_sweep(cfg);
  EXPECT_EQ(serial.records, parallel.records);
  ASSERT_EQ(serial.records.size(), 6u);
  EXPECT_EQ(serial.records[0].m, 20u);
  EXPECT_EQ(serial.records[0].seed, 1u);
}

TEST(Sweep, CellMatchesDirectSolve) {
  auto cfg = small_sweep();
  cfg.m_grid = {40};
  cfg.seeds = {9};
  const auto res = run_sweep(cfg);
  ASSERT_EQ(res.records.size(), 1u);
  const auto mdp = small_mdp();
  SampleSizeFn sizes{CountTable::Constant(3, 2, 40)};
  SolverOptions opt;
  opt.gamma = 0.9;
  const auto out = solve(sample_dataset(mdp, sizes, 9), mdp.reward(), 0.1, opt);
  const double rho = enumerate_optimal(mdp).optimal_gain;
  EXPECT_DOUBLE_EQ(res.records[0].subopt, rho - evaluate_policy(mdp, out.policy).min_gain());
  EXPECT_EQ(res.records[0].K, out.iterations);
}

TEST(Sweep, LargeDatasetsAreNearOptimal) {
  auto cfg = small_sweep();
  cfg.m_grid = {200000};
  cfg.seeds = {1, 2};
  cfg.gamma = 0.99;
  for (const auto& r : run_sweep(cfg).records) EXPECT_LE(r.subopt, 1e-3);
}

TEST(Sweep, SummaryAndWarnings) {
  auto cfg = small_sweep();
  cfg.gamma.reset();
  const auto res = run_sweep(cfg);
  ASSERT_EQ(res.summary.size(), 2u);
  EXPECT_EQ(res.summary[0].m, 20u);
  EXPECT_TRUE(res.warnings.empty());
  const auto j = summary_to_json(res);
  EXPECT_TRUE(j.contains("slope_fit"));
}

TEST(Sweep, GeneratorFamilies) {
  SweepConfig cfg;
  cfg.instance.family = "figure2";
  cfg.instance.params = {{"T", 4}, {"patch_eps", 1e-3}};
  cfg.m_grid = {16};
  cfg.seeds = {1};
  cfg.gamma = 0.95;
  cfg.coverage = Coverage::Generator;
  cfg.record_time = false;
  const auto res = run_sweep(cfg);
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_NEAR(res.records[0].t_hit, 4.0, 1e-9);
  cfg.instance.family = "mdp";
  cfg.instance.mdp = small_mdp();
  EXPECT_THROW(run_sweep(cfg), SweepError);
}

TEST(Sweep, PartialCsvOnFailure) {
  auto cfg = small_sweep();
  cfg.max_scalar_updates = 10;
  const auto path = scratch("partial.csv");
  cfg.output = path.string();
  EXPECT_THROW(run_sweep(cfg), IterationBudget);
  std::ifstream in(path);
  EXPECT_NO_THROW(parse_csv(in));
}

TEST(Sweep, ConfigParsing) {
  const auto j = nlohmann::json::parse(R"({
    "instance": {"family": "recurrent", "params": {"S": 4, "T": 6}},
    "m_grid": [64, 128], "seeds": [0, 1], "delta": 0.2,
    "gamma_mode": {"fixed": 0.97}, "coverage": "generator", "record_time": false, "workers": 2
  })");
  const auto cfg = sweep_config_from_json(j);
  EXPECT_EQ(cfg.instance.family, "recurrent");
  EXPECT_EQ(cfg.m_grid, (std::vector<std::uint64_t>{64, 128}));
  EXPECT_DOUBLE_EQ(cfg.delta, 0.2);
  EXPECT_DOUBLE_EQ(*cfg.gamma, 0.97);
  EXPECT_EQ(cfg.coverage, Coverage::Generator);
  EXPECT_FALSE(cfg.record_time);
  EXPECT_EQ(*cfg.workers, 2u);
  EXPECT_FALSE(sweep_config_from_json(nlohmann::json::parse(R"({"instance":{},"m_grid":[1],"seeds":[1]})")).gamma);
  EXPECT_THROW(sweep_config_from_json(nlohmann::json::parse(R"({"instance":{},"m_grid":[1],"seeds":[1],
    "gamma_mode":"bogus"})")),
               ParameterOutOfRange);
  EXPECT_THROW(sweep_config_from_json(nlohmann::json::parse(R"({"m_grid":[1]})")), io::FormatError);
}

TEST(Workers, EnvironmentCap) {
  ::setenv("AVGREW_WORKERS", "2", 1);
  EXPECT_EQ(worker_count(100, 8), 2u);
  EXPECT_EQ(worker_count(1, 8), 1u);
  ::setenv("AVGREW_WORKERS", "junk", 1);
  EXPECT_EQ(worker_count(100, 3), 3u);
  ::unsetenv("AVGREW_WORKERS");
  EXPECT_EQ(worker_count(100, 5), 5u);
}

TEST(Props, DefaultRunPassesAndReplays) {
  const auto a = props::run_props(3, 20);
  EXPECT_TRUE(a.ok());
  for (const auto& r : a.results) EXPECT_EQ(r.failures, 0u) << r.name << ": " << r.counterexample.value_or("");
  const auto b = props::run_props(3, 20);
  ASSERT_EQ(a.results.size(), b.results.size());
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    EXPECT_EQ(a.results[i].name, b.results[i].name);
    EXPECT_EQ(a.results[i].trials, b.results[i].trials);
    EXPECT_EQ(a.results[i].counterexample, b.results[i].counterexample);
  }
  EXPECT_EQ(props::trial_seed(3, "monotonicity", 4), props::trial_seed(3, "monotonicity", 4));
  EXPECT_NE(props::trial_seed(3, "monotonicity", 4), props::trial_seed(3, "contraction", 4));
}

TEST(Props, SignFlipIsCaught) {
  props::PropsOptions opt;
  opt.mutation = props::Mutation::PenaltySignFlip;
  opt.only = {"operator"};
  EXPECT_FALSE(props::run_props(3, 100, opt).ok());
}

TEST(Cli, ExitCodes) {
  if (!std::getenv("AVGREW_CLI")) GTEST_SKIP() << "AVGREW_CLI not set";
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("bogus"), 2);
  EXPECT_EQ(run_cli("props --trials 0"), 2);
  EXPECT_EQ(run_cli("props --trials 5 --seed 1"), 0);
  EXPECT_EQ(run_cli("props --trials 200 --only monotonicity --mutation penalty-sign-flip"), 1);
  EXPECT_EQ(run_cli("gen --family nope"), 2);
}

TEST(Cli, GenSolveOracleRoundTrip) {
  if (!std::getenv("AVGREW_CLI")) GTEST_SKIP() << "AVGREW_CLI not set";
  const auto bundle = scratch("fig2.json"), sol = scratch("sol.json"), orc = scratch("orc.json");
  ASSERT_EQ(run_cli("gen --family figure2 --m 16 --T 4 -o " + bundle.string()), 0);
  ASSERT_EQ(run_cli("solve --mdp " + bundle.string() + " --sizes " + bundle.string() + " --seed 3 --gamma 0.9 -o " +
                    sol.string()),
            0);
  const auto s = io::read_json_file(sol.string());
  EXPECT_TRUE(s.contains("q_hat"));
  EXPECT_EQ(s.at("K").get<Index>(), iteration_count(40, 0.9));
  ASSERT_EQ(run_cli("oracle --mdp " + bundle.string() + " --policy " + bundle.string() + " -o " + orc.string()), 0);
  const auto o = io::read_json_file(orc.string());
  EXPECT_NEAR(o.at("t_hit").get<double>(), 4.0, 1e-9);
  EXPECT_EQ(run_cli("solve --mdp /nonexistent.json --sizes /nonexistent.json"), 2);
}
