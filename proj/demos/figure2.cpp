// Solves the two-state stay/leave example at growing dataset sizes and prints
// how the returned policy compares with the optimum.
#include <cstdio>

#include "avgrew/avgrew.hpp"

int main() {
  using namespace avgrew;
  const double T = 8.0;
  for (double m : {16.0, 256.0, 4096.0}) {
    const auto inst = build_figure2(m, T);
    const auto mdp = unichain_patch(inst.mdp, 1.0 / (m * m));
    const auto best = enumerate_optimal(mdp);
    const auto data = sample_dataset(mdp, inst.sizes, 7);
    SolverOptions opt;
    opt.gamma = 0.99;
    const auto out = solve(data, mdp.reward(), 0.1, opt);
    const auto ev = evaluate_policy(mdp, out.policy);
    std::printf("m=%-6.0f policy=(%zu,%zu) gain=%.6f optimal=%.6f K=%zu\n", m, out.policy.action[0],
                out.policy.action[1], ev.min_gain(), best.optimal_gain, out.iterations);
  }
}
