// Grid search over the PD gains of the consensus baseline on the 20-agent
// double-integrator rendezvous task. Prints a markdown table sorted by the
// mean pairwise distance at the final step.
//
//   tune_gains [--episodes 20] [--horizon 1000] [--seed 7]

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "swarmrl/experiment/config.hpp"
#include "swarmrl/experiment/metrics.hpp"

namespace ex = swarmrl::experiment;
namespace bl = swarmrl::baselines;

int main(int argc, char** argv) {
  int episodes = 20;
  int horizon = 1000;
  std::uint64_t seed = 7;
  std::vector<double> k1s{0.5, 1.0, 2.0};
  std::vector<double> k2s{0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 4.0};
  std::vector<double> d2s{0.5, 1.0, 1.25, 1.5, 1.75, 2.0};
  CLI::App app{"PD gain grid search for the consensus baseline"};
  app.add_option("--episodes", episodes);
  app.add_option("--horizon", horizon);
  app.add_option("--seed", seed);
  app.add_option("--k1", k1s);
  app.add_option("--k2", k2s);
  app.add_option("--d2", d2s);
  CLI11_PARSE(app, argc, argv);

  swarmrl::env::TaskConfig task;
  task.n_agents = 20;
  task.dynamics = swarmrl::env::Dynamics::double_integrator;
  const swarmrl::env::WorldConfig world;
  const int threads = ex::threads_from_env(swarmrl::trpo::default_threads());

  struct Row {
    bl::PdGains g;
    double final_distance;
    double at_200;
    int increases;
  };
  std::vector<Row> rows;
  for (double k1 : k1s)
    for (double k2 : k2s)
      for (double d2 : d2s) {
        const bl::PdGains g{k1, k2, d2};
        const auto rep = ex::evaluate_mean_distance([g] { return std::make_unique<bl::ConsensusController>(g); },
                                                    task, world, episodes, horizon, seed, threads);
        const auto& p = rep.mean_distance;
        int inc = 0;
        for (std::size_t t = 101; t < p.size(); ++t) inc += p[t] > p[t - 1] ? 1 : 0;
        rows.push_back({g, p.back(), p[std::min<std::size_t>(200, p.size() - 1)], inc});
      }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.final_distance != b.final_distance ? a.final_distance < b.final_distance : a.increases < b.increases;
  });
  std::cout << "| K1 | K2 | D2 | distance t=200 | distance t=" << horizon << " | increases after t=100 |\n";
  std::cout << "|---|---|---|---|---|---|\n";
  std::cout << std::setprecision(4);
  for (const auto& r : rows)
    std::cout << "| " << r.g.k1 << " | " << r.g.k2 << " | " << r.g.d2 << " | " << r.at_200 << " | " << r.final_distance
              << " | " << r.increases << " |\n";
  const auto& b = rows.front();
  std::cout << "\nbest: K1=" << b.g.k1 << " K2=" << b.g.k2 << " D2=" << b.g.d2 << "\n";
  return 0;
}
