// swarmrl: train, evaluate and compare swarm policies.
//
//   swarmrl train    --task rendezvous --agents 10 --iters 200 --out runs/rdv
//   swarmrl eval     --checkpoint runs/rdv/checkpoints/final.ckpt --agents 50 --out runs/rdv50
//   swarmrl baseline --controller consensus --dynamics double --agents 20 --out runs/pd
//   swarmrl aggregate --in runs/a/curve.csv runs/b/curve.csv --top-q 2 --out agg.csv
//
// Worker threads come from SWARMRL_WORKERS (default: all cores).

#include <malloc.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swarmrl/experiment/runner.hpp"

namespace ex = swarmrl::experiment;
namespace env = swarmrl::env;
namespace policy = swarmrl::policy;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> task, dynamics, obs, embedding, observability, boundary;
  std::optional<int> agents, evaders, iters, trials, episodes, horizon, rollouts, steps, subsample, top_q;
  std::optional<double> alpha, dc, d_o;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool print_config = false;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON experiment config (flags override it)");
  app->add_option("--task", o.task, "rendezvous | pursuit | multi-pursuit");
  app->add_option("--agents", o.agents, "number of agents N");
  app->add_option("--evaders", o.evaders, "number of evaders (multi-pursuit)");
  app->add_option("--dynamics", o.dynamics, "single | double");
  app->add_option("--obs", o.obs, "feature set: basic | extended | comm");
  app->add_option("--observability", o.observability, "global | local");
  app->add_option("--boundary", o.boundary, "closed | toroidal");
  app->add_option("--embedding", o.embedding, "nn-mean | hist | rbf | softmax | max | concat | moments");
  app->add_option("--alpha", o.alpha, "softmax pooling temperature");
  app->add_option("--dc", o.dc, "communication radius d_c");
  app->add_option("--do", o.d_o, "evader observation radius d_o");
  app->add_option("--iters", o.iters, "TRPO iterations");
  app->add_option("--trials", o.trials, "independent training trials");
  app->add_option("--top-q", o.top_q, "trials kept by the top-q median");
  app->add_option("--rollouts", o.rollouts, "rollout workers per iteration");
  app->add_option("--steps", o.steps, "environment steps per rollout worker");
  app->add_option("--subsample", o.subsample, "agents kept per worker");
  app->add_option("--episodes", o.episodes, "evaluation episodes");
  app->add_option("--horizon", o.horizon, "evaluation horizon (0 = task default)");
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--out", o.out, "output directory");
  app->add_flag("--print-config", o.print_config, "print the canonical config and exit");
}

ex::ExperimentConfig resolve(const Overrides& o) {
  ex::ExperimentConfig c;
  policy::Json j = policy::Json::object();
  if (!o.config.empty()) {
    std::ifstream is(o.config);
    if (!is) throw env::ConfigError("cannot open config " + o.config);
    j = policy::Json::parse(is);
  }
  auto set = [&](const char* sect, const char* key, const auto& v) {
    if (v) j[sect][key] = *v;
  };
  set("task", "task", o.task);
  set("task", "n_agents", o.agents);
  set("task", "n_evaders", o.evaders);
  set("task", "dynamics", o.dynamics);
  set("task", "features", o.obs);
  set("task", "observability", o.observability);
  set("task", "comm_radius", o.dc);
  set("task", "obs_radius", o.d_o);
  set("world", "boundary", o.boundary);
  if (o.embedding) j["network"]["embedding"]["kind"] = *o.embedding;
  if (o.alpha) j["network"]["embedding"]["alpha"] = *o.alpha;
  set("trainer", "iterations", o.iters);
  set("trainer", "workers", o.rollouts);
  set("trainer", "steps_per_worker", o.steps);
  set("trainer", "subsample_agents", o.subsample);
  set("eval", "episodes", o.episodes);
  set("eval", "horizon", o.horizon);
  if (o.trials) j["trials"] = *o.trials;
  if (o.top_q) j["top_q"] = *o.top_q;
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["out"] = *o.out;
  // Concat needs a fixed neighbour count; default it to N - 1.
  if (j.contains("network") && j["network"].contains("embedding") &&
      j["network"]["embedding"].value("kind", "") == "concat" && !j["network"]["embedding"].contains("max_neighbors")) {
    const int n = j.contains("task") ? j["task"].value("n_agents", c.task.n_agents) : c.task.n_agents;
    j["network"]["embedding"]["max_neighbors"] = n - 1;
    j["network"]["embedding"]["max_evaders"] = j.contains("task") ? j["task"].value("n_evaders", 1) : 1;
  }
  return ex::config_from_json(j, c);
}

}  // namespace

int main(int argc, char** argv) {
  // Large Eigen temporaries are reused instead of being mapped and zeroed on
  // every allocation.
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"Multi-agent swarm reinforcement learning"};
  app.require_subcommand(1);

  Overrides train_o, eval_o, base_o;
  auto* train = app.add_subcommand("train", "train a shared policy with TRPO");
  add_common(train, train_o);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint (any swarm size for size-invariant encoders)");
  add_common(eval, eval_o);
  std::string checkpoint;
  bool stochastic = false;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_flag("--stochastic", stochastic, "sample actions instead of using the mean");

  auto* base = app.add_subcommand("baseline", "evaluate a classical controller");
  add_common(base, base_o);
  std::string controller = "consensus";
  base->add_option("--controller", controller, "zero | random | consensus | voronoi | chase | surround");

  auto* agg = app.add_subcommand("aggregate", "top-q median of several learning curves");
  std::vector<std::string> inputs;
  int agg_q = 5;
  std::string agg_out;
  agg->add_option("--in", inputs, "curve.csv files or run directories")->required();
  agg->add_option("--top-q", agg_q, "number of best trials");
  agg->add_option("--out", agg_out, "output CSV (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    const int threads = ex::threads_from_env(swarmrl::trpo::default_threads());
    if (*train) {
      const auto cfg = resolve(train_o);
      if (train_o.print_config) {
        std::cout << ex::to_json(cfg).dump(2) << "\n";
        return 0;
      }
      const auto res = ex::run_train(cfg, threads, &std::cerr);
      std::cout << "wrote " << cfg.out << " (" << res.trials.size() << " trial(s))\n";
    } else if (*eval) {
      auto cfg = resolve(eval_o);
      if (!eval_o.obs || !eval_o.task || !eval_o.dynamics || !eval_o.observability || !eval_o.boundary) {
        // Unspecified task settings default to the checkpoint's.
        const auto ck = policy::load_checkpoint(checkpoint);
        if (!eval_o.task) cfg.task.task = ck.task.task;
        if (!eval_o.obs) cfg.task.features = ck.task.features;
        if (!eval_o.dynamics) cfg.task.dynamics = ck.task.dynamics;
        if (!eval_o.observability) cfg.task.observability = ck.task.observability;
        if (!eval_o.boundary) cfg.world = ck.world;
        if (!eval_o.agents) cfg.task.n_agents = ck.task.n_agents;
        cfg.task.relative_velocity = ck.task.relative_velocity;
        cfg.validate();
      }
      cfg.eval.greedy = !stochastic;
      if (eval_o.print_config) {
        std::cout << ex::to_json(cfg).dump(2) << "\n";
        return 0;
      }
      const auto rep = ex::run_eval(cfg, checkpoint, threads);
      std::cout << "mean return " << rep.mean_return() << "; wrote " << cfg.out << "\n";
    } else if (*base) {
      const auto cfg = resolve(base_o);
      if (base_o.print_config) {
        std::cout << ex::to_json(cfg).dump(2) << "\n";
        return 0;
      }
      const auto rep = ex::run_baseline(cfg, controller, threads);
      std::cout << controller << ": mean return " << rep.mean_return();
      if (!rep.capture.empty()) std::cout << ", captured " << rep.captured_fraction();
      if (!rep.mean_distance.empty()) std::cout << ", final mean distance " << rep.mean_distance.back();
      std::cout << "; wrote " << cfg.out << "\n";
    } else if (*agg) {
      std::vector<std::filesystem::path> files;
      for (const auto& s : inputs) {
        std::filesystem::path p(s);
        files.push_back(std::filesystem::is_directory(p) ? p / "curve.csv" : p);
      }
      const auto med = ex::aggregate_curves(files, agg_q);
      if (agg_out.empty()) {
        ex::write_aggregate(std::cout, med);
      } else {
        auto os = ex::open_out(agg_out);
        ex::write_aggregate(os, med);
      }
    }
  } catch (const env::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
