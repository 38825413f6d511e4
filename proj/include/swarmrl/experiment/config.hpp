#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "swarmrl/policy/serialize.hpp"
#include "swarmrl/trpo/trainer.hpp"

namespace swarmrl::experiment {

using policy::Json;

struct EvalSettings {
  int episodes = 1000;
  /// 0: task default (rendezvous 1000, pursuit 1024).
  int horizon = 0;
  bool greedy = true;
  /// Episodes written to traj/*.jsonl.
  int trajectories = 1;

  int resolved_horizon(const env::TaskConfig& task) const {
    if (horizon > 0) return horizon;
    return task.task == env::TaskKind::rendezvous ? 1000 : 1024;
  }
};

struct ExperimentConfig {
  env::TaskConfig task;
  env::WorldConfig world;
  policy::NetworkSpec network;
  trpo::TrainerConfig trainer;
  EvalSettings eval;
  std::uint64_t seed = 0;
  int trials = 1;
  int top_q = 5;
  std::string out = "runs/default";

  std::vector<std::string> violations() const {
    std::vector<std::string> v = task.violations();
    try {
      world.validate();
    } catch (const std::exception& e) {
      v.push_back(e.what());
    }
    for (auto& s : trainer.violations()) v.push_back(std::move(s));
    const auto& emb = network.embedding;
    if ((emb.kind == policy::EmbeddingKind::histogram || emb.kind == policy::EmbeddingKind::rbf) &&
        task.features != env::FeatureSet::basic)
      v.push_back("embedding: histogram/RBF embeddings require the basic feature set");
    if (emb.kind == policy::EmbeddingKind::concat && emb.max_neighbors < task.n_agents - 1)
      v.push_back("embedding: concat needs max_neighbors >= n_agents - 1");
    if (emb.kind == policy::EmbeddingKind::concat && task.task == env::TaskKind::multi_pursuit &&
        emb.max_evaders < task.n_evaders)
      v.push_back("embedding: concat needs max_evaders >= n_evaders");
    if (emb.nn_layers.empty() && emb.uses_nn_features()) v.push_back("embedding: nn_layers must not be empty");
    if (emb.hist_bins < 1 || emb.rbf_centers < 1) v.push_back("embedding: bin/centre counts must be >= 1");
    if (!std::isfinite(emb.alpha)) v.push_back("embedding: alpha must be finite");
    if (eval.episodes < 1) v.push_back("eval: episodes must be >= 1");
    if (eval.horizon < 0) v.push_back("eval: horizon must be >= 0");
    if (eval.trajectories < 0) v.push_back("eval: trajectories must be >= 0");
    if (trials < 1) v.push_back("trials must be >= 1");
    if (top_q < 1) v.push_back("top_q must be >= 1");
    if (out.empty()) v.push_back("out must not be empty");
    return v;
  }

  void validate() const { policy::throw_if_errors(violations(), "invalid experiment configuration"); }
};

inline Json to_json(const trpo::TrainerConfig& t) {
  return {{"workers", t.workers},
          {"steps_per_worker", t.steps_per_worker},
          {"subsample_agents", t.subsample_agents},
          {"max_kl", t.max_kl},
          {"gamma", t.gamma},
          {"cg_iters", t.cg_iters},
          {"cg_damping", t.cg_damping},
          {"backtrack_steps", t.backtrack_steps},
          {"backtrack_factor", t.backtrack_factor},
          {"value_epochs", t.value.epochs},
          {"value_step_size", t.value.step_size},
          {"value_minibatch", t.value.minibatch},
          {"iterations", t.iterations},
          {"checkpoint_every", t.checkpoint_every},
          {"log_wall_time", t.log_wall_time}};
}

inline void from_json(const Json& j, trpo::TrainerConfig& t, std::vector<std::string>& errors) {
  policy::JsonReader r(j, "trainer", errors);
  r.get("workers", t.workers);
  r.get("steps_per_worker", t.steps_per_worker);
  r.get("subsample_agents", t.subsample_agents);
  r.get("max_kl", t.max_kl);
  r.get("gamma", t.gamma);
  r.get("cg_iters", t.cg_iters);
  r.get("cg_damping", t.cg_damping);
  r.get("backtrack_steps", t.backtrack_steps);
  r.get("backtrack_factor", t.backtrack_factor);
  r.get("value_epochs", t.value.epochs);
  r.get("value_step_size", t.value.step_size);
  r.get("value_minibatch", t.value.minibatch);
  r.get("iterations", t.iterations);
  r.get("checkpoint_every", t.checkpoint_every);
  r.get("log_wall_time", t.log_wall_time);
  r.finish();
}

inline Json to_json(const EvalSettings& e) {
  return {{"episodes", e.episodes}, {"horizon", e.horizon}, {"greedy", e.greedy}, {"trajectories", e.trajectories}};
}

inline void from_json(const Json& j, EvalSettings& e, std::vector<std::string>& errors) {
  policy::JsonReader r(j, "eval", errors);
  r.get("episodes", e.episodes);
  r.get("horizon", e.horizon);
  r.get("greedy", e.greedy);
  r.get("trajectories", e.trajectories);
  r.finish();
}

/// Canonical form: every field present, fixed key order. The seed is part of
/// the experiment, the thread count is not and is never serialised.
inline Json to_json(const ExperimentConfig& c) {
  return {{"version", 1},
          {"seed", c.seed},
          {"trials", c.trials},
          {"top_q", c.top_q},
          {"out", c.out},
          {"task", policy::to_json(c.task)},
          {"world", policy::to_json(c.world)},
          {"network", policy::to_json(c.network)},
          {"trainer", to_json(c.trainer)},
          {"eval", to_json(c.eval)}};
}

/// Parses a (possibly partial) config on top of the defaults. Unknown keys,
/// wrong types and violated constraints are all reported together.
inline ExperimentConfig config_from_json(const Json& j, ExperimentConfig base = {}) {
  std::vector<std::string> errors;
  policy::JsonReader r(j, "config", errors);
  int version = 1;
  r.get("version", version);
  if (version != 1) errors.push_back("config.version: unsupported version " + std::to_string(version));
  r.get("seed", base.seed);
  r.get("trials", base.trials);
  r.get("top_q", base.top_q);
  r.get("out", base.out);
  if (const Json* t = r.child("task")) policy::from_json(*t, base.task, errors);
  if (const Json* w = r.child("world")) policy::from_json(*w, base.world, errors);
  if (const Json* n = r.child("network")) policy::from_json(*n, base.network, errors);
  if (const Json* t = r.child("trainer")) from_json(*t, base.trainer, errors);
  if (const Json* e = r.child("eval")) from_json(*e, base.eval, errors);
  r.finish();
  policy::throw_if_errors(errors, "invalid experiment configuration");
  base.trainer.seed = base.seed;
  base.validate();
  return base;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw env::ConfigError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(is);
  } catch (const std::exception& e) {
    throw env::ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

/// OS threads for rollouts and evaluation, from SWARMRL_WORKERS (results do
/// not depend on it).
inline int threads_from_env(int fallback = 1) {
  const char* s = std::getenv("SWARMRL_WORKERS");
  if (!s || !*s) return fallback;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) throw env::ConfigError("SWARMRL_WORKERS must be an integer in [1, 1024]");
  return static_cast<int>(v);
}

}  // namespace swarmrl::experiment
