#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmrl/baselines/controller.hpp"
#include "swarmrl/env/rewards.hpp"
#include "swarmrl/env/trajectory.hpp"
#include "swarmrl/policy/checkpoint.hpp"
#include "swarmrl/trpo/rollout.hpp"

namespace swarmrl::experiment {

using ControllerFactory = std::function<baselines::ControllerPtr()>;

struct EvalReport {
  /// Rendezvous: mean pairwise distance at t = 0..horizon, averaged over
  /// episodes.
  std::vector<double> mean_distance;
  /// Pursuit: fraction of episodes captured at or before t = 0..horizon.
  std::vector<double> capture;
  /// Undiscounted episode reward sums.
  std::vector<double> episode_returns;
  /// Embedding width of the evaluated policy (0 for classical controllers).
  long embedding_dim = 0;

  double captured_fraction() const { return capture.empty() ? 0.0 : capture.back(); }
  double mean_return() const {
    if (episode_returns.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(episode_returns.begin(), episode_returns.end(), 0.0) /
           static_cast<double>(episode_returns.size());
  }
};

/// Initial-state seed of evaluation episode k. Every policy compared under
/// the same base seed starts from the same configurations.
inline std::uint64_t episode_seed(std::uint64_t base, int k) {
  return trpo::derive_seed(base, 0xe7a1, static_cast<std::uint64_t>(k));
}

namespace detail {

struct EpisodeTrace {
  std::vector<double> distance;
  int capture_step = -1;
  double ret = 0.0;
};

/// One evaluation episode of `horizon` steps (pursuit episodes stop at
/// capture). The environment never resets mid-episode.
inline EpisodeTrace run_episode(baselines::Controller& ctl, env::TaskConfig task, const env::WorldConfig& world,
                                int horizon, std::uint64_t seed, bool track_distance,
                                env::TrajectoryWriter* traj = nullptr) {
  task.episode_length = std::max(task.episode_length, horizon);
  env::SwarmEnv e(task, world);
  e.reset(seed);
  ctl.reset();
  std::mt19937_64 rng(trpo::derive_seed(seed, 0xac7));
  EpisodeTrace tr;
  if (track_distance) tr.distance.push_back(env::mean_pairwise_distance(e.agents(), world));
  if (traj) traj->write(0, e.agents(), e.evaders(), 0.0, false, {});
  for (int t = 1; t <= horizon; ++t) {
    const auto actions = ctl.act(e, rng);
    const env::StepResult r = e.step(actions);
    tr.ret += r.reward;
    if (track_distance) tr.distance.push_back(env::mean_pairwise_distance(e.agents(), world));
    if (traj) traj->write(t, e.agents(), e.evaders(), r.reward, r.done, r.evader_caught);
    if (r.captured && task.task == env::TaskKind::pursuit) {
      tr.capture_step = t;
      break;
    }
  }
  return tr;
}

}  // namespace detail

/// Per-timestep mean pairwise distance over `episodes` episodes; the profile
/// has horizon + 1 entries.
inline EvalReport evaluate_mean_distance(const ControllerFactory& make, const env::TaskConfig& task,
                                         const env::WorldConfig& world, int episodes, int horizon, std::uint64_t seed,
                                         int threads = 1) {
  if (task.task != env::TaskKind::rendezvous) throw env::ConfigError("evaluate_mean_distance: rendezvous task only");
  if (episodes < 1 || horizon < 0) throw env::ConfigError("evaluate_mean_distance: episodes >= 1, horizon >= 0");
  std::vector<detail::EpisodeTrace> traces(static_cast<std::size_t>(episodes));
  trpo::parallel_for(episodes, threads, [&](int k) {
    auto ctl = make();
    traces[static_cast<std::size_t>(k)] = detail::run_episode(*ctl, task, world, horizon, episode_seed(seed, k), true);
  });
  EvalReport rep;
  rep.mean_distance.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (const auto& tr : traces) {
    for (std::size_t t = 0; t < tr.distance.size(); ++t) rep.mean_distance[t] += tr.distance[t];
    rep.episode_returns.push_back(tr.ret);
  }
  for (double& d : rep.mean_distance) d /= static_cast<double>(episodes);
  return rep;
}

/// Fraction of episodes whose evader was caught at or before each t.
inline EvalReport evaluate_capture(const ControllerFactory& make, const env::TaskConfig& task,
                                   const env::WorldConfig& world, int episodes, int horizon, std::uint64_t seed,
                                   int threads = 1) {
  if (task.task != env::TaskKind::pursuit) throw env::ConfigError("evaluate_capture: single-evader pursuit only");
  if (episodes < 1 || horizon < 0) throw env::ConfigError("evaluate_capture: episodes >= 1, horizon >= 0");
  std::vector<detail::EpisodeTrace> traces(static_cast<std::size_t>(episodes));
  trpo::parallel_for(episodes, threads, [&](int k) {
    auto ctl = make();
    traces[static_cast<std::size_t>(k)] = detail::run_episode(*ctl, task, world, horizon, episode_seed(seed, k), false);
  });
  EvalReport rep;
  std::vector<int> hits(static_cast<std::size_t>(horizon) + 1, 0);
  for (const auto& tr : traces) {
    if (tr.capture_step >= 0) ++hits[static_cast<std::size_t>(tr.capture_step)];
    rep.episode_returns.push_back(tr.ret);
  }
  rep.capture.resize(hits.size());
  int cum = 0;
  for (std::size_t t = 0; t < hits.size(); ++t) {
    cum += hits[t];
    rep.capture[t] = static_cast<double>(cum) / static_cast<double>(episodes);
  }
  return rep;
}

/// Episode returns only (multi-evader pursuit and anything else).
inline EvalReport evaluate_returns(const ControllerFactory& make, const env::TaskConfig& task,
                                   const env::WorldConfig& world, int episodes, int horizon, std::uint64_t seed,
                                   int threads = 1) {
  std::vector<detail::EpisodeTrace> traces(static_cast<std::size_t>(episodes));
  trpo::parallel_for(episodes, threads, [&](int k) {
    auto ctl = make();
    traces[static_cast<std::size_t>(k)] = detail::run_episode(*ctl, task, world, horizon, episode_seed(seed, k), false);
  });
  EvalReport rep;
  for (const auto& tr : traces) rep.episode_returns.push_back(tr.ret);
  return rep;
}

/// Task-appropriate report: distance profile, capture curve or returns.
inline EvalReport evaluate(const ControllerFactory& make, const env::TaskConfig& task, const env::WorldConfig& world,
                           int episodes, int horizon, std::uint64_t seed, int threads = 1) {
  switch (task.task) {
    case env::TaskKind::rendezvous: return evaluate_mean_distance(make, task, world, episodes, horizon, seed, threads);
    case env::TaskKind::pursuit: return evaluate_capture(make, task, world, episodes, horizon, seed, threads);
    case env::TaskKind::multi_pursuit: break;
  }
  return evaluate_returns(make, task, world, episodes, horizon, seed, threads);
}

inline void write_trajectory(std::ostream& os, baselines::Controller& ctl, const env::TaskConfig& task,
                             const env::WorldConfig& world, int horizon, std::uint64_t seed) {
  env::TrajectoryWriter w(os);
  detail::run_episode(ctl, task, world, horizon, seed, false, &w);
}

/// Runs a checkpoint at a different swarm size without retraining.
inline EvalReport cross_scale_eval(const policy::Checkpoint& ckpt, int n_agents, int episodes, int horizon,
                                   std::uint64_t seed, bool greedy = true, int threads = 1) {
  const auto& emb = ckpt.policy.net.spec().embedding;
  if (!emb.size_invariant() && n_agents - 1 > emb.max_neighbors)
    throw env::ConfigError("cross_scale_eval: the concat encoder was trained for at most " +
                           std::to_string(emb.max_neighbors) + " neighbours and cannot represent " +
                           std::to_string(n_agents - 1) + "; retrain at the new swarm size");
  env::TaskConfig task = ckpt.task;
  task.n_agents = n_agents;
  task.validate();
  const ControllerFactory make = [&] {
    return std::make_unique<baselines::PolicyController>(ckpt.policy, greedy);
  };
  EvalReport rep = evaluate(make, task, ckpt.world, episodes, horizon, seed, threads);
  rep.embedding_dim = static_cast<long>(ckpt.policy.net.embedding_dim());
  return rep;
}

/// Per-iteration median over the q trials with the highest final return.
inline std::vector<double> top_q_median(const std::vector<std::vector<double>>& curves, int q) {
  if (q < 1) throw std::invalid_argument("top_q_median: q must be >= 1");
  if (static_cast<int>(curves.size()) < q)
    throw std::invalid_argument("top_q_median: need at least " + std::to_string(q) + " trials, got " +
                                std::to_string(curves.size()));
  const std::size_t len = curves.front().size();
  for (const auto& c : curves)
    if (c.size() != len || c.empty()) throw std::invalid_argument("top_q_median: curves must have equal, non-zero length");
  auto final_of = [](const std::vector<double>& c) {
    return std::isnan(c.back()) ? -std::numeric_limits<double>::infinity() : c.back();
  };
  std::vector<std::size_t> idx(curves.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return final_of(curves[a]) > final_of(curves[b]); });
  idx.resize(static_cast<std::size_t>(q));
  std::vector<double> out(len);
  std::vector<double> col;
  for (std::size_t t = 0; t < len; ++t) {
    col.clear();
    for (std::size_t k : idx) col.push_back(curves[k][t]);
    std::sort(col.begin(), col.end());
    const std::size_t m = col.size();
    out[t] = m % 2 == 1 ? col[m / 2] : 0.5 * (col[m / 2 - 1] + col[m / 2]);
  }
  return out;
}

}  // namespace swarmrl::experiment
