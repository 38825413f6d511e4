#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "swarmrl/env/config.hpp"
#include "swarmrl/env/geometry.hpp"
#include "swarmrl/env/graph.hpp"
#include "swarmrl/env/kinematics.hpp"
#include "swarmrl/env/observation.hpp"
#include "swarmrl/env/rewards.hpp"
#include "swarmrl/env/voronoi.hpp"

namespace swarmrl::env {

struct StepResult {
  double reward = 0.0;
  bool done = false;
  bool captured = false;             // single-evader pursuit terminated by capture
  std::vector<bool> evader_caught;   // per evader, this step
};

/// The swarm MDP. Single owner; not thread-safe.
class SwarmEnv {
 public:
  SwarmEnv(TaskConfig task, WorldConfig world) : task_(std::move(task)), world_(world) {
    task_.validate();
    world_.validate();
    layout_ = observation_layout(task_, world_);
  }

  const TaskConfig& task() const { return task_; }
  const WorldConfig& world() const { return world_; }
  const ObservationLayout& layout() const { return layout_; }

  /// Uniform positions, uniform headings, zero velocities. Evaders are
  /// resampled until every pursuer is farther than d_t.
  void reset(std::uint64_t seed) {
    rng_.seed(seed);
    std::uniform_real_distribution<double> ux(0.0, world_.x_max);
    std::uniform_real_distribution<double> uy(0.0, world_.y_max);
    std::uniform_real_distribution<double> uh(0.0, kTwoPi);
    agents_.assign(static_cast<std::size_t>(task_.n_agents), AgentState{});
    for (auto& a : agents_) {
      a.x = ux(rng_);
      a.y = uy(rng_);
      a.phi = wrap_heading(uh(rng_));
    }
    evaders_.assign(static_cast<std::size_t>(task_.evader_count()), EvaderState{});
    for (auto& e : evaders_) e = spawn_evader();
    t_ = 0;
    refresh();
  }

  /// Places agents and evaders explicitly (tests, replay).
  void set_state(std::vector<AgentState> agents, std::vector<EvaderState> evaders, int t = 0) {
    if (agents.size() != static_cast<std::size_t>(task_.n_agents))
      throw ConfigError("set_state: expected " + std::to_string(task_.n_agents) + " agents");
    if (evaders.size() != static_cast<std::size_t>(task_.evader_count()))
      throw ConfigError("set_state: expected " + std::to_string(task_.evader_count()) + " evaders");
    agents_ = std::move(agents);
    evaders_ = std::move(evaders);
    t_ = t;
    refresh();
  }

  StepResult step(std::span<const Action> actions) {
    if (actions.size() != agents_.size())
      throw std::invalid_argument("env_step: got " + std::to_string(actions.size()) + " actions for " +
                                  std::to_string(agents_.size()) + " agents");
    std::vector<Action> clamped(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) clamped[i] = clamp_action(actions[i], task_);

    std::vector<Vec2> evader_vel(evaders_.size());
    for (std::size_t e = 0; e < evaders_.size(); ++e)
      evader_vel[e] = evader_action(evaders_[e], agents_, world_, task_.evader_speed(), task_.voronoi_grid);

    for (std::size_t i = 0; i < agents_.size(); ++i) agents_[i] = step_kinematics(agents_[i], clamped[i], world_, task_);
    for (std::size_t e = 0; e < evaders_.size(); ++e) {
      const Vec2 p = apply_boundary(evaders_[e].x + evader_vel[e].x * world_.dt,
                                    evaders_[e].y + evader_vel[e].y * world_.dt, world_);
      evaders_[e] = {p.x, p.y};
    }
    ++t_;

    StepResult r;
    r.evader_caught.assign(evaders_.size(), false);
    for (std::size_t e = 0; e < evaders_.size(); ++e)
      r.evader_caught[e] = closest_pursuer_distance(agents_, evaders_[e], world_) <= task_.capture_radius;
    const bool timeout = t_ >= task_.episode_length;
    switch (task_.task) {
      case TaskKind::rendezvous:
        r.reward = reward_rendezvous(agents_, clamped, task_, world_);
        r.done = timeout;
        break;
      case TaskKind::pursuit:
        r.reward = reward_pursuit(agents_, evaders_[0], task_, world_);
        r.captured = r.evader_caught[0];
        r.done = r.captured || timeout;
        break;
      case TaskKind::multi_pursuit:
        r.reward = reward_multi_evader(agents_, evaders_, task_, world_);
        for (std::size_t e = 0; e < evaders_.size(); ++e)
          if (r.evader_caught[e]) evaders_[e] = spawn_evader();
        r.done = timeout;
        break;
    }
    refresh();
    return r;
  }

  int t() const { return t_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const std::vector<EvaderState>& evaders() const { return evaders_; }
  const InteractionGraph& graph() const { return graph_; }
  const std::vector<double>& evader_paths() const { return paths_; }

  SwarmSnapshot snapshot() const { return {agents_, evaders_, &graph_, paths_}; }

  ObservationSet observe(std::size_t i) const { return env::observe(i, snapshot(), task_, world_, layout_); }

  std::vector<ObservationSet> observe_all() const {
    std::vector<ObservationSet> out;
    out.reserve(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) out.push_back(observe(i));
    return out;
  }

 private:
  EvaderState spawn_evader() {
    std::uniform_real_distribution<double> ux(0.0, world_.x_max);
    std::uniform_real_distribution<double> uy(0.0, world_.y_max);
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const EvaderState e{ux(rng_), uy(rng_)};
      if (agents_.empty() || closest_pursuer_distance(agents_, e, world_) > task_.capture_radius) return e;
    }
    throw std::runtime_error("could not place an evader away from all pursuers");
  }

  void refresh() {
    graph_ = build_graph(agents_, task_.observability, task_.comm_radius, world_);
    paths_.clear();
    if (task_.task == TaskKind::pursuit && task_.features == FeatureSet::comm)
      paths_ = shortest_paths_to_evader(agents_, graph_, evaders_[0], task_.obs_radius, world_);
  }

  TaskConfig task_;
  WorldConfig world_;
  ObservationLayout layout_;
  std::mt19937_64 rng_;
  std::vector<AgentState> agents_;
  std::vector<EvaderState> evaders_;
  InteractionGraph graph_;
  std::vector<double> paths_;
  int t_ = 0;
};

}  // namespace swarmrl::env
