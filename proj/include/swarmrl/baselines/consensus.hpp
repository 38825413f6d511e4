#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "swarmrl/env/config.hpp"
#include "swarmrl/env/geometry.hpp"
#include "swarmrl/env/graph.hpp"
#include "swarmrl/env/kinematics.hpp"
#include "swarmrl/numkit/types.hpp"

namespace swarmrl::baselines {

using env::Action;
using env::AgentState;
using env::Vec2;
using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

struct PdGains {
  double k1 = 2.0;
  double k2 = 4.0;
  double d2 = 1.0;

  bool valid() const { return k1 > 0.0 && k2 > 0.0 && d2 > 0.0; }
  bool operator==(const PdGains&) const = default;
};

/// Result of tools/tune_gains on the 20-agent double-integrator rendezvous
/// setup (see docs/gain_search.md).
inline constexpr PdGains kTunedGains{2.0, 1.25, 1.5};

/// ẋ_i = −Σ_{j∈N(i)} (x_i − x_j), minimal-image displacements.
inline Vec2 consensus_velocity(const Vec2& self, std::span<const Vec2> neighbors, const env::WorldConfig& world) {
  Vec2 v{0.0, 0.0};
  for (const auto& p : neighbors) v = v + env::displacement(self, p, world);
  return v;
}

/// Heading and speed targets from a desired planar velocity. A zero velocity
/// keeps the current heading.
struct Targets {
  double speed = 0.0;
  double heading_error = 0.0;  // wrapped to (−π, π]
};

inline Targets tracking_targets(const AgentState& s, const Vec2& desired) {
  const double speed = desired.norm();
  if (speed == 0.0) return {0.0, 0.0};
  return {speed, env::wrap_angle(std::atan2(desired.y, desired.x) - s.phi)};
}

/// a_v = K1 (v_d − v), a_ω = K2 (φ_d − φ) + D2 (ω_d − ω) with v_d = ‖ẋ‖ and
/// ω_d = 0, clamped to the acceleration bounds.
inline Action pd_control(const AgentState& s, const Vec2& desired, const PdGains& g, const env::TaskConfig& task) {
  const Targets t = tracking_targets(s, desired);
  const Action raw{g.k1 * (t.speed - s.v), g.k2 * t.heading_error - g.d2 * s.omega};
  env::TaskConfig dbl = task;
  dbl.dynamics = env::Dynamics::double_integrator;
  return env::clamp_action(raw, dbl);
}

/// Single-integrator tracking: v = ‖ẋ‖, ω = K2 · heading error, clamped.
inline Action velocity_control(const AgentState& s, const Vec2& desired, const PdGains& g, const env::TaskConfig& task) {
  const Targets t = tracking_targets(s, desired);
  env::TaskConfig single = task;
  single.dynamics = env::Dynamics::single_integrator;
  return env::clamp_action({t.speed, g.k2 * t.heading_error}, single);
}

inline Action track(const AgentState& s, const Vec2& desired, const PdGains& g, const env::TaskConfig& task) {
  return task.dynamics == env::Dynamics::double_integrator ? pd_control(s, desired, g, task)
                                                           : velocity_control(s, desired, g, task);
}

/// Consensus protocol over the interaction graph, mapped to the agent's
/// dynamics. Agents without neighbours hold position (zero desired velocity).
inline Action consensus_pd_policy(std::size_t i, std::span<const AgentState> states, const env::InteractionGraph& graph,
                                  const PdGains& g, const env::TaskConfig& task, const env::WorldConfig& world) {
  if (i >= states.size() || i >= graph.neighbors.size()) throw std::out_of_range("consensus_pd_policy: agent index");
  std::vector<Vec2> nb;
  nb.reserve(graph.neighbors[i].size());
  for (int j : graph.neighbors[i]) nb.push_back(env::position(states[static_cast<std::size_t>(j)]));
  const Vec2 desired = consensus_velocity(env::position(states[i]), nb, world);
  return track(states[i], desired, g, task);
}

}  // namespace swarmrl::baselines
