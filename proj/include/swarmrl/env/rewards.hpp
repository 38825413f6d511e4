#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "swarmrl/env/config.hpp"
#include "swarmrl/env/geometry.hpp"

namespace swarmrl::env {

/// Cut-off used by the rendezvous reward: d_c under local observability,
/// max(x_max, y_max) under global observability.
inline double rendezvous_cutoff(const TaskConfig& task, const WorldConfig& world) {
  return task.local() ? task.comm_radius : std::max(world.x_max, world.y_max);
}

/// α Σ_{i<j} min(d_ij, d_c) + β ‖a‖ with α = −(N(N−1)/2 · d_c)^{-1}; ‖a‖ is
/// the Euclidean norm of the joint action.
inline double reward_rendezvous(std::span<const AgentState> states, std::span<const Action> actions,
                                const TaskConfig& task, const WorldConfig& world) {
  const std::size_t n = states.size();
  const double cutoff = rendezvous_cutoff(task, world);
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      sum += std::min(distance(position(states[i]), position(states[j]), world), cutoff);
  double sq = 0.0;
  for (const auto& a : actions) sq += a.linear * a.linear + a.angular * a.angular;
  return -sum / (pairs * cutoff) + task.action_penalty * std::sqrt(sq);
}

inline double closest_pursuer_distance(std::span<const AgentState> states, const EvaderState& e,
                                       const WorldConfig& world) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : states) best = std::min(best, distance(position(s), position(e), world));
  return best;
}

/// Saturation distance of the pursuit reward: d_o locally, the largest
/// possible distance globally.
inline double pursuit_saturation(const TaskConfig& task, const WorldConfig& world) {
  return task.local() ? task.obs_radius : world.max_distance();
}

/// −min(d_min, d_o) / d_o.
inline double reward_pursuit(std::span<const AgentState> states, const EvaderState& evader, const TaskConfig& task,
                             const WorldConfig& world) {
  const double sat = pursuit_saturation(task, world);
  return -std::min(closest_pursuer_distance(states, evader, world), sat) / sat;
}

/// Number of evaders whose closest pursuer is within d_t.
inline double reward_multi_evader(std::span<const AgentState> states, std::span<const EvaderState> evaders,
                                  const TaskConfig& task, const WorldConfig& world) {
  int caught = 0;
  for (const auto& e : evaders)
    if (closest_pursuer_distance(states, e, world) <= task.capture_radius) ++caught;
  return caught;
}

inline double mean_pairwise_distance(std::span<const AgentState> states, const WorldConfig& world) {
  const std::size_t n = states.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum += distance(position(states[i]), position(states[j]), world);
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace swarmrl::env
