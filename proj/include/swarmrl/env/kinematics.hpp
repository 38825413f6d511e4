#pragma once

#include <algorithm>
#include <cmath>

#include "swarmrl/env/config.hpp"
#include "swarmrl/env/geometry.hpp"

namespace swarmrl::env {

/// Clamps an action to the bounds of the task's dynamics. Non-finite
/// components become 0.
inline Action clamp_action(const Action& a, const TaskConfig& task) {
  const bool single = task.dynamics == Dynamics::single_integrator;
  const double lin = single ? task.v_max : task.a_v_max;
  const double ang = single ? task.omega_max : task.a_omega_max;
  auto c = [](double v, double b) { return std::isfinite(v) ? std::clamp(v, -b, b) : 0.0; };
  return {c(a.linear, lin), c(a.angular, ang)};
}

/// One Euler step of the unicycle model. Double-integrator agents update
/// (and clamp) their velocities first and move with the new values.
inline AgentState step_kinematics(const AgentState& s, const Action& a, const WorldConfig& world,
                                  const TaskConfig& task) {
  AgentState n = s;
  const double dt = world.dt;
  if (task.dynamics == Dynamics::single_integrator) {
    n.v = a.linear;
    n.omega = a.angular;
  } else {
    n.v = std::clamp(s.v + a.linear * dt, -task.v_max, task.v_max);
    n.omega = std::clamp(s.omega + a.angular * dt, -task.omega_max, task.omega_max);
  }
  const Vec2 p = apply_boundary(s.x + n.v * std::cos(s.phi) * dt, s.y + n.v * std::sin(s.phi) * dt, world);
  n.x = p.x;
  n.y = p.y;
  n.phi = wrap_heading(s.phi + n.omega * dt);
  return n;
}

}  // namespace swarmrl::env
