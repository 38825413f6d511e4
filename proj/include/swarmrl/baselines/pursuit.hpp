#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "swarmrl/baselines/consensus.hpp"
#include "swarmrl/env/voronoi.hpp"

namespace swarmrl::baselines {

/// Point a pursuer heads for in the Voronoi heuristic. `shared_boundary`
/// is false when its cell does not touch the evader's and the target is the
/// evader itself.
struct PursuitTarget {
  Vec2 offset;  // target minus pursuer, minimal image
  bool shared_boundary = false;
  std::size_t boundary_samples = 0;
};

/// Midpoint of the boundary between pursuer i's cell and the evader's cell,
/// estimated on a resolution² sample grid: the mean of the midpoints of all
/// 4-neighbour sample pairs that straddle the two cells. Equidistant samples
/// go to the evader.
inline PursuitTarget voronoi_pursuit_target(std::size_t i, std::span<const AgentState> pursuers,
                                            const env::EvaderState& evader, const env::WorldConfig& world,
                                            int resolution) {
  if (pursuers.size() == 1) {
    // Lone pursuer: its cell is everything but the evader's, so chase directly.
    return {env::displacement(env::position(pursuers[0]), env::position(evader), world), false, 0};
  }
  std::vector<Vec2> sites;
  sites.reserve(pursuers.size() + 1);
  sites.push_back(env::position(evader));
  for (const auto& p : pursuers) sites.push_back(env::position(p));
  const std::vector<int> lab = env::label_voronoi(sites, world, resolution);
  const env::SampleGrid grid{resolution, &world};
  const bool torus = world.boundary == env::Boundary::toroidal;
  const int me = static_cast<int>(i) + 1;
  const Vec2 self = env::position(pursuers[i]);
  auto at = [&](int ix, int iy) { return lab[static_cast<std::size_t>(iy) * resolution + static_cast<std::size_t>(ix)]; };

  double sx = 0.0;
  double sy = 0.0;
  std::size_t count = 0;
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      if (at(ix, iy) != me) continue;
      const int nbrs[4][2] = {{ix + 1, iy}, {ix - 1, iy}, {ix, iy + 1}, {ix, iy - 1}};
      for (const auto& n : nbrs) {
        int jx = n[0];
        int jy = n[1];
        if (jx < 0 || jx >= resolution || jy < 0 || jy >= resolution) {
          if (!torus) continue;
          jx = (jx + resolution) % resolution;
          jy = (jy + resolution) % resolution;
        }
        if (at(jx, jy) != 0) continue;
        const Vec2 a = env::displacement(self, grid.point(ix, iy), world);
        const Vec2 b = env::displacement(self, grid.point(jx, jy), world);
        sx += 0.5 * (a.x + b.x);
        sy += 0.5 * (a.y + b.y);
        ++count;
      }
    }
  }
  PursuitTarget t;
  t.boundary_samples = count;
  if (count > 0) {
    t.shared_boundary = true;
    t.offset = {sx / static_cast<double>(count), sy / static_cast<double>(count)};
  } else {
    t.offset = env::displacement(self, env::position(evader), world);
  }
  return t;
}

/// Full-speed move toward the shared-boundary midpoint (or the evader when
/// the cells are not adjacent), tracked with the single-integrator mapping.
inline Action voronoi_pursuit_action(std::size_t i, std::span<const AgentState> pursuers, const env::EvaderState& evader,
                                     const env::WorldConfig& world, double speed, const PdGains& g,
                                     const env::TaskConfig& task, int resolution = 128) {
  const PursuitTarget t = voronoi_pursuit_target(i, pursuers, evader, world, resolution);
  const double n = t.offset.norm();
  const Vec2 desired = n > 0.0 ? t.offset * (speed / n) : Vec2{0.0, 0.0};
  return track(pursuers[i], desired, g, task);
}

/// Heads straight for the evader at `speed`.
inline Action direct_chase_action(const AgentState& s, const env::EvaderState& evader, const env::WorldConfig& world,
                                  double speed, const PdGains& g, const env::TaskConfig& task) {
  const Vec2 d = env::displacement(env::position(s), env::position(evader), world);
  const double n = d.norm();
  return track(s, n > 0.0 ? d * (std::min(speed, n) / n) : Vec2{0.0, 0.0}, g, task);
}

/// Ring slots around the evader: pursuers sorted by bearing from the evader
/// get evenly spaced slots at `radius`, starting at the first pursuer's
/// bearing. Returns each pursuer's target offset (minimal image).
inline std::vector<Vec2> surround_targets(std::span<const AgentState> pursuers, const env::EvaderState& evader,
                                          const env::WorldConfig& world, double radius) {
  const std::size_t n = pursuers.size();
  const Vec2 e = env::position(evader);
  std::vector<double> ang(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 d = env::displacement(e, env::position(pursuers[k]), world);
    ang[k] = std::atan2(d.y, d.x);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ang[a] < ang[b]; });
  std::vector<Vec2> out(n);
  const double base = n > 0 ? ang[order[0]] : 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double a = base + env::kTwoPi * static_cast<double>(r) / static_cast<double>(n);
    const std::size_t k = order[r];
    const Vec2 slot{e.x + radius * std::cos(a), e.y + radius * std::sin(a)};
    out[k] = env::displacement(env::position(pursuers[k]), slot, world);
  }
  return out;
}

}  // namespace swarmrl::baselines
