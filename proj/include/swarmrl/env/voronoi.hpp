#pragma once

#include <limits>
#include <span>
#include <vector>

#include "swarmrl/env/config.hpp"
#include "swarmrl/env/geometry.hpp"

namespace swarmrl::env {

/// Regular grid of sample points (cell midpoints) covering the world, used
/// for Monte-Carlo estimates of Voronoi cell areas and centroids.
struct SampleGrid {
  int resolution = 128;
  const WorldConfig* world = nullptr;

  double step_x() const { return world->x_max / resolution; }
  double step_y() const { return world->y_max / resolution; }
  Vec2 point(int ix, int iy) const { return {(ix + 0.5) * step_x(), (iy + 0.5) * step_y()}; }
};

inline double squared_distance(Vec2 a, Vec2 b, const WorldConfig& world) {
  const Vec2 d = displacement(a, b, world);
  return d.x * d.x + d.y * d.y;
}

/// Labels every sample point with the index of its nearest site; ties go to
/// the lower index. Result is row-major over (iy, ix).
inline std::vector<int> label_voronoi(std::span<const Vec2> sites, const WorldConfig& world, int resolution) {
  const SampleGrid grid{resolution, &world};
  std::vector<int> labels(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution), -1);
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      const Vec2 p = grid.point(ix, iy);
      double best = std::numeric_limits<double>::infinity();
      int arg = -1;
      for (std::size_t s = 0; s < sites.size(); ++s) {
        const double d = squared_distance(p, sites[s], world);
        if (d < best) {
          best = d;
          arg = static_cast<int>(s);
        }
      }
      labels[static_cast<std::size_t>(iy) * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(ix)] = arg;
    }
  }
  return labels;
}

struct CellEstimate {
  Vec2 centroid_offset;  // centroid minus the site, minimal image
  std::size_t samples = 0;
};

/// Estimates the evader's Voronoi cell against the pursuers. Sample points
/// equidistant to the evader and a pursuer belong to the pursuer.
inline CellEstimate evader_cell(const EvaderState& evader, std::span<const AgentState> pursuers,
                                const WorldConfig& world, int resolution) {
  const SampleGrid grid{resolution, &world};
  const Vec2 e = position(evader);
  double sx = 0.0;
  double sy = 0.0;
  std::size_t count = 0;
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      const Vec2 p = grid.point(ix, iy);
      const Vec2 de = displacement(e, p, world);
      const double d2 = de.x * de.x + de.y * de.y;
      bool mine = true;
      for (const auto& s : pursuers) {
        if (squared_distance(p, position(s), world) <= d2) {
          mine = false;
          break;
        }
      }
      if (mine) {
        sx += de.x;
        sy += de.y;
        ++count;
      }
    }
  }
  CellEstimate est;
  est.samples = count;
  if (count > 0) est.centroid_offset = {sx / static_cast<double>(count), sy / static_cast<double>(count)};
  return est;
}

/// Velocity of the Voronoi evader: heads for the centroid of its own cell at
/// `speed`, without overshooting the centroid within one step. Returns zero
/// when the centroid coincides with the evader (tolerance 1e-9).
inline Vec2 evader_action(const EvaderState& evader, std::span<const AgentState> pursuers, const WorldConfig& world,
                          double speed, int resolution = 128) {
  const CellEstimate cell = evader_cell(evader, pursuers, world, resolution);
  const double dist = cell.centroid_offset.norm();
  if (cell.samples == 0 || dist <= 1e-9) return {0.0, 0.0};
  const double v = std::min(speed, dist / world.dt);
  return cell.centroid_offset * (v / dist);
}

}  // namespace swarmrl::env
