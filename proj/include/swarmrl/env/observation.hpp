#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "swarmrl/env/config.hpp"
#include "swarmrl/env/geometry.hpp"
#include "swarmrl/env/graph.hpp"

namespace swarmrl::env {

enum class NeighborField { distance, bearing, orientation, rel_vx, rel_vy, neighbor_count, neighbor_path };
enum class LocalField { wall_distance, wall_bearing, speed, turn_rate, evader_distance, evader_bearing, own_count,
                        own_path };
enum class EvaderField { distance, bearing };

inline std::string_view to_string(NeighborField f) {
  switch (f) {
    case NeighborField::distance: return "d";
    case NeighborField::bearing: return "bearing";
    case NeighborField::orientation: return "orientation";
    case NeighborField::rel_vx: return "dv_x";
    case NeighborField::rel_vy: return "dv_y";
    case NeighborField::neighbor_count: return "nbr_count";
    case NeighborField::neighbor_path: return "nbr_path";
  }
  return "?";
}

inline std::string_view to_string(EvaderField f) { return f == EvaderField::distance ? "distance" : "bearing"; }

inline std::string_view to_string(LocalField f) {
  switch (f) {
    case LocalField::wall_distance: return "d_wall";
    case LocalField::wall_bearing: return "bearing_wall";
    case LocalField::speed: return "v";
    case LocalField::turn_rate: return "omega";
    case LocalField::evader_distance: return "d_evader";
    case LocalField::evader_bearing: return "bearing_evader";
    case LocalField::own_count: return "own_count";
    case LocalField::own_path: return "own_path";
  }
  return "?";
}

/// Which fields an observation carries, in order.
struct ObservationLayout {
  std::vector<NeighborField> neighbor;
  std::vector<LocalField> local;
  std::vector<EvaderField> evader;  // per-evader set (multi-evader task only)

  bool operator==(const ObservationLayout&) const = default;
};

inline ObservationLayout observation_layout(const TaskConfig& task, const WorldConfig& world) {
  ObservationLayout lay;
  lay.neighbor = {NeighborField::distance, NeighborField::bearing};
  if (task.features != FeatureSet::basic) lay.neighbor.push_back(NeighborField::orientation);
  if (task.relative_velocity) {
    lay.neighbor.push_back(NeighborField::rel_vx);
    lay.neighbor.push_back(NeighborField::rel_vy);
  }
  if (task.features == FeatureSet::comm)
    lay.neighbor.push_back(task.task == TaskKind::rendezvous ? NeighborField::neighbor_count
                                                             : NeighborField::neighbor_path);

  if (world.boundary == Boundary::closed) lay.local = {LocalField::wall_distance, LocalField::wall_bearing};
  if (task.dynamics == Dynamics::double_integrator) {
    lay.local.push_back(LocalField::speed);
    lay.local.push_back(LocalField::turn_rate);
  }
  if (task.task == TaskKind::pursuit) {
    lay.local.push_back(LocalField::evader_distance);
    lay.local.push_back(LocalField::evader_bearing);
  }
  if (task.features == FeatureSet::comm)
    lay.local.push_back(task.task == TaskKind::rendezvous ? LocalField::own_count : LocalField::own_path);
  if (task.task == TaskKind::multi_pursuit) lay.evader = {EvaderField::distance, EvaderField::bearing};
  return lay;
}

/// Local features plus the unordered neighbour (and evader) sets of one agent.
struct ObservationSet {
  Eigen::VectorXd local;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> neighbors;  // |N(i)| x dim
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> evaders;    // visible evaders x 2
};

/// Read-only view of the swarm needed to build observations.
struct SwarmSnapshot {
  std::span<const AgentState> agents;
  std::span<const EvaderState> evaders;
  const InteractionGraph* graph = nullptr;
  /// Shortest-path lengths to the (first) evader, required for comm pursuit.
  std::span<const double> evader_paths;
};

inline ObservationSet observe(std::size_t i, const SwarmSnapshot& snap, const TaskConfig& task,
                              const WorldConfig& world, const ObservationLayout& layout) {
  const auto& me = snap.agents[i];
  const auto& nbrs = snap.graph->neighbors[i];
  const bool needs_paths = std::find(layout.local.begin(), layout.local.end(), LocalField::own_path) !=
                               layout.local.end() ||
                           std::find(layout.neighbor.begin(), layout.neighbor.end(), NeighborField::neighbor_path) !=
                               layout.neighbor.end();
  if (needs_paths && snap.evader_paths.size() != snap.agents.size())
    throw ConfigError("observe: comm pursuit features need shortest-path lengths for every agent");
  if (task.task == TaskKind::pursuit && snap.evaders.empty()) throw ConfigError("observe: pursuit needs an evader");

  ObservationSet o;
  o.neighbors.resize(static_cast<Eigen::Index>(nbrs.size()), static_cast<Eigen::Index>(layout.neighbor.size()));
  for (std::size_t r = 0; r < nbrs.size(); ++r) {
    const auto j = static_cast<std::size_t>(nbrs[r]);
    const PairGeometry g = pairwise_geometry(me, snap.agents[j], world);
    for (std::size_t c = 0; c < layout.neighbor.size(); ++c) {
      double v = 0.0;
      switch (layout.neighbor[c]) {
        case NeighborField::distance: v = g.distance; break;
        case NeighborField::bearing: v = g.bearing; break;
        case NeighborField::orientation: v = g.orientation; break;
        case NeighborField::rel_vx: v = g.relative_velocity.x; break;
        case NeighborField::rel_vy: v = g.relative_velocity.y; break;
        case NeighborField::neighbor_count: v = static_cast<double>(snap.graph->degree(j)); break;
        case NeighborField::neighbor_path: v = snap.evader_paths[j]; break;
      }
      o.neighbors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }

  std::array<double, 2> evader_rb{0.0, 0.0};
  if (task.task == TaskKind::pursuit) {
    evader_rb = range_bearing(me, position(snap.evaders[0]), world);
    if (task.local() && evader_rb[0] > task.obs_radius) evader_rb = {world.unreachable_distance(), 0.0};
  }
  WallFeatures wall;
  if (world.boundary == Boundary::closed) wall = wall_features(me, world);

  o.local.resize(static_cast<Eigen::Index>(layout.local.size()));
  for (std::size_t c = 0; c < layout.local.size(); ++c) {
    double v = 0.0;
    switch (layout.local[c]) {
      case LocalField::wall_distance: v = wall.distance; break;
      case LocalField::wall_bearing: v = wall.bearing; break;
      case LocalField::speed: v = me.v; break;
      case LocalField::turn_rate: v = me.omega; break;
      case LocalField::evader_distance: v = evader_rb[0]; break;
      case LocalField::evader_bearing: v = evader_rb[1]; break;
      case LocalField::own_count: v = static_cast<double>(nbrs.size()); break;
      case LocalField::own_path: v = snap.evader_paths[i]; break;
    }
    o.local[static_cast<Eigen::Index>(c)] = v;
  }

  if (!layout.evader.empty()) {
    std::vector<std::array<double, 2>> seen;
    for (const auto& e : snap.evaders) {
      const auto rb = range_bearing(me, position(e), world);
      if (!task.local() || rb[0] <= task.obs_radius) seen.push_back(rb);
    }
    o.evaders.resize(static_cast<Eigen::Index>(seen.size()), 2);
    for (std::size_t r = 0; r < seen.size(); ++r) {
      o.evaders(static_cast<Eigen::Index>(r), 0) = seen[r][0];
      o.evaders(static_cast<Eigen::Index>(r), 1) = seen[r][1];
    }
  } else {
    o.evaders.resize(0, 0);
  }
  return o;
}

}  // namespace swarmrl::env
