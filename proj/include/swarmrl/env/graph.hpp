#pragma once

#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "swarmrl/env/config.hpp"
#include "swarmrl/env/geometry.hpp"

namespace swarmrl::env {

/// Undirected interaction graph over agent indices.
struct InteractionGraph {
  std::vector<std::vector<int>> neighbors;

  std::size_t size() const { return neighbors.size(); }
  std::size_t degree(std::size_t i) const { return neighbors[i].size(); }
};

/// Fully connected for global observability, Δ-disk (d ≤ d_c, inclusive)
/// otherwise. Neighbour lists are sorted by index.
inline InteractionGraph build_graph(std::span<const AgentState> states, Observability mode, double comm_radius,
                                    const WorldConfig& world) {
  InteractionGraph g;
  const std::size_t n = states.size();
  g.neighbors.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (mode == Observability::global || distance(position(states[i]), position(states[j]), world) <= comm_radius) {
        g.neighbors[i].push_back(static_cast<int>(j));
        g.neighbors[j].push_back(static_cast<int>(i));
      }
    }
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

/// Shortest-path lengths from every agent to the evader over the graph whose
/// vertices are the agents plus the evader: agent–agent edges follow the
/// interaction graph, agent–evader edges exist where d ≤ d_o. Unreachable
/// agents get world.unreachable_distance().
inline std::vector<double> shortest_paths_to_evader(std::span<const AgentState> states, const InteractionGraph& graph,
                                                    const EvaderState& evader, double obs_radius,
                                                    const WorldConfig& world) {
  const std::size_t n = states.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  // Dijkstra from the evader; the graph is undirected.
  for (std::size_t i = 0; i < n; ++i) {
    const double d = distance(position(states[i]), position(evader), world);
    if (d <= obs_radius) {
      dist[i] = d;
      pq.push({d, static_cast<int>(i)});
    }
  }
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (int v : graph.neighbors[static_cast<std::size_t>(u)]) {
      const double nd = d + distance(position(states[static_cast<std::size_t>(u)]),
                                     position(states[static_cast<std::size_t>(v)]), world);
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        pq.push({nd, v});
      }
    }
  }
  for (auto& d : dist)
    if (d == inf) d = world.unreachable_distance();
  return dist;
}

inline double shortest_path_to_evader(std::size_t i, std::span<const AgentState> states, const InteractionGraph& graph,
                                      const EvaderState& evader, double obs_radius, const WorldConfig& world) {
  return shortest_paths_to_evader(states, graph, evader, obs_radius, world).at(i);
}

}  // namespace swarmrl::env
