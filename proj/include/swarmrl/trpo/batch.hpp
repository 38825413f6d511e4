#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <tuple>
#include <vector>

#include "swarmrl/policy/features.hpp"

namespace swarmrl::trpo {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

/// Column-wise storage of per-agent transitions collected under parameter
/// sharing. Row r of every member belongs to the same transition.
struct Batch {
  policy::ObsBatch obs;
  Matrix actions;   // raw (unclamped) sampled actions
  Vector logp_old;  // behaviour log-probabilities
  Vector rewards;
  std::vector<std::uint8_t> dones;
  std::vector<int> time;
  std::vector<int> agent;
  std::vector<int> worker;
  std::vector<int> episode;  // per-worker episode counter

  Vector returns;
  Vector advantages;

  /// Undiscounted team returns of episodes that finished during collection.
  std::vector<double> episode_returns;

  Index size() const { return logp_old.size(); }
};

/// Keeps the rows listed in `rows`, in that order.
inline Batch select(const Batch& b, const std::vector<Index>& rows) {
  Batch out;
  out.obs = policy::select_rows(b.obs, rows);
  const auto n = static_cast<Index>(rows.size());
  out.actions.resize(n, b.actions.cols());
  out.logp_old.resize(n);
  out.rewards.resize(n);
  const bool has_ret = b.returns.size() == b.size();
  const bool has_adv = b.advantages.size() == b.size();
  if (has_ret) out.returns.resize(n);
  if (has_adv) out.advantages.resize(n);
  for (Index k = 0; k < n; ++k) {
    const Index r = rows[static_cast<std::size_t>(k)];
    out.actions.row(k) = b.actions.row(r);
    out.logp_old[k] = b.logp_old[r];
    out.rewards[k] = b.rewards[r];
    if (has_ret) out.returns[k] = b.returns[r];
    if (has_adv) out.advantages[k] = b.advantages[r];
    out.dones.push_back(b.dones[static_cast<std::size_t>(r)]);
    out.time.push_back(b.time[static_cast<std::size_t>(r)]);
    out.agent.push_back(b.agent[static_cast<std::size_t>(r)]);
    out.worker.push_back(b.worker[static_cast<std::size_t>(r)]);
    out.episode.push_back(b.episode[static_cast<std::size_t>(r)]);
  }
  out.episode_returns = b.episode_returns;
  return out;
}

/// Keeps every transition of `k` agent ids drawn uniformly without
/// replacement, independently per worker. k ≥ N returns the batch unchanged.
template <typename Rng>
Batch subsample_agents(const Batch& b, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("subsample_agents: k must be >= 1");
  std::map<int, int> agents_per_worker;
  for (std::size_t r = 0; r < b.agent.size(); ++r)
    agents_per_worker[b.worker[r]] = std::max(agents_per_worker[b.worker[r]], b.agent[r] + 1);
  bool identity = true;
  for (const auto& [w, n] : agents_per_worker) identity = identity && k >= n;
  if (identity) return b;

  std::map<int, std::vector<std::uint8_t>> keep;
  for (const auto& [w, n] : agents_per_worker) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
    if (k >= n) {
      std::fill(mask.begin(), mask.end(), 1);
    } else {
      // Partial Fisher–Yates.
      for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(pick(rng))]);
        mask[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] = 1;
      }
    }
    keep[w] = std::move(mask);
  }
  std::vector<Index> rows;
  for (std::size_t r = 0; r < b.agent.size(); ++r)
    if (keep[b.worker[r]][static_cast<std::size_t>(b.agent[r])]) rows.push_back(static_cast<Index>(r));
  return select(b, rows);
}

/// Discounted reward-to-go within each (worker, agent, episode) trajectory.
inline void compute_returns(Batch& b, double gamma) {
  b.returns.resize(b.size());
  std::map<std::tuple<int, int, int>, std::vector<Index>> groups;
  for (Index r = 0; r < b.size(); ++r) {
    const auto u = static_cast<std::size_t>(r);
    groups[{b.worker[u], b.agent[u], b.episode[u]}].push_back(r);
  }
  for (auto& [key, rows] : groups) {
    std::sort(rows.begin(), rows.end(), [&b](Index x, Index y) {
      return b.time[static_cast<std::size_t>(x)] < b.time[static_cast<std::size_t>(y)];
    });
    double g = 0.0;
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
      g = b.rewards[*it] + gamma * g;
      b.returns[*it] = g;
    }
  }
}

/// Â = G − V, then standardised to mean 0 / std 1 (skipped when the batch
/// variance vanishes).
inline void compute_advantages(Batch& b, const Vector& values) {
  numkit::require_shape(values.size() == b.size() && b.returns.size() == b.size(),
                        "compute_advantages: returns/values missing");
  b.advantages = b.returns - values;
  if (b.size() == 0) return;
  const double mean = b.advantages.mean();
  const double var = (b.advantages.array() - mean).square().mean();
  if (var > 1e-24) b.advantages = ((b.advantages.array() - mean) / std::sqrt(var)).matrix();
}

inline double average_return(const Batch& b) {
  if (b.episode_returns.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(b.episode_returns.begin(), b.episode_returns.end(), 0.0) /
         static_cast<double>(b.episode_returns.size());
}

}  // namespace swarmrl::trpo
