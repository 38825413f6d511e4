#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "swarmrl/env/swarm_env.hpp"
#include "swarmrl/numkit/gaussian.hpp"
#include "swarmrl/policy/network.hpp"
#include "swarmrl/trpo/batch.hpp"

namespace swarmrl::trpo {

using EnvFactory = std::function<env::SwarmEnv()>;

/// Deterministic per-worker stream derived from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Runs `count` independent jobs on up to `threads` OS threads. Exceptions
/// are rethrown (first failing job) tagged with the job index.
inline void parallel_for(int count, int threads, const std::function<void(int)>& job) {
  threads = std::max(1, std::min(threads, count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  auto run = [&](int k) {
    try {
      job(k);
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  };
  if (threads == 1) {
    for (int k = 0; k < count; ++k) run(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int k = next++; k < count; k = next++) run(k);
      });
  }
  for (int k = 0; k < count; ++k) {
    if (!errors[static_cast<std::size_t>(k)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(k)]);
    } catch (const std::exception& e) {
      throw std::runtime_error("worker " + std::to_string(k) + ": " + e.what());
    }
  }
}

inline int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

struct WorkerData {
  std::vector<env::ObservationSet> obs;
  std::vector<Vector> actions;
  std::vector<double> logp;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<int> time;
  std::vector<int> agent;
  std::vector<int> episode;
  std::vector<double> episode_returns;
};

inline WorkerData run_worker(const EnvFactory& make_env, const policy::Policy& pol, int steps, std::uint64_t seed) {
  WorkerData w;
  env::SwarmEnv e = make_env();
  std::mt19937_64 rng(seed);
  e.reset(rng());
  const auto n = static_cast<std::size_t>(e.task().n_agents);
  const Vector log_std = pol.net.log_std(pol.params);
  w.obs.reserve(static_cast<std::size_t>(steps) * n);
  int episode = 0;
  double ep_return = 0.0;
  std::vector<env::Action> actions(n);
  for (int s = 0; s < steps; ++s) {
    auto obs = e.observe_all();
    const Matrix means = pol.net.forward(pol.params, policy::make_obs_batch(obs, pol.net.features()));
    std::vector<Vector> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
      const numkit::DiagGaussian d{means.row(static_cast<Index>(i)).transpose(), log_std};
      raw[i] = policy::sample_raw(d, rng);
      actions[i] = {raw[i][0], raw[i][1]};
      w.logp.push_back(numkit::gaussian_logprob(d, raw[i]));
    }
    const int t = e.t();
    const env::StepResult res = e.step(actions);
    for (std::size_t i = 0; i < n; ++i) {
      w.obs.push_back(std::move(obs[i]));
      w.actions.push_back(std::move(raw[i]));
      w.rewards.push_back(res.reward);
      w.dones.push_back(res.done ? 1 : 0);
      w.time.push_back(t);
      w.agent.push_back(static_cast<int>(i));
      w.episode.push_back(episode);
    }
    ep_return += res.reward;
    if (res.done) {
      w.episode_returns.push_back(ep_return);
      ep_return = 0.0;
      ++episode;
      e.reset(rng());
    }
  }
  return w;
}

}  // namespace detail

/// Each worker owns an environment and RNG, runs `steps_per_worker`
/// environment steps under the frozen policy and records one transition per
/// agent and step. Results are merged in worker order, so the batch does not
/// depend on the thread count.
inline Batch collect_rollouts(const EnvFactory& make_env, const policy::Policy& pol, int workers,
                              int steps_per_worker, std::uint64_t seed, int threads = 1) {
  if (workers < 1 || steps_per_worker < 1) throw std::invalid_argument("collect_rollouts: workers and steps must be >= 1");
  std::vector<detail::WorkerData> data(static_cast<std::size_t>(workers));
  parallel_for(workers, threads, [&](int k) {
    data[static_cast<std::size_t>(k)] =
        detail::run_worker(make_env, pol, steps_per_worker, derive_seed(seed, static_cast<std::uint64_t>(k)));
  });

  Batch b;
  std::size_t total = 0;
  for (const auto& w : data) total += w.logp.size();
  std::vector<const env::ObservationSet*> obs;
  obs.reserve(total);
  b.actions.resize(static_cast<Index>(total), 2);
  b.logp_old.resize(static_cast<Index>(total));
  b.rewards.resize(static_cast<Index>(total));
  Index r = 0;
  for (int k = 0; k < workers; ++k) {
    const auto& w = data[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < w.logp.size(); ++j, ++r) {
      obs.push_back(&w.obs[j]);
      b.actions.row(r) = w.actions[j].transpose();
      b.logp_old[r] = w.logp[j];
      b.rewards[r] = w.rewards[j];
      b.dones.push_back(w.dones[j]);
      b.time.push_back(w.time[j]);
      b.agent.push_back(w.agent[j]);
      b.worker.push_back(k);
      b.episode.push_back(w.episode[j]);
    }
    b.episode_returns.insert(b.episode_returns.end(), w.episode_returns.begin(), w.episode_returns.end());
  }
  b.obs = policy::make_obs_batch(obs, pol.net.features());
  return b;
}

}  // namespace swarmrl::trpo
