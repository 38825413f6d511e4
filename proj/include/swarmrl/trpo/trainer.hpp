#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmrl/policy/checkpoint.hpp"
#include "swarmrl/trpo/rollout.hpp"
#include "swarmrl/trpo/update.hpp"
#include "swarmrl/trpo/value.hpp"

namespace swarmrl::trpo {

struct TrainerConfig {
  int workers = 10;
  int steps_per_worker = 2048;
  int subsample_agents = 8;
  double max_kl = 0.01;
  double gamma = 0.99;
  int cg_iters = 10;
  double cg_damping = 0.1;
  int backtrack_steps = 10;
  double backtrack_factor = 0.8;
  ValueFitConfig value;
  int iterations = 100;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 = final checkpoint only
  int threads = 1;
  /// Off for byte-identical curves across reruns.
  bool log_wall_time = true;

  TrpoConfig trpo() const {
    return {max_kl, cg_iters, cg_damping, 1e-10, backtrack_steps, backtrack_factor};
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (workers < 1) out.push_back("trainer: workers must be >= 1");
    if (steps_per_worker < 1) out.push_back("trainer: steps_per_worker must be >= 1");
    if (subsample_agents < 1) out.push_back("trainer: subsample_agents must be >= 1");
    if (!(max_kl > 0.0)) out.push_back("trainer: max_kl must be positive");
    if (!(gamma > 0.0) || gamma > 1.0) out.push_back("trainer: gamma must lie in (0, 1]");
    if (cg_iters < 1) out.push_back("trainer: cg_iters must be >= 1");
    if (!(cg_damping > 0.0)) out.push_back("trainer: cg_damping must be positive");
    if (backtrack_steps < 1) out.push_back("trainer: backtrack_steps must be >= 1");
    if (!(backtrack_factor > 0.0) || !(backtrack_factor < 1.0)) out.push_back("trainer: backtrack_factor must lie in (0, 1)");
    if (value.epochs < 0) out.push_back("trainer: value epochs must be >= 0");
    if (!(value.step_size > 0.0)) out.push_back("trainer: value step size must be positive");
    if (value.minibatch < 1) out.push_back("trainer: value minibatch must be >= 1");
    if (iterations < 0) out.push_back("trainer: iterations must be >= 0");
    if (checkpoint_every < 0) out.push_back("trainer: checkpoint_every must be >= 0");
    if (threads < 1) out.push_back("trainer: threads must be >= 1");
    return out;
  }

  /// Transitions entering each update.
  long long samples_per_iteration(int n_agents) const {
    return static_cast<long long>(workers) * steps_per_worker * std::min(subsample_agents, n_agents);
  }
};

struct IterationRecord {
  int iter = 0;
  long long samples = 0;
  double avg_return = std::numeric_limits<double>::quiet_NaN();
  double mean_kl = 0.0;
  double surrogate_improvement = 0.0;
  double value_loss = 0.0;
  double wall_time_s = 0.0;
  bool accepted = false;
  std::string diagnostic;
};

using LearningCurve = std::vector<IterationRecord>;

inline constexpr const char* kCurveHeader = "iter,samples,avg_return,mean_kl,surrogate_improvement,value_loss,wall_time_s";

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string curve_row(const IterationRecord& r) {
  return std::to_string(r.iter) + "," + std::to_string(r.samples) + "," + format_double(r.avg_return) + "," +
         format_double(r.mean_kl) + "," + format_double(r.surrogate_improvement) + "," + format_double(r.value_loss) +
         "," + format_double(r.wall_time_s);
}

inline void write_curve(std::ostream& os, const LearningCurve& curve) {
  os << kCurveHeader << "\n";
  for (const auto& r : curve) os << curve_row(r) << "\n";
}

struct TrainResult {
  policy::Policy policy;
  policy::ValueFunction value;
  LearningCurve curve;
};

struct TrainHooks {
  /// Called after every iteration (e.g. to stream the curve).
  std::function<void(const IterationRecord&)> on_iteration;
  /// Called with (iteration, policy, value) every checkpoint_every iterations
  /// and once at the end.
  std::function<void(int, const policy::Policy&, const policy::ValueFunction&)> on_checkpoint;
};

/// Parameter-shared TRPO: collect → subsample → returns → value fit →
/// advantages → update, repeated `iterations` times.
inline TrainResult train(const env::TaskConfig& task, const env::WorldConfig& world, const policy::NetworkSpec& net,
                         const TrainerConfig& cfg, const TrainHooks& hooks = {}) {
  task.validate();
  world.validate();
  {
    const auto v = cfg.violations();
    if (!v.empty()) {
      std::string msg = "invalid trainer configuration:";
      for (const auto& s : v) msg += "\n  - " + s;
      throw env::ConfigError(msg);
    }
  }
  std::mt19937_64 init_rng(derive_seed(cfg.seed, 0x1417));
  const auto features = policy::FeatureSpec::from_task(task, world);
  TrainResult res;
  res.policy = policy::make_policy(features, net, init_rng);
  res.value = policy::make_value_function(features, net, init_rng);
  ValueFitter fitter(res.value.params.size(), cfg.value);
  const EnvFactory make_env = [&] { return env::SwarmEnv(task, world); };
  const auto start = std::chrono::steady_clock::now();

  for (int it = 0; it < cfg.iterations; ++it) {
    IterationRecord rec;
    rec.iter = it;
    try {
      std::mt19937_64 rng(derive_seed(cfg.seed, 0x17e4, static_cast<std::uint64_t>(it)));
      Batch full = collect_rollouts(make_env, res.policy, cfg.workers, cfg.steps_per_worker, rng(), cfg.threads);
      rec.avg_return = average_return(full);
      Batch b = subsample_agents(full, cfg.subsample_agents, rng);
      full = Batch{};
      rec.samples = b.size();
      compute_returns(b, cfg.gamma);
      const ValueFitStats vs = fitter.fit(res.value, b, rng);
      rec.value_loss = vs.mse_after;
      compute_advantages(b, res.value.predict(b.obs));
      const TrpoStats st = trpo_update(res.policy, b, cfg.trpo());
      rec.accepted = st.accepted;
      rec.mean_kl = st.mean_kl;
      rec.surrogate_improvement = st.improvement();
      rec.diagnostic = st.diagnostic;
    } catch (const std::exception& e) {
      throw std::runtime_error("iteration " + std::to_string(it) + ": " + e.what());
    }
    if (cfg.log_wall_time)
      rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.curve.push_back(rec);
    if (hooks.on_iteration) hooks.on_iteration(rec);
    if (hooks.on_checkpoint && cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 &&
        it + 1 != cfg.iterations)
      hooks.on_checkpoint(it + 1, res.policy, res.value);
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(cfg.iterations, res.policy, res.value);
  return res;
}

}  // namespace swarmrl::trpo
