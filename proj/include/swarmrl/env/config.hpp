#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace swarmrl::env {

enum class Boundary { closed, toroidal };
enum class Dynamics { single_integrator, double_integrator };
enum class TaskKind { rendezvous, pursuit, multi_pursuit };
enum class Observability { global, local };
enum class FeatureSet { basic, extended, comm };

/// Raised for inconsistent task/world/feature configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WorldConfig {
  double x_max = 100.0;
  double y_max = 100.0;
  Boundary boundary = Boundary::closed;
  double dt = 1.0;

  void validate() const {
    if (!(x_max > 0.0) || !(y_max > 0.0)) throw ConfigError("world: x_max and y_max must be positive");
    if (!(dt > 0.0)) throw ConfigError("world: dt must be positive");
  }

  /// Largest distance two points can have in this world.
  double max_distance() const {
    return boundary == Boundary::toroidal ? std::hypot(0.5 * x_max, 0.5 * y_max) : std::hypot(x_max, y_max);
  }

  /// Value reported for an unreachable shortest path or an unseen evader.
  double unreachable_distance() const { return 2.0 * (x_max + y_max); }
};

struct AgentState {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;    // heading in [0, 2π)
  double v = 0.0;      // linear velocity
  double omega = 0.0;  // angular velocity

  bool operator==(const AgentState&) const = default;
};

struct EvaderState {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const EvaderState&) const = default;
};

/// (v, ω) for single-integrator agents, (a_v, a_ω) for double-integrator ones.
struct Action {
  double linear = 0.0;
  double angular = 0.0;

  bool operator==(const Action&) const = default;
};

struct TaskConfig {
  TaskKind task = TaskKind::rendezvous;
  int n_agents = 20;
  int n_evaders = 1;
  Dynamics dynamics = Dynamics::single_integrator;
  Observability observability = Observability::global;
  FeatureSet features = FeatureSet::basic;
  /// Append the relative velocity Δν to neighbour features. Only meaningful
  /// for double-integrator agents with a non-basic feature set.
  bool relative_velocity = false;

  double comm_radius = 40.0;     // d_c
  double obs_radius = 20.0;      // d_o
  double capture_radius = 3.0;   // d_t
  int episode_length = 512;      // T

  double v_max = 0.5;
  double omega_max = std::numbers::pi / 4.0;
  double a_v_max = 0.05;
  double a_omega_max = std::numbers::pi / 16.0;
  double evader_speed_factor = 2.0;
  double action_penalty = -1e-3;  // β
  int voronoi_grid = 128;

  bool local() const { return observability == Observability::local; }
  bool pursuit_like() const { return task != TaskKind::rendezvous; }

  int evader_count() const {
    if (task == TaskKind::rendezvous) return 0;
    if (task == TaskKind::pursuit) return 1;
    return n_evaders;
  }

  double evader_speed() const { return evader_speed_factor * v_max; }

  /// Returns every violated constraint; empty when the configuration is valid.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (n_agents < 2) out.push_back("task: n_agents must be >= 2");
    if (task == TaskKind::pursuit && n_evaders != 1) out.push_back("task: single-evader pursuit requires n_evaders = 1");
    if (task == TaskKind::multi_pursuit && n_evaders < 1) out.push_back("task: multi-pursuit requires n_evaders >= 1");
    if (!(comm_radius > 0.0)) out.push_back("task: comm_radius (d_c) must be positive");
    if (!(obs_radius > 0.0)) out.push_back("task: obs_radius (d_o) must be positive");
    if (!(capture_radius > 0.0)) out.push_back("task: capture_radius (d_t) must be positive");
    if (episode_length < 1) out.push_back("task: episode_length must be >= 1");
    if (!(v_max > 0.0) || !(omega_max > 0.0) || !(a_v_max > 0.0) || !(a_omega_max > 0.0))
      out.push_back("task: velocity/acceleration bounds must be positive");
    if (!(evader_speed_factor >= 0.0)) out.push_back("task: evader_speed_factor must be >= 0");
    if (voronoi_grid < 2) out.push_back("task: voronoi_grid must be >= 2");
    if (relative_velocity && dynamics == Dynamics::single_integrator)
      out.push_back("features: relative velocity requires double-integrator dynamics");
    if (relative_velocity && features == FeatureSet::basic)
      out.push_back("features: relative velocity is not part of the basic set");
    if (features == FeatureSet::comm && task == TaskKind::multi_pursuit)
      out.push_back("features: the comm set is not defined for multi-evader pursuit");
    return out;
  }

  void validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid task configuration:";
    for (const auto& s : v) msg += "\n  - " + s;
    throw ConfigError(msg);
  }
};

inline std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::rendezvous: return "rendezvous";
    case TaskKind::pursuit: return "pursuit";
    case TaskKind::multi_pursuit: return "multi-pursuit";
  }
  return "?";
}
inline std::string_view to_string(Dynamics d) {
  return d == Dynamics::single_integrator ? "single" : "double";
}
inline std::string_view to_string(Boundary b) { return b == Boundary::closed ? "closed" : "toroidal"; }
inline std::string_view to_string(Observability o) { return o == Observability::global ? "global" : "local"; }
inline std::string_view to_string(FeatureSet f) {
  switch (f) {
    case FeatureSet::basic: return "basic";
    case FeatureSet::extended: return "extended";
    case FeatureSet::comm: return "comm";
  }
  return "?";
}

inline TaskKind task_from_string(std::string_view s) {
  if (s == "rendezvous") return TaskKind::rendezvous;
  if (s == "pursuit") return TaskKind::pursuit;
  if (s == "multi-pursuit") return TaskKind::multi_pursuit;
  throw ConfigError("unknown task '" + std::string(s) + "'");
}
inline Dynamics dynamics_from_string(std::string_view s) {
  if (s == "single") return Dynamics::single_integrator;
  if (s == "double") return Dynamics::double_integrator;
  throw ConfigError("unknown dynamics '" + std::string(s) + "'");
}
inline Boundary boundary_from_string(std::string_view s) {
  if (s == "closed") return Boundary::closed;
  if (s == "toroidal") return Boundary::toroidal;
  throw ConfigError("unknown boundary '" + std::string(s) + "'");
}
inline Observability observability_from_string(std::string_view s) {
  if (s == "global") return Observability::global;
  if (s == "local") return Observability::local;
  throw ConfigError("unknown observability '" + std::string(s) + "'");
}
inline FeatureSet features_from_string(std::string_view s) {
  if (s == "basic") return FeatureSet::basic;
  if (s == "extended") return FeatureSet::extended;
  if (s == "comm") return FeatureSet::comm;
  throw ConfigError("unknown feature set '" + std::string(s) + "'");
}

}  // namespace swarmrl::env
