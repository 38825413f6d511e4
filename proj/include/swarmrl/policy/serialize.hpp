#pragma once

#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarmrl/env/config.hpp"
#include "swarmrl/policy/network.hpp"

namespace swarmrl::policy {

using Json = nlohmann::ordered_json;

/// Reads the members of one JSON object into typed fields, collecting type
/// errors and unknown keys instead of throwing on the first problem.
class JsonReader {
 public:
  JsonReader(const Json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) errors_.push_back(path_ + ": expected an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    try {
      out = obj_.at(key).template get<T>();
    } catch (const std::exception&) {
      errors_.push_back(path_ + "." + key + ": wrong type");
    }
  }

  /// Enumerated value given as a string.
  template <typename T, typename Parse>
  void get_enum(const std::string& key, T& out, Parse parse) {
    std::string s;
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    if (!obj_.at(key).is_string()) {
      errors_.push_back(path_ + "." + key + ": expected a string");
      return;
    }
    try {
      out = parse(obj_.at(key).template get<std::string>());
    } catch (const std::exception& e) {
      errors_.push_back(path_ + "." + key + ": " + e.what());
    }
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    return obj_.is_object() && obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k)) errors_.push_back(path_ + "." + k + ": unknown key");
  }

 private:
  const Json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

inline Json to_json(const env::WorldConfig& w) {
  return {{"x_max", w.x_max}, {"y_max", w.y_max}, {"boundary", env::to_string(w.boundary)}, {"dt", w.dt}};
}

inline void from_json(const Json& j, env::WorldConfig& w, std::vector<std::string>& errors, const std::string& path = "world") {
  JsonReader r(j, path, errors);
  r.get("x_max", w.x_max);
  r.get("y_max", w.y_max);
  r.get_enum("boundary", w.boundary, env::boundary_from_string);
  r.get("dt", w.dt);
  r.finish();
}

inline Json to_json(const env::TaskConfig& t) {
  return {{"task", env::to_string(t.task)},
          {"n_agents", t.n_agents},
          {"n_evaders", t.n_evaders},
          {"dynamics", env::to_string(t.dynamics)},
          {"observability", env::to_string(t.observability)},
          {"features", env::to_string(t.features)},
          {"relative_velocity", t.relative_velocity},
          {"comm_radius", t.comm_radius},
          {"obs_radius", t.obs_radius},
          {"capture_radius", t.capture_radius},
          {"episode_length", t.episode_length},
          {"v_max", t.v_max},
          {"omega_max", t.omega_max},
          {"a_v_max", t.a_v_max},
          {"a_omega_max", t.a_omega_max},
          {"evader_speed_factor", t.evader_speed_factor},
          {"action_penalty", t.action_penalty},
          {"voronoi_grid", t.voronoi_grid}};
}

inline void from_json(const Json& j, env::TaskConfig& t, std::vector<std::string>& errors, const std::string& path = "task") {
  JsonReader r(j, path, errors);
  r.get_enum("task", t.task, env::task_from_string);
  r.get("n_agents", t.n_agents);
  r.get("n_evaders", t.n_evaders);
  r.get_enum("dynamics", t.dynamics, env::dynamics_from_string);
  r.get_enum("observability", t.observability, env::observability_from_string);
  r.get_enum("features", t.features, env::features_from_string);
  r.get("relative_velocity", t.relative_velocity);
  r.get("comm_radius", t.comm_radius);
  r.get("obs_radius", t.obs_radius);
  r.get("capture_radius", t.capture_radius);
  r.get("episode_length", t.episode_length);
  r.get("v_max", t.v_max);
  r.get("omega_max", t.omega_max);
  r.get("a_v_max", t.a_v_max);
  r.get("a_omega_max", t.a_omega_max);
  r.get("evader_speed_factor", t.evader_speed_factor);
  r.get("action_penalty", t.action_penalty);
  r.get("voronoi_grid", t.voronoi_grid);
  r.finish();
}

inline Json to_json(const EmbeddingSpec& e) {
  Json moments = Json::array();
  for (Moment m : e.moments) moments.push_back(to_string(m));
  return {{"kind", to_string(e.kind)},
          {"nn_layers", e.nn_layers},
          {"nn_activation", numkit::to_string(e.nn_activation)},
          {"hist_bins", e.hist_bins},
          {"rbf_centers", e.rbf_centers},
          {"alpha", e.alpha},
          {"max_neighbors", e.max_neighbors},
          {"max_evaders", e.max_evaders},
          {"concat_hidden", e.concat_hidden},
          {"moments", moments},
          {"sum_pooling", e.sum_pooling}};
}

inline void from_json(const Json& j, EmbeddingSpec& e, std::vector<std::string>& errors,
                      const std::string& path = "embedding") {
  JsonReader r(j, path, errors);
  r.get_enum("kind", e.kind, embedding_from_string);
  r.get("nn_layers", e.nn_layers);
  r.get_enum("nn_activation", e.nn_activation, numkit::activation_from_string);
  r.get("hist_bins", e.hist_bins);
  r.get("rbf_centers", e.rbf_centers);
  r.get("alpha", e.alpha);
  r.get("max_neighbors", e.max_neighbors);
  r.get("max_evaders", e.max_evaders);
  r.get("concat_hidden", e.concat_hidden);
  if (const Json* m = r.child("moments")) {
    if (!m->is_array()) {
      errors.push_back(path + ".moments: expected an array");
    } else {
      e.moments.clear();
      for (const auto& s : *m) {
        try {
          e.moments.push_back(moment_from_string(s.get<std::string>()));
        } catch (const std::exception& ex) {
          errors.push_back(path + ".moments: " + ex.what());
        }
      }
    }
  }
  r.get("sum_pooling", e.sum_pooling);
  r.finish();
}

inline Json to_json(const NetworkSpec& n) {
  return {{"embedding", to_json(n.embedding)},
          {"trunk_hidden", n.trunk_hidden},
          {"trunk_activation", numkit::to_string(n.trunk_activation)},
          {"init_log_std", n.init_log_std},
          {"head_init_scale", n.head_init_scale}};
}

inline void from_json(const Json& j, NetworkSpec& n, std::vector<std::string>& errors, const std::string& path = "network") {
  JsonReader r(j, path, errors);
  if (const Json* e = r.child("embedding")) from_json(*e, n.embedding, errors, path + ".embedding");
  r.get("trunk_hidden", n.trunk_hidden);
  r.get_enum("trunk_activation", n.trunk_activation, numkit::activation_from_string);
  r.get("init_log_std", n.init_log_std);
  r.get("head_init_scale", n.head_init_scale);
  r.finish();
}

inline Json to_json(const FeatureSpec& f) {
  Json nb = Json::array(), lc = Json::array(), ev = Json::array();
  for (auto x : f.layout.neighbor) nb.push_back(env::to_string(x));
  for (auto x : f.layout.local) lc.push_back(env::to_string(x));
  for (auto x : f.layout.evader) ev.push_back(env::to_string(x));
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"neighbor_fields", nb},
          {"local_fields", lc},
          {"evader_fields", ev},
          {"neighbor_scale", vec(f.neighbor_scale)},
          {"local_scale", vec(f.local_scale)},
          {"evader_scale", vec(f.evader_scale)},
          {"distance_range", f.distance_range}};
}

inline Json to_json(const numkit::ParamLayout& lay) {
  Json out = Json::array();
  for (const auto& b : lay.blocks())
    out.push_back({{"name", b.name}, {"offset", b.offset}, {"rows", b.rows}, {"cols", b.cols}});
  return out;
}

/// Throws ConfigError listing every problem when `errors` is non-empty.
inline void throw_if_errors(const std::vector<std::string>& errors, const std::string& what) {
  if (errors.empty()) return;
  std::string msg = what + ":";
  for (const auto& e : errors) msg += "\n  - " + e;
  throw env::ConfigError(msg);
}

}  // namespace swarmrl::policy
