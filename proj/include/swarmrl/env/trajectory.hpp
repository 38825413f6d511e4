#pragma once

#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarmrl/env/config.hpp"

namespace swarmrl::env {

/// Line-delimited JSON trajectory export: one agent record per agent and
/// step, then one evader record per evader and step.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out) : out_(out) {}

  void write(int t, std::span<const AgentState> agents, std::span<const EvaderState> evaders, double reward,
             bool done, const std::vector<bool>& caught = {}) {
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const auto& a = agents[i];
      nlohmann::ordered_json rec;
      rec["t"] = t;
      rec["agent_id"] = i;
      rec["x"] = a.x;
      rec["y"] = a.y;
      rec["phi"] = a.phi;
      rec["v"] = a.v;
      rec["omega"] = a.omega;
      rec["reward"] = reward;
      rec["done"] = done;
      out_ << rec.dump() << '\n';
    }
    for (std::size_t e = 0; e < evaders.size(); ++e) {
      nlohmann::ordered_json rec;
      rec["t"] = t;
      rec["evader_id"] = e;
      rec["x"] = evaders[e].x;
      rec["y"] = evaders[e].y;
      rec["caught"] = e < caught.size() && caught[e];
      out_ << rec.dump() << '\n';
    }
  }

 private:
  std::ostream& out_;
};

}  // namespace swarmrl::env
