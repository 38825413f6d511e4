#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "swarmrl/baselines/consensus.hpp"
#include "swarmrl/baselines/pursuit.hpp"
#include "swarmrl/env/swarm_env.hpp"
#include "swarmrl/policy/network.hpp"

namespace swarmrl::baselines {

/// Anything that produces one action per agent from the current environment
/// state. Learned policies and classical controllers share this interface so
/// rollout and evaluation code treats them alike.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  /// Called at the start of every episode.
  virtual void reset() {}
  virtual std::vector<env::Action> act(const env::SwarmEnv& e, std::mt19937_64& rng) = 0;
};

using ControllerPtr = std::unique_ptr<Controller>;

class ZeroController final : public Controller {
 public:
  std::string name() const override { return "zero"; }
  std::vector<env::Action> act(const env::SwarmEnv& e, std::mt19937_64&) override {
    return std::vector<env::Action>(e.agents().size());
  }
};

/// Uniform actions over the admissible box.
class RandomController final : public Controller {
 public:
  std::string name() const override { return "random"; }
  std::vector<env::Action> act(const env::SwarmEnv& e, std::mt19937_64& rng) override {
    const auto& t = e.task();
    const bool single = t.dynamics == env::Dynamics::single_integrator;
    std::uniform_real_distribution<double> lin(-(single ? t.v_max : t.a_v_max), single ? t.v_max : t.a_v_max);
    std::uniform_real_distribution<double> ang(-(single ? t.omega_max : t.a_omega_max),
                                               single ? t.omega_max : t.a_omega_max);
    std::vector<env::Action> out(e.agents().size());
    for (auto& a : out) a = {lin(rng), ang(rng)};
    return out;
  }
};

class ConsensusController final : public Controller {
 public:
  explicit ConsensusController(PdGains g = kTunedGains) : g_(g) {}
  std::string name() const override { return "consensus"; }
  std::vector<env::Action> act(const env::SwarmEnv& e, std::mt19937_64&) override {
    std::vector<env::Action> out(e.agents().size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = consensus_pd_policy(i, e.agents(), e.graph(), g_, e.task(), e.world());
    return out;
  }

 private:
  PdGains g_;
};

/// Pursuers chase the first evader.
class VoronoiPursuitController final : public Controller {
 public:
  explicit VoronoiPursuitController(PdGains g = kTunedGains, int resolution = 128) : g_(g), res_(resolution) {}
  std::string name() const override { return "voronoi"; }
  std::vector<env::Action> act(const env::SwarmEnv& e, std::mt19937_64&) override {
    std::vector<env::Action> out(e.agents().size());
    if (e.evaders().empty()) return out;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = voronoi_pursuit_action(i, e.agents(), e.evaders().front(), e.world(), e.task().v_max, g_, e.task(), res_);
    return out;
  }

 private:
  PdGains g_;
  int res_;
};

class DirectChaseController final : public Controller {
 public:
  explicit DirectChaseController(PdGains g = kTunedGains) : g_(g) {}
  std::string name() const override { return "chase"; }
  std::vector<env::Action> act(const env::SwarmEnv& e, std::mt19937_64&) override {
    std::vector<env::Action> out(e.agents().size());
    if (e.evaders().empty()) return out;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = direct_chase_action(e.agents()[i], e.evaders().front(), e.world(), e.task().v_max, g_, e.task());
    return out;
  }

 private:
  PdGains g_;
};

/// Pursuers first take evenly spaced slots on a ring around the evader, then
/// shrink the ring once they are in place.
class SurroundController final : public Controller {
 public:
  struct Params {
    double start_radius = 12.0;
    double slot_tolerance = 2.0;
    double shrink_per_step = 0.25;
  };

  explicit SurroundController(PdGains g = kTunedGains) : SurroundController(g, Params{}) {}
  SurroundController(PdGains g, Params p) : g_(g), p_(p), radius_(p.start_radius) {}
  std::string name() const override { return "surround"; }
  void reset() override { radius_ = p_.start_radius; }

  std::vector<env::Action> act(const env::SwarmEnv& e, std::mt19937_64&) override {
    std::vector<env::Action> out(e.agents().size());
    if (e.evaders().empty()) return out;
    const auto targets = surround_targets(e.agents(), e.evaders().front(), e.world(), radius_);
    double worst = 0.0;
    for (const auto& t : targets) worst = std::max(worst, t.norm());
    if (worst <= p_.slot_tolerance) radius_ = std::max(0.0, radius_ - p_.shrink_per_step);
    const double vmax = e.task().v_max;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double n = targets[i].norm();
      const Vec2 desired = n > 0.0 ? targets[i] * (std::min(vmax, n) / n) : Vec2{0.0, 0.0};
      out[i] = track(e.agents()[i], desired, g_, e.task());
    }
    return out;
  }

 private:
  PdGains g_;
  Params p_;
  double radius_;
};

/// Decentralised execution of a learned policy: every agent evaluates the
/// shared network on its own observation. Greedy uses the mean action.
class PolicyController final : public Controller {
 public:
  PolicyController(policy::Policy pol, bool greedy) : pol_(std::move(pol)), greedy_(greedy) {}
  std::string name() const override { return greedy_ ? "policy-greedy" : "policy"; }
  const policy::Policy& policy() const { return pol_; }

  std::vector<env::Action> act(const env::SwarmEnv& e, std::mt19937_64& rng) override {
    const auto obs = e.observe_all();
    const Matrix means = pol_.net.forward(pol_.params, policy::make_obs_batch(obs, pol_.net.features()));
    const Vector ls = pol_.net.log_std(pol_.params);
    std::vector<env::Action> out(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const numkit::DiagGaussian d{means.row(static_cast<Index>(i)).transpose(), ls};
      out[i] = greedy_ ? policy::to_action(d.mean, e.task()) : policy::sample_action(d, rng, e.task());
    }
    return out;
  }

 private:
  policy::Policy pol_;
  bool greedy_;
};

}  // namespace swarmrl::baselines
