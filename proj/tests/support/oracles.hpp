// Test-only helpers shared by the unit tests and the acceptance binary:
// random observation sets, encoder configurations and finite-difference
// oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "swarmrl/env/rewards.hpp"
#include "swarmrl/policy/network.hpp"
#include "swarmrl/trpo/update.hpp"

namespace oracle {

using swarmrl::numkit::Index;
using swarmrl::numkit::Matrix;
using swarmrl::numkit::Vector;
namespace env = swarmrl::env;
namespace policy = swarmrl::policy;
namespace trpo = swarmrl::trpo;

inline double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

/// One encoder configuration together with the task it reads features from.
struct EncoderCase {
  std::string name;
  env::TaskConfig task;
  env::WorldConfig world;
  policy::NetworkSpec net;
};

inline std::vector<EncoderCase> encoder_cases(bool include_concat = true) {
  using policy::EmbeddingKind;
  std::vector<EncoderCase> out;
  env::TaskConfig basic;
  basic.n_agents = 10;
  env::TaskConfig ext = basic;
  ext.features = env::FeatureSet::extended;
  ext.dynamics = env::Dynamics::double_integrator;
  ext.relative_velocity = true;
  env::TaskConfig multi;
  multi.task = env::TaskKind::multi_pursuit;
  multi.n_agents = 10;
  multi.n_evaders = 5;
  multi.observability = env::Observability::local;
  multi.features = env::FeatureSet::comm;
  env::WorldConfig torus;
  torus.boundary = env::Boundary::toroidal;

  auto add = [&](std::string name, const env::TaskConfig& t, const env::WorldConfig& w, EmbeddingKind k) {
    EncoderCase c{std::move(name), t, w, {}};
    c.net.embedding.kind = k;
    c.net.embedding.alpha = 1.5;
    if (k == EmbeddingKind::concat) {
      c.net.embedding.max_neighbors = t.n_agents - 1;
      c.net.embedding.max_evaders = t.n_evaders;
    }
    out.push_back(std::move(c));
  };
  add("nn-mean/basic", basic, {}, EmbeddingKind::nn_mean);
  add("nn-mean/extended", ext, {}, EmbeddingKind::nn_mean);
  add("nn-mean/multi-evader", multi, torus, EmbeddingKind::nn_mean);
  add("hist/basic", basic, {}, EmbeddingKind::histogram);
  add("rbf/basic", basic, {}, EmbeddingKind::rbf);
  add("softmax/basic", basic, {}, EmbeddingKind::softmax);
  add("softmax/extended", ext, {}, EmbeddingKind::softmax);
  add("max/basic", basic, {}, EmbeddingKind::max);
  add("max/extended", ext, {}, EmbeddingKind::max);
  add("moments/basic", basic, {}, EmbeddingKind::moments);
  add("moments/extended", ext, {}, EmbeddingKind::moments);
  if (include_concat) {
    add("concat/basic", basic, {}, EmbeddingKind::concat);
    add("concat/multi-evader", multi, torus, EmbeddingKind::concat);
  }
  return out;
}

/// Random neighbour feature rows following the layout's value ranges.
inline Matrix random_neighbor_set(const env::ObservationLayout& lay, Index n, std::mt19937_64& rng, double d_max) {
  std::uniform_real_distribution<double> ud(0.0, d_max), ua(-M_PI, M_PI), uv(-1.0, 1.0), uc(0.0, 9.0);
  Matrix m(n, static_cast<Index>(lay.neighbor.size()));
  for (Index r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < lay.neighbor.size(); ++c) {
      double v = 0.0;
      switch (lay.neighbor[c]) {
        case env::NeighborField::distance:
        case env::NeighborField::neighbor_path: v = ud(rng); break;
        case env::NeighborField::bearing:
        case env::NeighborField::orientation: v = ua(rng); break;
        case env::NeighborField::rel_vx:
        case env::NeighborField::rel_vy: v = uv(rng); break;
        case env::NeighborField::neighbor_count: v = std::floor(uc(rng)); break;
      }
      m(r, static_cast<Index>(c)) = v;
    }
  }
  return m;
}

inline env::ObservationSet random_observation(const policy::FeatureSpec& f, Index n_neighbors, Index n_evaders,
                                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  env::ObservationSet o;
  o.neighbors = random_neighbor_set(f.layout, n_neighbors, rng, f.distance_range);
  o.local.resize(f.local_dim());
  for (Index k = 0; k < o.local.size(); ++k) o.local[k] = u(rng) / f.local_scale[k];
  if (f.has_evader_set()) {
    std::uniform_real_distribution<double> ud(0.0, f.distance_range), ua(-M_PI, M_PI);
    o.evaders.resize(n_evaders, 2);
    for (Index r = 0; r < n_evaders; ++r) {
      o.evaders(r, 0) = ud(rng);
      o.evaders(r, 1) = ua(rng);
    }
  } else {
    o.evaders.resize(0, 0);
  }
  return o;
}

inline std::vector<env::ObservationSet> random_observations(const EncoderCase& c, const policy::FeatureSpec& f, int count,
                                                            std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nn(0, c.task.n_agents - 1), ne(0, std::max(0, c.task.n_evaders));
  std::vector<env::ObservationSet> out;
  for (int k = 0; k < count; ++k) out.push_back(random_observation(f, nn(rng), f.has_evader_set() ? ne(rng) : 0, rng));
  return out;
}

/// Randomised parameters: default init plus noise so that no layer sits at an
/// exactly symmetric point (zero biases, tiny head).
inline Vector random_params(const policy::PolicyNetwork& net, std::mt19937_64& rng) {
  Vector p = net.init(rng);
  std::normal_distribution<double> nd(0.0, 0.05);
  for (Index k = 0; k < p.size(); ++k) p[k] += nd(rng);
  return p;
}

/// Synthetic TRPO batch: actions sampled from the behaviour policy, random
/// standardised advantages.
inline trpo::Batch synthetic_batch(const policy::PolicyNetwork& net, const Vector& params,
                                   const std::vector<env::ObservationSet>& obs, std::mt19937_64& rng) {
  trpo::Batch b;
  b.obs = policy::make_obs_batch(obs, net.features());
  const Matrix means = net.forward(params, b.obs);
  const Vector ls = net.log_std(params);
  const Index n = b.obs.size();
  b.actions.resize(n, 2);
  b.logp_old.resize(n);
  b.advantages.resize(n);
  std::normal_distribution<double> nd;
  for (Index r = 0; r < n; ++r) {
    const swarmrl::numkit::DiagGaussian d{means.row(r).transpose(), ls};
    const Vector a = policy::sample_raw(d, rng);
    b.actions.row(r) = a.transpose();
    b.logp_old[r] = swarmrl::numkit::gaussian_logprob(d, a);
    b.advantages[r] = nd(rng);
  }
  b.rewards = Vector::Zero(n);
  for (Index r = 0; r < n; ++r) {
    b.dones.push_back(0);
    b.time.push_back(static_cast<int>(r));
    b.agent.push_back(0);
    b.worker.push_back(0);
    b.episode.push_back(0);
  }
  return b;
}

/// Central-difference gradient of f along every coordinate.
template <typename F>
Vector fd_gradient(F&& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector y = x;
  for (Index k = 0; k < x.size(); ++k) {
    y[k] = x[k] + h;
    const double fp = f(y);
    y[k] = x[k] - h;
    const double fm = f(y);
    y[k] = x[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

struct GradientReport {
  double policy = 0.0;  // surrogate gradient
  double value = 0.0;   // value-head gradient
  double fvp = 0.0;     // Fisher-vector product vs differentiated KL gradient
};

/// Compares analytic gradients and Fisher products with finite differences
/// on a batch of `batch` random observations.
inline GradientReport check_gradients(const EncoderCase& c, int batch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto f = policy::FeatureSpec::from_task(c.task, c.world);
  const policy::PolicyNetwork pnet(f, c.net, 2, true);
  policy::NetworkSpec vs = c.net;
  vs.head_init_scale = 1.0;
  const policy::PolicyNetwork vnet(f, vs, 1, false);
  const Vector theta = random_params(pnet, rng);
  const auto obs = random_observations(c, f, batch, rng);
  const trpo::Batch b = synthetic_batch(pnet, theta, obs, rng);

  GradientReport rep;
  // Evaluate the surrogate away from θ_old so the ratio terms matter.
  Vector theta1 = theta;
  {
    std::normal_distribution<double> nd(0.0, 0.02);
    for (Index k = 0; k < theta1.size(); ++k) theta1[k] += nd(rng);
  }
  const trpo::TrpoObjective obj(pnet, theta, b);
  const Vector g = obj.surrogate_gradient(theta1);
  // Steps stay small so a difference rarely straddles a ReLU kink; roundoff
  // at 1e-7 is around 1e-8 relative.
  const Vector g_fd = fd_gradient([&](const Vector& p) { return obj.surrogate(p); }, theta1, 1e-7);
  rep.policy = rel_err(g, g_fd);

  const Vector w = random_params(vnet, rng);
  Matrix up(b.obs.size(), 1);
  std::normal_distribution<double> nd;
  for (Index r = 0; r < up.rows(); ++r) up(r, 0) = nd(rng);
  policy::PolicyNetwork::Cache cache;
  vnet.forward(w, b.obs, &cache);
  Vector gv = Vector::Zero(w.size());
  vnet.backward(w, b.obs, cache, up, gv);
  const Vector gv_fd = fd_gradient(
      [&](const Vector& p) { return (vnet.forward(p, b.obs).array() * up.array()).sum(); }, w, 1e-7);
  rep.value = rel_err(gv, gv_fd);

  // F v = d/dε ∇KL(θ_old + ε v) at ε = 0.
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    Vector v(theta.size());
    for (Index k = 0; k < v.size(); ++k) v[k] = nd(rng);
    v.normalize();
    const Vector fv = obj.fisher_vector_product(v, 0.0);
    const double h = 1e-6;
    const Vector fd = (obj.mean_kl_gradient(theta + h * v) - obj.mean_kl_gradient(theta - h * v)) / (2.0 * h);
    worst = std::max(worst, rel_err(fv, fd));
  }
  rep.fvp = worst;
  return rep;
}

struct InvarianceReport {
  int sets = 0;
  double permutation = 0.0;   // worst over non-concat encoders
  double duplication = 0.0;   // nn-mean
  double max_duplication = 0.0;  // max pooling, expected exactly 0
  double softmax_alpha0 = 0.0;
  bool dims_constant = true;
};

/// Evaluates every size-invariant encoder on `count` random sets of size
/// 0..max_size, their permutations and their element-wise duplications.
inline InvarianceReport check_invariance(int count, int max_size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  InvarianceReport rep;
  const auto cases = encoder_cases(false);
  struct Built {
    policy::SetEncoder enc;
    Vector params;
    env::ObservationLayout layout;
    double range;
  };
  std::vector<Built> encs;
  for (const auto& c : cases) {
    const auto f = policy::FeatureSpec::from_task(c.task, c.world);
    policy::SetEncoder e(c.net.embedding, f.neighbor_dim(), f.neighbor_scale, f.distance_range);
    encs.push_back({e, e.init(rng), f.layout, f.distance_range});
  }
  // α = 0 softmax against nn-mean with the same feature map.
  env::TaskConfig basic;
  const auto fb = policy::FeatureSpec::from_task(basic, env::WorldConfig{});
  policy::EmbeddingSpec mean_spec;
  policy::EmbeddingSpec soft0 = mean_spec;
  soft0.kind = policy::EmbeddingKind::softmax;
  soft0.alpha = 0.0;
  const policy::SetEncoder mean_enc(mean_spec, 2, fb.neighbor_scale, fb.distance_range);
  const policy::SetEncoder soft_enc(soft0, 2, fb.neighbor_scale, fb.distance_range);
  const Vector shared = mean_enc.init(rng);

  std::uniform_int_distribution<int> size(0, max_size);
  std::uniform_int_distribution<int> dup(2, 4);
  for (int s = 0; s < count; ++s) {
    const Index n = size(rng);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const int k = dup(rng);

    for (const auto& e : encs) {
      const Matrix m = random_neighbor_set(e.layout, n, rng, e.range);
      Matrix mp(n, m.cols());
      for (Index r = 0; r < n; ++r) mp.row(r) = m.row(perm[static_cast<std::size_t>(r)]);
      const Matrix a = e.enc.forward(e.params, policy::SetBatch::single(m));
      const Matrix c = e.enc.forward(e.params, policy::SetBatch::single(mp));
      rep.permutation = std::max(rep.permutation, (a - c).cwiseAbs().maxCoeff());
      rep.dims_constant = rep.dims_constant && a.rows() == 1 && a.cols() == e.enc.output_dim();
      const auto kind = e.enc.spec().kind;
      if (kind == policy::EmbeddingKind::nn_mean || kind == policy::EmbeddingKind::max) {
        Matrix md(n * k, m.cols());
        for (Index r = 0; r < n * k; ++r) md.row(r) = m.row(r % n);
        const Matrix d = e.enc.forward(e.params, policy::SetBatch::single(md));
        double& slot = kind == policy::EmbeddingKind::nn_mean ? rep.duplication : rep.max_duplication;
        slot = std::max(slot, (a - d).cwiseAbs().maxCoeff());
      }
    }
    const Matrix set = random_neighbor_set(fb.layout, n, rng, fb.distance_range);
    const Matrix a = mean_enc.forward(shared, policy::SetBatch::single(set));
    const Matrix c = soft_enc.forward(shared, policy::SetBatch::single(set));
    rep.softmax_alpha0 = std::max(rep.softmax_alpha0, (a - c).cwiseAbs().maxCoeff());
    ++rep.sets;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reward oracles: plain pairwise loops, written independently of the library.

inline double oracle_distance(const env::AgentState& a, double bx, double by, const env::WorldConfig& w) {
  double dx = bx - a.x;
  double dy = by - a.y;
  if (w.boundary == env::Boundary::toroidal) {
    dx -= w.x_max * std::round(dx / w.x_max);
    dy -= w.y_max * std::round(dy / w.y_max);
  }
  return std::sqrt(dx * dx + dy * dy);
}

inline double oracle_rendezvous(const std::vector<env::AgentState>& s, const std::vector<env::Action>& a,
                                const env::TaskConfig& t, const env::WorldConfig& w) {
  const double dc = t.observability == env::Observability::local ? t.comm_radius : std::max(w.x_max, w.y_max);
  const double n = static_cast<double>(s.size());
  const double alpha = -1.0 / (n * (n - 1.0) / 2.0 * dc);
  double r = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (i < j) r += alpha * std::min(oracle_distance(s[i], s[j].x, s[j].y, w), dc);
  double sq = 0.0;
  for (const auto& x : a) sq += x.linear * x.linear + x.angular * x.angular;
  return r + t.action_penalty * std::sqrt(sq);
}

inline double oracle_pursuit(const std::vector<env::AgentState>& s, const env::EvaderState& e,
                             const env::TaskConfig& t, const env::WorldConfig& w) {
  const double d_o = t.observability == env::Observability::local
                         ? t.obs_radius
                         : (w.boundary == env::Boundary::toroidal ? std::hypot(w.x_max / 2, w.y_max / 2)
                                                                  : std::hypot(w.x_max, w.y_max));
  double best = 1e300;
  for (const auto& a : s) best = std::min(best, oracle_distance(a, e.x, e.y, w));
  return -std::min(best, d_o) / d_o;
}

inline double oracle_multi(const std::vector<env::AgentState>& s, const std::vector<env::EvaderState>& es,
                           const env::TaskConfig& t, const env::WorldConfig& w) {
  double r = 0.0;
  for (const auto& e : es) {
    bool caught = false;
    for (const auto& a : s) caught = caught || oracle_distance(a, e.x, e.y, w) <= t.capture_radius;
    r += caught ? 1.0 : 0.0;
  }
  return r;
}

/// Worst absolute difference between library rewards and the loop oracles
/// over `count` random configurations (all three reward kinds, both
/// boundaries and observabilities, random actions).
inline double check_rewards(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  std::uniform_int_distribution<int> un(2, 30);
  std::uniform_real_distribution<double> u01(0.0, 1.0), ua(-1.0, 1.0);
  for (int k = 0; k < count; ++k) {
    env::WorldConfig w;
    w.x_max = 50.0 + 100.0 * u01(rng);
    w.y_max = 50.0 + 100.0 * u01(rng);
    w.boundary = k % 2 ? env::Boundary::toroidal : env::Boundary::closed;
    env::TaskConfig t;
    t.n_agents = un(rng);
    t.observability = (k / 2) % 2 ? env::Observability::local : env::Observability::global;
    t.comm_radius = 5.0 + 60.0 * u01(rng);
    t.obs_radius = 5.0 + 40.0 * u01(rng);
    t.capture_radius = 1.0 + 10.0 * u01(rng);
    std::vector<env::AgentState> s(static_cast<std::size_t>(t.n_agents));
    // Clustered agents so both sides of every cut-off are exercised.
    const double cx = w.x_max * u01(rng), cy = w.y_max * u01(rng), spread = 60.0 * u01(rng) + 1.0;
    for (auto& a : s) {
      a.x = std::fmod(cx + spread * ua(rng) + w.x_max, w.x_max);
      a.y = std::fmod(cy + spread * ua(rng) + w.y_max, w.y_max);
      a.phi = 2 * M_PI * u01(rng);
    }
    std::vector<env::Action> acts(s.size());
    for (auto& a : acts) a = env::clamp_action({ua(rng), ua(rng)}, t);
    worst = std::max(worst, std::abs(env::reward_rendezvous(s, acts, t, w) - oracle_rendezvous(s, acts, t, w)));

    const env::EvaderState e{w.x_max * u01(rng), w.y_max * u01(rng)};
    worst = std::max(worst, std::abs(env::reward_pursuit(s, e, t, w) - oracle_pursuit(s, e, t, w)));

    std::vector<env::EvaderState> es(5);
    for (auto& x : es) {
      const auto& near = s[static_cast<std::size_t>(k) % s.size()];
      x = u01(rng) < 0.5 ? env::EvaderState{w.x_max * u01(rng), w.y_max * u01(rng)}
                         : env::EvaderState{std::clamp(near.x + 3.0 * ua(rng), 0.0, w.x_max),
                                            std::clamp(near.y + 3.0 * ua(rng), 0.0, w.y_max)};
    }
    worst = std::max(worst, std::abs(env::reward_multi_evader(s, es, t, w) - oracle_multi(s, es, t, w)));
  }
  return worst;
}

}  // namespace oracle
