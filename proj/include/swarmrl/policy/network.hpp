#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "swarmrl/env/config.hpp"
#include "swarmrl/env/kinematics.hpp"
#include "swarmrl/numkit/gaussian.hpp"
#include "swarmrl/numkit/mlp.hpp"
#include "swarmrl/policy/encoders.hpp"
#include "swarmrl/policy/features.hpp"

namespace swarmrl::policy {

using numkit::DiagGaussian;

struct NetworkSpec {
  EmbeddingSpec embedding;
  std::vector<Index> trunk_hidden{64};
  Activation trunk_activation = Activation::relu;
  double init_log_std = std::log(0.6);
  double head_init_scale = 0.01;

  bool operator==(const NetworkSpec&) const = default;
};

/// Set encoder(s) → concatenation with local features and empty-set
/// indicators → fully connected trunk → linear head. The same assembly serves
/// the policy (head = action mean, plus a free log_std vector) and the value
/// function (scalar head).
///
/// Flat layout: [neighbour encoder | evader encoder | trunk | log_std].
class PolicyNetwork {
 public:
  struct Cache {
    SetEncoder::Cache neighbors;
    SetEncoder::Cache evaders;
    numkit::MlpCache trunk;
  };

  PolicyNetwork() = default;

  PolicyNetwork(FeatureSpec features, NetworkSpec spec, Index output_dim, bool with_log_std)
      : features_(std::move(features)), spec_(std::move(spec)), out_dim_(output_dim), with_log_std_(with_log_std) {
    nbr_ = SetEncoder(spec_.embedding, features_.neighbor_dim(), features_.neighbor_scale, features_.distance_range);
    if (features_.has_evader_set()) {
      EmbeddingSpec ev = spec_.embedding;
      ev.max_neighbors = std::max<Index>(1, spec_.embedding.max_evaders);
      ev_ = SetEncoder(ev, features_.evader_dim(), features_.evader_scale, features_.distance_range);
    }
    trunk_ = MlpSpec::make(trunk_input_dim(), spec_.trunk_hidden, spec_.trunk_activation, out_dim_);
    trunk_.validate();
    nbr_offset_ = 0;
    ev_offset_ = nbr_.param_count();
    trunk_offset_ = ev_offset_ + (features_.has_evader_set() ? ev_.param_count() : 0);
    log_std_offset_ = trunk_offset_ + trunk_.param_count();
    total_ = log_std_offset_ + (with_log_std_ ? out_dim_ : 0);
  }

  const FeatureSpec& features() const { return features_; }
  const NetworkSpec& spec() const { return spec_; }
  const SetEncoder& neighbor_encoder() const { return nbr_; }
  const SetEncoder& evader_encoder() const { return ev_; }
  const MlpSpec& trunk() const { return trunk_; }
  Index output_dim() const { return out_dim_; }
  bool has_log_std() const { return with_log_std_; }
  Index param_count() const { return total_; }
  Index log_std_offset() const { return log_std_offset_; }
  /// Number of parameters feeding the mean (everything but log_std).
  Index mean_param_count() const { return log_std_offset_; }

  Index embedding_dim() const { return nbr_.output_dim(); }

  Index trunk_input_dim() const {
    Index d = nbr_.output_dim() + 1 + features_.local_dim();
    if (features_.has_evader_set()) d += ev_.output_dim() + 1;
    return d;
  }

  numkit::ParamLayout layout() const {
    numkit::ParamLayout lay;
    lay.append(nbr_.layout(), "neighbors.");
    if (features_.has_evader_set()) lay.append(ev_.layout(), "evaders.");
    lay.append(trunk_.layout(), "trunk.");
    if (with_log_std_) lay.add("log_std", out_dim_, 1);
    return lay;
  }

  template <typename Rng>
  Vector init(Rng& rng) const {
    Vector p = Vector::Zero(total_);
    if (nbr_.param_count() > 0) p.segment(nbr_offset_, nbr_.param_count()) = nbr_.init(rng);
    if (features_.has_evader_set() && ev_.param_count() > 0) p.segment(ev_offset_, ev_.param_count()) = ev_.init(rng);
    p.segment(trunk_offset_, trunk_.param_count()) = numkit::mlp_init(trunk_, rng, spec_.head_init_scale);
    if (with_log_std_) p.segment(log_std_offset_, out_dim_).setConstant(spec_.init_log_std);
    return p;
  }

  Vector log_std(const Vector& params) const {
    numkit::require_shape(with_log_std_, "network has no log_std");
    return params.segment(log_std_offset_, out_dim_);
  }

  /// B x output_dim head outputs (action means or values).
  Matrix forward(const Vector& params, const ObsBatch& batch, Cache* cache = nullptr) const {
    numkit::require_shape(params.size() == total_, "PolicyNetwork: parameter length mismatch");
    numkit::require_shape(batch.local.cols() == features_.local_dim(), "PolicyNetwork: local feature width mismatch");
    numkit::require_shape(batch.neighbors.size() == batch.size(), "PolicyNetwork: neighbour batch size mismatch");
    Cache local;
    Cache& c = cache ? *cache : local;
    const Matrix x = trunk_input(params, batch, c);
    return numkit::mlp_forward_batch(trunk_, params.segment(trunk_offset_, trunk_.param_count()), x, &c.trunk);
  }

  /// Accumulates d(Σ upstream ⊙ output)/dθ into grad (log_std untouched).
  void backward(const Vector& params, const ObsBatch& batch, const Cache& c, const Matrix& upstream,
                VecRef grad) const {
    numkit::require_shape(grad.size() == total_, "PolicyNetwork: gradient length mismatch");
    const Matrix dx = numkit::mlp_backward_batch(trunk_, params.segment(trunk_offset_, trunk_.param_count()), c.trunk,
                                                 upstream, grad.segment(trunk_offset_, trunk_.param_count()), true);
    const Index k1 = nbr_.output_dim();
    if (nbr_.param_count() > 0)
      nbr_.backward(params.segment(nbr_offset_, nbr_.param_count()), batch.neighbors, c.neighbors,
                    dx.leftCols(k1), grad.segment(nbr_offset_, nbr_.param_count()));
    if (features_.has_evader_set() && ev_.param_count() > 0)
      ev_.backward(params.segment(ev_offset_, ev_.param_count()), batch.evaders, c.evaders,
                   dx.middleCols(k1 + 1, ev_.output_dim()), grad.segment(ev_offset_, ev_.param_count()));
  }

  /// Directional derivative of the head output along `tangent` (log_std part
  /// ignored).
  Matrix jvp(const Vector& params, const ObsBatch& batch, const Cache& c, const Vector& tangent) const {
    numkit::require_shape(tangent.size() == total_, "PolicyNetwork: tangent length mismatch");
    Matrix dx = Matrix::Zero(batch.size(), trunk_.input_dim);
    const Index k1 = nbr_.output_dim();
    if (nbr_.param_count() > 0)
      dx.leftCols(k1) = nbr_.jvp(params.segment(nbr_offset_, nbr_.param_count()), batch.neighbors, c.neighbors,
                                 tangent.segment(nbr_offset_, nbr_.param_count()));
    if (features_.has_evader_set() && ev_.param_count() > 0)
      dx.middleCols(k1 + 1, ev_.output_dim()) = ev_.jvp(params.segment(ev_offset_, ev_.param_count()), batch.evaders,
                                                        c.evaders, tangent.segment(ev_offset_, ev_.param_count()));
    return numkit::mlp_jvp_batch(trunk_, params.segment(trunk_offset_, trunk_.param_count()), c.trunk,
                                 tangent.segment(trunk_offset_, trunk_.param_count()), &dx);
  }

 private:
  Matrix trunk_input(const Vector& params, const ObsBatch& batch, Cache& c) const {
    const Index B = batch.size();
    Matrix x(B, trunk_.input_dim);
    Index col = 0;
    const Index k1 = nbr_.output_dim();
    x.middleCols(col, k1) = nbr_.forward(params.segment(nbr_offset_, nbr_.param_count()), batch.neighbors, &c.neighbors);
    col += k1;
    for (Index b = 0; b < B; ++b) x(b, col) = batch.neighbors.count(b) == 0 ? 1.0 : 0.0;
    col += 1;
    if (features_.has_evader_set()) {
      numkit::require_shape(batch.evaders.size() == B, "PolicyNetwork: evader batch size mismatch");
      const Index k2 = ev_.output_dim();
      x.middleCols(col, k2) = ev_.forward(params.segment(ev_offset_, ev_.param_count()), batch.evaders, &c.evaders);
      col += k2;
      for (Index b = 0; b < B; ++b) x(b, col) = batch.evaders.count(b) == 0 ? 1.0 : 0.0;
      col += 1;
    }
    if (features_.local_dim() > 0)
      x.middleCols(col, features_.local_dim()) =
          batch.local.array().rowwise() * features_.local_scale.transpose().array();
    return x;
  }

  FeatureSpec features_;
  NetworkSpec spec_;
  Index out_dim_ = 2;
  bool with_log_std_ = true;
  SetEncoder nbr_;
  SetEncoder ev_;
  MlpSpec trunk_;
  Index nbr_offset_ = 0;
  Index ev_offset_ = 0;
  Index trunk_offset_ = 0;
  Index log_std_offset_ = 0;
  Index total_ = 0;
};

/// Action distribution of one agent.
inline DiagGaussian policy_forward(const env::ObservationSet& obs, const PolicyNetwork& net, const Vector& params) {
  const ObsBatch b = make_obs_batch(std::vector<const env::ObservationSet*>{&obs}, net.features());
  const Matrix mean = net.forward(params, b);
  return {mean.row(0).transpose(), net.log_std(params)};
}

/// mean + std ⊙ ε, ε ~ N(0, I); unclamped.
template <typename Rng>
Vector sample_raw(const DiagGaussian& d, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector a(d.dim());
  for (Index k = 0; k < d.dim(); ++k) a[k] = d.mean[k] + std::exp(d.log_std[k]) * n01(rng);
  return a;
}

inline env::Action to_action(const Vector& raw, const env::TaskConfig& task) {
  numkit::require_shape(raw.size() == 2, "actions are two-dimensional");
  return env::clamp_action({raw[0], raw[1]}, task);
}

template <typename Rng>
env::Action sample_action(const DiagGaussian& d, Rng& rng, const env::TaskConfig& task) {
  return to_action(sample_raw(d, rng), task);
}

/// Policy network plus its parameters.
struct Policy {
  PolicyNetwork net;
  Vector params;
};

/// Value network plus the return normalisation its head is expressed in:
/// V(o) = ret_mean + ret_std · head(o).
struct ValueFunction {
  PolicyNetwork net;
  Vector params;
  double ret_mean = 0.0;
  double ret_std = 1.0;

  Vector predict(const ObsBatch& batch) const {
    const Matrix h = net.forward(params, batch);
    return (ret_mean + ret_std * h.col(0).array()).matrix();
  }
};

template <typename Rng>
Policy make_policy(const FeatureSpec& features, const NetworkSpec& spec, Rng& rng) {
  Policy p{PolicyNetwork(features, spec, 2, true), {}};
  p.params = p.net.init(rng);
  return p;
}

template <typename Rng>
ValueFunction make_value_function(const FeatureSpec& features, const NetworkSpec& spec, Rng& rng) {
  NetworkSpec vs = spec;
  vs.head_init_scale = 1.0;
  ValueFunction v{PolicyNetwork(features, vs, 1, false), {}, 0.0, 1.0};
  v.params = v.net.init(rng);
  return v;
}

}  // namespace swarmrl::policy
