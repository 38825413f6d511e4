#pragma once

#include <cmath>
#include <string>
#include <tuple>
#include <utility>

#include "swarmrl/numkit/cg.hpp"
#include "swarmrl/numkit/gaussian.hpp"
#include "swarmrl/policy/network.hpp"
#include "swarmrl/trpo/batch.hpp"

namespace swarmrl::trpo {

/// Surrogate objective, mean KL and Fisher products for one batch, all
/// relative to the behaviour parameters θ_old the batch was sampled with.
class TrpoObjective {
 public:
  TrpoObjective(const policy::PolicyNetwork& net, const Vector& old_params, const Batch& batch)
      : net_(net), old_params_(old_params), batch_(batch) {
    numkit::require_shape(batch.advantages.size() == batch.size(), "TrpoObjective: advantages not computed");
    old_means_ = net_.forward(old_params_, batch_.obs, &old_cache_);
    old_log_std_ = net_.log_std(old_params_);
  }

  double batch_size() const { return static_cast<double>(std::max<Index>(1, batch_.size())); }

  /// mean_b exp(logπ_θ − logπ_θold) Â_b.
  double surrogate(const Vector& params) const {
    return surrogate_from_means(net_.forward(params, batch_.obs), net_.log_std(params));
  }

  Vector surrogate_gradient(const Vector& params) const {
    policy::PolicyNetwork::Cache cache;
    const Matrix means = net_.forward(params, batch_.obs, &cache);
    const Vector ls = net_.log_std(params);
    const Vector logp = numkit::gaussian_logprob_batch(means, ls, batch_.actions);
    const Vector coef = ((logp - batch_.logp_old).array().exp() * batch_.advantages.array()).matrix() / batch_size();
    const Eigen::RowVectorXd inv_var = (-2.0 * ls.array()).exp().matrix().transpose();
    const Matrix diff = batch_.actions - means;
    const Matrix up = (diff.array().rowwise() * inv_var.array()).colwise() * coef.array();
    Vector grad = Vector::Zero(params.size());
    net_.backward(params, batch_.obs, cache, up, grad);
    const Matrix z2 = diff.array().square().rowwise() * inv_var.array();
    grad.segment(net_.log_std_offset(), ls.size()) = ((z2.array() - 1.0).colwise() * coef.array()).colwise().sum().transpose();
    return grad;
  }

  /// Batch mean of KL(π_θold(·|o) ‖ π_θ(·|o)).
  double mean_kl(const Vector& params) const { return kl_from_means(net_.forward(params, batch_.obs), net_.log_std(params)); }

  /// Surrogate and mean KL from a single forward pass.
  std::pair<double, double> evaluate(const Vector& params) const {
    const Matrix means = net_.forward(params, batch_.obs);
    const Vector ls = net_.log_std(params);
    return {surrogate_from_means(means, ls), kl_from_means(means, ls)};
  }

 private:
  double surrogate_from_means(const Matrix& means, const Vector& ls) const {
    const Vector logp = numkit::gaussian_logprob_batch(means, ls, batch_.actions);
    const Vector ratio = (logp - batch_.logp_old).array().exp().matrix();
    const double value = ratio.dot(batch_.advantages) / batch_size();
    if (!std::isfinite(value)) throw numkit::NumericError("surrogate: non-finite probability ratio");
    return value;
  }

  double kl_from_means(const Matrix& means, const Vector& ls) const {
    const Eigen::RowVectorXd inv_var_new = (-2.0 * ls.array()).exp().matrix().transpose();
    const Eigen::RowVectorXd var_old = (2.0 * old_log_std_.array()).exp().matrix().transpose();
    const double const_part = (ls - old_log_std_).sum() - 0.5 * static_cast<double>(ls.size()) +
                              0.5 * var_old.cwiseProduct(inv_var_new).sum();
    const double quad = 0.5 * ((old_means_ - means).array().square().rowwise() * inv_var_new.array()).sum() /
                        batch_size();
    const double kl = const_part + quad;
    return kl > 0.0 ? kl : 0.0;
  }

 public:
  Vector mean_kl_gradient(const Vector& params) const {
    policy::PolicyNetwork::Cache cache;
    const Matrix means = net_.forward(params, batch_.obs, &cache);
    const Vector ls = net_.log_std(params);
    const Eigen::RowVectorXd inv_var_new = (-2.0 * ls.array()).exp().matrix().transpose();
    const Eigen::RowVectorXd var_old = (2.0 * old_log_std_.array()).exp().matrix().transpose();
    const Matrix diff = means - old_means_;
    const Matrix up = (diff.array().rowwise() * inv_var_new.array()) / batch_size();
    Vector grad = Vector::Zero(params.size());
    net_.backward(params, batch_.obs, cache, up, grad);
    const Eigen::RowVectorXd mean_sq = diff.array().square().colwise().sum() / batch_size();
    grad.segment(net_.log_std_offset(), ls.size()) =
        (1.0 - (var_old + mean_sq).array() * inv_var_new.array()).matrix().transpose();
    return grad;
  }

  /// (F + damping·I) v with F the Hessian of mean_kl at θ_old, computed as
  /// Jᵀ diag(1/σ²) J for the mean and 2·I for log_std.
  Vector fisher_vector_product(const Vector& v, double damping) const {
    numkit::require_shape(v.size() == old_params_.size(), "fisher_vector_product: length mismatch");
    const Matrix jv = net_.jvp(old_params_, batch_.obs, old_cache_, v);
    const Eigen::RowVectorXd inv_var = (-2.0 * old_log_std_.array()).exp().matrix().transpose();
    const Matrix up = (jv.array().rowwise() * inv_var.array()) / batch_size();
    Vector out = Vector::Zero(v.size());
    net_.backward(old_params_, batch_.obs, old_cache_, up, out);
    const Index lo = net_.log_std_offset();
    out.segment(lo, old_log_std_.size()) = 2.0 * v.segment(lo, old_log_std_.size());
    out += damping * v;
    numkit::require_finite(out, "fisher_vector_product");
    return out;
  }

 private:
  const policy::PolicyNetwork& net_;
  Vector old_params_;
  const Batch& batch_;
  policy::PolicyNetwork::Cache old_cache_;
  Matrix old_means_;
  Vector old_log_std_;
};

struct TrpoConfig {
  double max_kl = 0.01;
  int cg_iters = 10;
  double cg_damping = 0.1;
  double cg_residual_tol = 1e-10;
  int backtrack_steps = 10;
  double backtrack_factor = 0.8;
};

struct TrpoStats {
  bool accepted = false;
  double surrogate_before = 0.0;
  double surrogate_after = 0.0;
  double mean_kl = 0.0;
  double step_fraction = 0.0;
  int cg_iterations = 0;
  double cg_residual = 0.0;
  std::string diagnostic;

  double improvement() const { return surrogate_after - surrogate_before; }
};

/// Natural-gradient step with a KL trust region: solve F s = g by CG, scale
/// to the boundary √(2δ / sᵀF s), then backtrack until the surrogate improves
/// and the mean KL is within δ. Leaves params unchanged when nothing passes.
inline TrpoStats trpo_update(policy::Policy& pol, const Batch& batch, const TrpoConfig& cfg) {
  TrpoStats st;
  const Vector old = pol.params;
  const TrpoObjective obj(pol.net, old, batch);
  st.surrogate_before = obj.surrogate(old);
  st.surrogate_after = st.surrogate_before;
  const Vector g = obj.surrogate_gradient(old);
  if (!g.allFinite()) {
    st.diagnostic = "non-finite policy gradient";
    return st;
  }
  if (g.norm() < 1e-12) {
    st.diagnostic = "zero gradient";
    return st;
  }
  numkit::CgResult cg;
  try {
    cg = numkit::conjugate_gradient([&](const Vector& p) { return obj.fisher_vector_product(p, cfg.cg_damping); }, g,
                                    cfg.cg_iters, cfg.cg_residual_tol);
  } catch (const numkit::NumericError& e) {
    st.diagnostic = std::string("conjugate gradient breakdown: ") + e.what();
    return st;
  }
  st.cg_iterations = cg.iterations;
  st.cg_residual = cg.residual_norm;
  const double shs = cg.x.dot(obj.fisher_vector_product(cg.x, cfg.cg_damping));
  if (!(shs > 0.0) || !std::isfinite(shs)) {
    st.diagnostic = "degenerate search direction";
    return st;
  }
  const Vector full_step = std::sqrt(2.0 * cfg.max_kl / shs) * cg.x;
  double fraction = 1.0;
  for (int k = 0; k < cfg.backtrack_steps; ++k, fraction *= cfg.backtrack_factor) {
    const Vector candidate = old + fraction * full_step;
    double surr = 0.0;
    double kl = 0.0;
    try {
      std::tie(surr, kl) = obj.evaluate(candidate);
    } catch (const numkit::NumericError&) {
      continue;
    }
    if (std::isfinite(surr) && std::isfinite(kl) && surr - st.surrogate_before > 0.0 && kl <= cfg.max_kl) {
      pol.params = candidate;
      st.accepted = true;
      st.surrogate_after = surr;
      st.mean_kl = kl;
      st.step_fraction = fraction;
      return st;
    }
  }
  st.diagnostic = "line search rejected every step";
  return st;
}

}  // namespace swarmrl::trpo
