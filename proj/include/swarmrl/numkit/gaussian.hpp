#pragma once

#include <cmath>
#include <numbers>

#include "swarmrl/numkit/types.hpp"

namespace swarmrl::numkit {

/// Diagonal Gaussian with a state-independent log standard deviation.
struct DiagGaussian {
  Vector mean;
  Vector log_std;

  Index dim() const { return mean.size(); }
  Vector std() const { return log_std.array().exp().matrix(); }
};

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2π)

inline double gaussian_logprob(const DiagGaussian& d, const Vector& action) {
  require_shape(d.mean.size() == d.log_std.size() && action.size() == d.mean.size(), "gaussian_logprob: dims");
  double lp = 0.0;
  for (Index k = 0; k < action.size(); ++k) {
    const double z = (action[k] - d.mean[k]) * std::exp(-d.log_std[k]);
    lp += -0.5 * z * z - d.log_std[k] - 0.5 * kLog2Pi;
  }
  return lp;
}

/// KL(old ‖ new).
inline double gaussian_kl(const DiagGaussian& old_d, const DiagGaussian& new_d) {
  require_shape(old_d.dim() == new_d.dim() && old_d.log_std.size() == old_d.dim() &&
                    new_d.log_std.size() == new_d.dim(),
                "gaussian_kl: dims");
  double kl = 0.0;
  for (Index k = 0; k < old_d.dim(); ++k) {
    const double var_old = std::exp(2.0 * old_d.log_std[k]);
    const double var_new = std::exp(2.0 * new_d.log_std[k]);
    const double dm = old_d.mean[k] - new_d.mean[k];
    kl += new_d.log_std[k] - old_d.log_std[k] + (var_old + dm * dm) / (2.0 * var_new) - 0.5;
  }
  // Identical arguments must give exactly zero; cancellation can leave a
  // tiny negative residue otherwise.
  return kl > 0.0 ? kl : 0.0;
}

inline double gaussian_entropy(const DiagGaussian& d) {
  return d.log_std.sum() + 0.5 * static_cast<double>(d.dim()) * (1.0 + kLog2Pi);
}

/// Row-wise log densities for a batch of means sharing one log_std.
inline Vector gaussian_logprob_batch(const Matrix& means, const Vector& log_std, const Matrix& actions) {
  require_shape(means.rows() == actions.rows() && means.cols() == actions.cols() && means.cols() == log_std.size(),
                "gaussian_logprob_batch: dims");
  const Eigen::RowVectorXd inv_std = (-log_std.array()).exp().matrix().transpose();
  const Matrix z = (actions - means).array().rowwise() * inv_std.array();
  const double norm = log_std.sum() + 0.5 * kLog2Pi * static_cast<double>(log_std.size());
  return (-0.5 * z.rowwise().squaredNorm()).array() - norm;
}

}  // namespace swarmrl::numkit
