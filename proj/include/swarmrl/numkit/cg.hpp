#pragma once

#include <cmath>
#include <string>

#include "swarmrl/numkit/types.hpp"

namespace swarmrl::numkit {

struct CgResult {
  Vector x;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Conjugate gradient for A x = b with A symmetric positive definite, given
/// only as a matrix-free operator. Starts from x = 0 and stops once
/// ‖b − A x‖ ≤ residual_tol or after max_iters iterations.
template <typename ApplyA>
CgResult conjugate_gradient(ApplyA&& apply_a, const Vector& b, int max_iters, double residual_tol) {
  require_finite(b, "conjugate_gradient rhs");
  CgResult res;
  res.x = Vector::Zero(b.size());
  Vector r = b;
  Vector p = r;
  double rr = r.squaredNorm();
  res.residual_norm = std::sqrt(rr);
  for (int it = 0; it < max_iters && res.residual_norm > residual_tol; ++it) {
    const Vector ap = apply_a(p);
    require_shape(ap.size() == b.size(), "conjugate_gradient: operator output length");
    const double pap = p.dot(ap);
    if (!std::isfinite(pap) || pap <= 0.0)
      throw NumericError("conjugate_gradient: operator not positive definite (pᵀAp = " + std::to_string(pap) + ")");
    const double alpha = rr / pap;
    res.x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    const double rr_new = r.squaredNorm();
    if (!std::isfinite(rr_new)) throw NumericError("conjugate_gradient: non-finite residual");
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    res.residual_norm = std::sqrt(rr);
    res.iterations = it + 1;
  }
  return res;
}

}  // namespace swarmrl::numkit
