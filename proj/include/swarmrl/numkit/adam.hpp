#pragma once

#include <cmath>

#include "swarmrl/numkit/types.hpp"

namespace swarmrl::numkit {

class Adam {
 public:
  explicit Adam(Index size, double step_size = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(Vector::Zero(size)), v_(Vector::Zero(size)), lr_(step_size), b1_(beta1), b2_(beta2), eps_(eps) {}

  /// Descends along `grad`.
  void step(VecRef params, const Vector& grad) {
    require_shape(params.size() == m_.size() && grad.size() == m_.size(), "Adam: size mismatch");
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * grad;
    v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseAbs2();
    const double a = lr_ * std::sqrt(1.0 - std::pow(b2_, t_)) / (1.0 - std::pow(b1_, t_));
    params.array() -= a * m_.array() / (v_.array().sqrt() + eps_);
  }

 private:
  Vector m_;
  Vector v_;
  double lr_;
  double b1_;
  double b2_;
  double eps_;
  int t_ = 0;
};

}  // namespace swarmrl::numkit
