#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "swarmrl/numkit/adam.hpp"
#include "swarmrl/policy/network.hpp"
#include "swarmrl/trpo/batch.hpp"

namespace swarmrl::trpo {

struct ValueFitConfig {
  int epochs = 5;
  double step_size = 1e-3;
  Index minibatch = 128;
};

struct ValueFitStats {
  double mse_before = 0.0;
  double mse_after = 0.0;
};

/// Regresses the value network on the batch returns with minibatch Adam.
/// Before fitting, the head is re-expressed in the batch's return statistics
/// without changing any prediction (output-preserving renormalisation).
class ValueFitter {
 public:
  ValueFitter(Index param_count, ValueFitConfig cfg) : cfg_(cfg), adam_(param_count, cfg.step_size) {}

  template <typename Rng>
  ValueFitStats fit(policy::ValueFunction& vf, const Batch& b, Rng& rng) {
    numkit::require_shape(b.returns.size() == b.size(), "fit_value: returns not computed");
    ValueFitStats st;
    st.mse_before = (vf.predict(b.obs) - b.returns).squaredNorm() / std::max<double>(1.0, static_cast<double>(b.size()));
    if (cfg_.epochs <= 0 || b.size() == 0) {
      st.mse_after = st.mse_before;
      return st;
    }
    renormalise(vf, b.returns);

    const Vector targets = ((b.returns.array() - vf.ret_mean) / vf.ret_std).matrix();
    std::vector<Index> order(static_cast<std::size_t>(b.size()));
    std::iota(order.begin(), order.end(), Index{0});
    const Index mb = std::max<Index>(1, cfg_.minibatch);
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (Index start = 0; start < b.size(); start += mb) {
        const Index len = std::min(mb, b.size() - start);
        std::vector<Index> rows(order.begin() + start, order.begin() + start + len);
        const policy::ObsBatch ob = policy::select_rows(b.obs, rows);
        policy::PolicyNetwork::Cache cache;
        const Matrix pred = vf.net.forward(vf.params, ob, &cache);
        Matrix up(len, 1);
        for (Index k = 0; k < len; ++k)
          up(k, 0) = 2.0 * (pred(k, 0) - targets[rows[static_cast<std::size_t>(k)]]) / static_cast<double>(len);
        Vector grad = Vector::Zero(vf.params.size());
        vf.net.backward(vf.params, ob, cache, up, grad);
        numkit::require_finite(grad, "value fit gradient");
        adam_.step(vf.params, grad);
      }
    }
    const Vector after = vf.predict(b.obs);
    if (!after.allFinite()) throw numkit::NumericError("value fit diverged");
    st.mse_after = (after - b.returns).squaredNorm() / static_cast<double>(b.size());
    return st;
  }

 private:
  static void renormalise(policy::ValueFunction& vf, const Vector& returns) {
    const double mean = returns.mean();
    // A (near-)constant batch keeps the previous scale; dividing by its tiny
    // spread would blow the head weights up.
    const double spread = std::sqrt((returns.array() - mean).square().mean());
    const double sd = spread > 1e-6 * std::max(1.0, std::abs(mean)) ? spread : vf.ret_std;
    // Head is the last trunk layer: W (1 x H) and b (1).
    const auto& trunk = vf.net.trunk();
    const Index h = trunk.layers.size() > 1 ? trunk.layers[trunk.layers.size() - 2].size : trunk.input_dim;
    const Index head = vf.net.mean_param_count() - (h + 1);
    const double ratio = vf.ret_std / sd;
    vf.params.segment(head, h) *= ratio;
    vf.params[head + h] = (vf.ret_std * vf.params[head + h] + vf.ret_mean - mean) / sd;
    vf.ret_mean = mean;
    vf.ret_std = sd;
  }

  ValueFitConfig cfg_;
  numkit::Adam adam_;
};

}  // namespace swarmrl::trpo
