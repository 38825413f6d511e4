#pragma once

#include <cmath>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "swarmrl/numkit/params.hpp"
#include "swarmrl/numkit/types.hpp"

namespace swarmrl::numkit {

enum class Activation { identity, relu, tanh, elu, sigmoid };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::elu: return "elu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "identity" || s == "linear") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "elu") return Activation::elu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

struct MlpLayer {
  Index size = 0;
  Activation activation = Activation::relu;
};

/// Fully connected network. Each layer computes h(W x + b) with W stored
/// (out x in) row-major followed by b, layer after layer.
struct MlpSpec {
  Index input_dim = 0;
  std::vector<MlpLayer> layers;

  /// Hidden layers share one activation; the output layer gets `out_act`.
  static MlpSpec make(Index input_dim, const std::vector<Index>& hidden, Activation hidden_act, Index output_dim,
                      Activation out_act = Activation::identity) {
    MlpSpec s;
    s.input_dim = input_dim;
    for (Index h : hidden) s.layers.push_back({h, hidden_act});
    s.layers.push_back({output_dim, out_act});
    return s;
  }

  void validate() const {
    require_shape(input_dim >= 1, "MlpSpec: input_dim must be >= 1");
    require_shape(!layers.empty(), "MlpSpec: at least one layer required");
    for (const auto& l : layers) require_shape(l.size >= 1, "MlpSpec: layer sizes must be >= 1");
  }

  Index output_dim() const { return layers.empty() ? input_dim : layers.back().size; }

  Index param_count() const {
    Index n = 0;
    Index in = input_dim;
    for (const auto& l : layers) {
      n += l.size * in + l.size;
      in = l.size;
    }
    return n;
  }

  ParamLayout layout() const {
    ParamLayout lay;
    Index in = input_dim;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      lay.add("W" + std::to_string(i), layers[i].size, in);
      lay.add("b" + std::to_string(i), layers[i].size, 1);
      in = layers[i].size;
    }
    return lay;
  }

  bool operator==(const MlpSpec&) const = default;
};

namespace detail {

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::elu: return z > 0.0 ? z : std::expm1(z);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

inline double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::elu: return z > 0.0 ? 1.0 : std::exp(z);
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

inline Matrix apply(Activation a, const Matrix& z) {
  if (a == Activation::identity) return z;
  if (a == Activation::relu) return z.cwiseMax(0.0);
  return z.unaryExpr([a](double v) { return activate(a, v); });
}

inline Matrix derivative(Activation a, const Matrix& z) {
  if (a == Activation::identity) return Matrix::Ones(z.rows(), z.cols());
  if (a == Activation::relu) return (z.array() > 0.0).cast<double>().matrix();
  return z.unaryExpr([a](double v) { return activate_derivative(a, v); });
}

struct LayerView {
  Eigen::Map<const Matrix> w;
  Eigen::Map<const Eigen::RowVectorXd> b;
};

inline LayerView layer_view(const double* base, Index in, Index out) {
  return {Eigen::Map<const Matrix>(base, out, in), Eigen::Map<const Eigen::RowVectorXd>(base + out * in, out)};
}

}  // namespace detail

/// Intermediate values kept by a batched forward pass for the backward and
/// tangent passes.
struct MlpCache {
  std::vector<Matrix> inputs;  // input to each layer, B x in
  std::vector<Matrix> pre;     // pre-activation of each layer, B x out
};

/// Row-batched forward pass: each row of `x` is one input.
inline Matrix mlp_forward_batch(const MlpSpec& spec, ConstVecRef params, const Matrix& x, MlpCache* cache = nullptr) {
  require_shape(params.size() == spec.param_count(), "mlp: parameter length mismatch");
  require_shape(x.cols() == spec.input_dim, "mlp: input width " + std::to_string(x.cols()) + " != " +
                                                std::to_string(spec.input_dim));
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  const double* p = params.data();
  Matrix a = x;
  Index in = spec.input_dim;
  for (const auto& layer : spec.layers) {
    const auto v = detail::layer_view(p, in, layer.size);
    Matrix z = a * v.w.transpose();
    z.rowwise() += v.b;
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre.push_back(z);
    }
    a = detail::apply(layer.activation, z);
    p += layer.size * in + layer.size;
    in = layer.size;
  }
  return a;
}

/// Reverse pass. `upstream` is dL/d(output), one row per input row. Adds
/// dL/dθ into `grad` (same layout as params) and returns dL/d(input) when
/// `want_input_grad` is set (an empty matrix otherwise).
inline Matrix mlp_backward_batch(const MlpSpec& spec, ConstVecRef params, const MlpCache& cache,
                                 const Matrix& upstream, VecRef grad, bool want_input_grad = false) {
  require_shape(grad.size() == spec.param_count(), "mlp: gradient length mismatch");
  require_shape(cache.pre.size() == spec.layers.size(), "mlp: cache does not match spec");
  require_shape(upstream.cols() == spec.output_dim() && upstream.rows() == cache.pre.back().rows(),
                "mlp: upstream shape mismatch");

  std::vector<Index> offsets(spec.layers.size());
  {
    Index off = 0;
    Index in = spec.input_dim;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
      offsets[l] = off;
      off += spec.layers[l].size * in + spec.layers[l].size;
      in = spec.layers[l].size;
    }
  }

  Matrix da = upstream;
  for (std::size_t li = spec.layers.size(); li-- > 0;) {
    const auto& layer = spec.layers[li];
    const Index in = cache.inputs[li].cols();
    Matrix dz = layer.activation == Activation::identity
                    ? da
                    : Matrix(da.cwiseProduct(detail::derivative(layer.activation, cache.pre[li])));
    Eigen::Map<Matrix> gw(grad.data() + offsets[li], layer.size, in);
    Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + offsets[li] + layer.size * in, layer.size);
    gw.noalias() += dz.transpose() * cache.inputs[li];
    gb += dz.colwise().sum();
    if (li > 0 || want_input_grad) {
      const auto v = detail::layer_view(params.data() + offsets[li], in, layer.size);
      da = dz * v.w;
    }
  }
  return want_input_grad ? da : Matrix{};
}

/// Forward-mode tangent: derivative of the output along parameter direction
/// `tangent` (and optionally input direction `input_tangent`).
inline Matrix mlp_jvp_batch(const MlpSpec& spec, ConstVecRef params, const MlpCache& cache, ConstVecRef tangent,
                            const Matrix* input_tangent = nullptr) {
  require_shape(tangent.size() == spec.param_count(), "mlp: tangent length mismatch");
  const Index rows = cache.inputs.front().rows();
  Matrix da = input_tangent ? *input_tangent : Matrix::Zero(rows, spec.input_dim);
  require_shape(da.rows() == rows && da.cols() == spec.input_dim, "mlp: input tangent shape mismatch");
  Index off = 0;
  Index in = spec.input_dim;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const auto& layer = spec.layers[li];
    const auto v = detail::layer_view(params.data() + off, in, layer.size);
    const auto t = detail::layer_view(tangent.data() + off, in, layer.size);
    Matrix dz = da * v.w.transpose() + cache.inputs[li] * t.w.transpose();
    dz.rowwise() += t.b;
    da = layer.activation == Activation::identity
             ? dz
             : Matrix(dz.cwiseProduct(detail::derivative(layer.activation, cache.pre[li])));
    off += layer.size * in + layer.size;
    in = layer.size;
  }
  return da;
}

inline Vector mlp_forward(const MlpSpec& spec, ConstVecRef params, const Vector& input) {
  require_shape(input.size() == spec.input_dim, "mlp_forward: input length mismatch");
  require_finite(input, "mlp_forward input");
  const Matrix x = input.transpose();
  return mlp_forward_batch(spec, params, x).row(0).transpose();
}

/// Gradient of upstream·f(input) with respect to the parameters.
inline Vector mlp_gradient(const MlpSpec& spec, ConstVecRef params, const Vector& input, const Vector& upstream) {
  require_shape(upstream.size() == spec.output_dim(), "mlp_gradient: upstream length mismatch");
  MlpCache cache;
  const Matrix x = input.transpose();
  mlp_forward_batch(spec, params, x, &cache);
  Vector grad = Vector::Zero(spec.param_count());
  const Matrix up = upstream.transpose();
  mlp_backward_batch(spec, params, cache, up, grad);
  return grad;
}

/// Uniform fan-in/fan-out initialisation, zero biases. The last layer's
/// weights are multiplied by `last_layer_scale`.
template <typename Rng>
Vector mlp_init(const MlpSpec& spec, Rng& rng, double last_layer_scale = 1.0) {
  spec.validate();
  Vector p = Vector::Zero(spec.param_count());
  Index off = 0;
  Index in = spec.input_dim;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const Index out = spec.layers[li].size;
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    const double scale = li + 1 == spec.layers.size() ? last_layer_scale : 1.0;
    for (Index k = 0; k < out * in; ++k) p[off + k] = scale * u(rng);
    off += out * in + out;
    in = out;
  }
  return p;
}

}  // namespace swarmrl::numkit
