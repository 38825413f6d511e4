#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "swarmrl/env/geometry.hpp"
#include "swarmrl/numkit/mlp.hpp"
#include "swarmrl/policy/features.hpp"

namespace swarmrl::policy {

using numkit::Activation;
using numkit::ConstVecRef;
using numkit::MlpSpec;
using numkit::VecRef;

enum class EmbeddingKind { nn_mean, histogram, rbf, softmax, max, concat, moments };
enum class Moment { mean, std, skew, kurtosis };

inline std::string_view to_string(EmbeddingKind k) {
  switch (k) {
    case EmbeddingKind::nn_mean: return "nn-mean";
    case EmbeddingKind::histogram: return "hist";
    case EmbeddingKind::rbf: return "rbf";
    case EmbeddingKind::softmax: return "softmax";
    case EmbeddingKind::max: return "max";
    case EmbeddingKind::concat: return "concat";
    case EmbeddingKind::moments: return "moments";
  }
  return "?";
}

inline EmbeddingKind embedding_from_string(std::string_view s) {
  if (s == "nn-mean" || s == "nn_mean" || s == "mean") return EmbeddingKind::nn_mean;
  if (s == "hist" || s == "histogram") return EmbeddingKind::histogram;
  if (s == "rbf") return EmbeddingKind::rbf;
  if (s == "softmax") return EmbeddingKind::softmax;
  if (s == "max") return EmbeddingKind::max;
  if (s == "concat") return EmbeddingKind::concat;
  if (s == "moments") return EmbeddingKind::moments;
  throw std::invalid_argument("unknown embedding '" + std::string(s) + "'");
}

inline std::string_view to_string(Moment m) {
  switch (m) {
    case Moment::mean: return "mean";
    case Moment::std: return "std";
    case Moment::skew: return "skew";
    case Moment::kurtosis: return "kurtosis";
  }
  return "?";
}

inline Moment moment_from_string(std::string_view s) {
  if (s == "mean") return Moment::mean;
  if (s == "std") return Moment::std;
  if (s == "skew") return Moment::skew;
  if (s == "kurtosis") return Moment::kurtosis;
  throw std::invalid_argument("unknown moment '" + std::string(s) + "'");
}

struct EmbeddingSpec {
  EmbeddingKind kind = EmbeddingKind::nn_mean;
  std::vector<Index> nn_layers{64};
  Activation nn_activation = Activation::relu;
  int hist_bins = 8;
  int rbf_centers = 8;
  double alpha = 1.0;
  Index max_neighbors = 0;  // concat over neighbours
  Index max_evaders = 0;    // concat over evaders (multi-evader task)
  Index concat_hidden = 64;
  std::vector<Moment> moments{Moment::mean, Moment::std, Moment::skew, Moment::kurtosis};
  /// Sum instead of average for mean-type pooling (nn-mean, hist, rbf).
  bool sum_pooling = false;

  bool size_invariant() const { return kind != EmbeddingKind::concat; }
  bool uses_nn_features() const {
    return kind == EmbeddingKind::nn_mean || kind == EmbeddingKind::softmax || kind == EmbeddingKind::max;
  }

  bool operator==(const EmbeddingSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Element feature maps

inline Vector feature_map_nn(const Vector& o, const MlpSpec& spec, ConstVecRef params) {
  return numkit::mlp_forward(spec, params, o);
}

/// Index of the right-closed bin containing `u` within [lo, hi]; the lowest
/// bin also holds `lo`, values outside the range are clipped.
inline int right_closed_bin(double u, double lo, double hi, int bins) {
  const double x = (std::clamp(u, lo, hi) - lo) / (hi - lo) * bins;
  const int k = static_cast<int>(std::ceil(x - 1e-9)) - 1;
  return std::clamp(k, 0, bins - 1);
}

/// One-hot (distance-bin, bearing-bin) cell, distance-major.
inline Vector feature_map_histogram(double d, double bearing, double d_range, int bins = 8) {
  Vector h = Vector::Zero(static_cast<Index>(bins) * bins);
  const int kd = right_closed_bin(d, 0.0, d_range, bins);
  const int kb = right_closed_bin(bearing, -env::kPi, env::kPi, bins);
  h[static_cast<Index>(kd) * bins + kb] = 1.0;
  return h;
}

/// Centres sit at the midpoints of an even `centers` x `centers` grid over
/// [0, d_range] x (−π, π]; widths equal the grid spacing.
struct RbfGrid {
  double d_range = 100.0;
  int centers = 8;

  double sigma_d() const { return d_range / centers; }
  double sigma_phi() const { return env::kTwoPi / centers; }
  double mu_d(int m) const { return (m + 0.5) * sigma_d(); }
  double mu_phi(int m) const { return -env::kPi + (m + 0.5) * sigma_phi(); }
};

inline Vector feature_map_rbf(double d, double bearing, const RbfGrid& grid) {
  const int m = grid.centers;
  Vector r(static_cast<Index>(m) * m);
  const double sd = grid.sigma_d();
  const double sp = grid.sigma_phi();
  for (int a = 0; a < m; ++a) {
    const double zd = (d - grid.mu_d(a)) / sd;
    for (int b = 0; b < m; ++b) {
      const double zp = (bearing - grid.mu_phi(b)) / sp;
      r[static_cast<Index>(a) * m + b] = std::exp(-0.5 * (zd * zd + zp * zp));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pooling over sets (rows of a matrix)

/// Fixed-size set representation with an empty-set indicator.
struct Embedding {
  Vector values;
  bool empty = false;
};

inline Embedding embed_mean(const Matrix& features) {
  Embedding e;
  e.empty = features.rows() == 0;
  e.values = e.empty ? Vector::Zero(features.cols()) : Vector(features.colwise().mean().transpose());
  return e;
}

/// Per-dimension softmax-weighted average with temperature α.
inline Vector pool_softmax(const Matrix& features, double alpha) {
  if (features.rows() == 0) return Vector::Zero(features.cols());
  Vector out(features.cols());
  for (Index k = 0; k < features.cols(); ++k) {
    const auto col = features.col(k);
    const double top = (alpha * col.array()).maxCoeff();
    double num = 0.0;
    double den = 0.0;
    for (Index j = 0; j < col.size(); ++j) {
      const double w = std::exp(alpha * col[j] - top);
      num += w * col[j];
      den += w;
    }
    out[k] = num / den;
  }
  return out;
}

inline Embedding pool_max(const Matrix& features) {
  Embedding e;
  e.empty = features.rows() == 0;
  e.values = e.empty ? Vector::Zero(features.cols()) : Vector(features.colwise().maxCoeff().transpose());
  return e;
}

/// Rows ordered by ascending first column (distance), ties broken
/// lexicographically on the remaining columns.
inline std::vector<Index> canonical_order(const Matrix& set) {
  std::vector<Index> idx(static_cast<std::size_t>(set.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::sort(idx.begin(), idx.end(), [&set](Index a, Index b) {
    for (Index c = 0; c < set.cols(); ++c)
      if (set(a, c) != set(b, c)) return set(a, c) < set(b, c);
    return a < b;
  });
  return idx;
}

/// Nearest-first concatenation, truncated to `max_neighbors`, padded with
/// `pad_value`.
inline Vector concat_features(const Matrix& set, Index max_neighbors, double pad_value = 0.0) {
  const Index d = set.cols();
  Vector out = Vector::Constant(max_neighbors * d, pad_value);
  const auto order = canonical_order(set);
  const Index n = std::min<Index>(max_neighbors, set.rows());
  for (Index k = 0; k < n; ++k) out.segment(k * d, d) = set.row(order[static_cast<std::size_t>(k)]).transpose();
  return out;
}

/// Population moments per feature dimension, moment-major. std needs ≥ 2
/// elements, skew ≥ 3, kurtosis ≥ 4, otherwise they are reported as 0; skew
/// and (excess) kurtosis are 0 when std < 1e-12.
inline Embedding moment_features(const Matrix& set, const std::vector<Moment>& orders) {
  const Index d = set.cols();
  const Index n = set.rows();
  Embedding e;
  e.empty = n == 0;
  e.values = Vector::Zero(static_cast<Index>(orders.size()) * d);
  if (n == 0) return e;
  const Eigen::RowVectorXd mean = set.colwise().mean();
  const Matrix centered = set.rowwise() - mean;
  const Eigen::RowVectorXd m2 = centered.array().square().colwise().mean();
  const Eigen::RowVectorXd m3 = centered.array().cube().colwise().mean();
  const Eigen::RowVectorXd m4 = centered.array().square().square().colwise().mean();
  for (std::size_t o = 0; o < orders.size(); ++o) {
    for (Index k = 0; k < d; ++k) {
      const double sd = std::sqrt(m2[k]);
      double v = 0.0;
      switch (orders[o]) {
        case Moment::mean: v = mean[k]; break;
        case Moment::std: v = n >= 2 ? sd : 0.0; break;
        case Moment::skew: v = (n >= 3 && sd >= 1e-12) ? m3[k] / (sd * sd * sd) : 0.0; break;
        case Moment::kurtosis: v = (n >= 4 && sd >= 1e-12) ? m4[k] / (m2[k] * m2[k]) - 3.0 : 0.0; break;
      }
      e.values[static_cast<Index>(o) * d + k] = v;
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Batched set encoder with gradients

/// Maps a batch of observation sets to fixed-size embeddings. Holds no
/// parameters itself; learnable weights live in a flat vector whose layout is
/// given by layout().
class SetEncoder {
 public:
  struct Cache {
    Matrix inputs;                 // scaled elements (nn kinds) or concat vectors
    numkit::MlpCache mlp;
    Matrix features;               // per-element features (nn kinds)
    Matrix weights;                // softmax weights, per element
    std::vector<Index> argmax;     // max pooling winners, B x K row-major (-1: empty)
    Matrix pooled;
  };

  SetEncoder() = default;

  SetEncoder(EmbeddingSpec spec, Index element_dim, Vector scale, double distance_range)
      : spec_(std::move(spec)), element_dim_(element_dim), scale_(std::move(scale)), distance_range_(distance_range) {
    numkit::require_shape(element_dim_ >= 1, "SetEncoder: element dimension must be >= 1");
    numkit::require_shape(scale_.size() == element_dim_, "SetEncoder: scale length mismatch");
    switch (spec_.kind) {
      case EmbeddingKind::nn_mean:
      case EmbeddingKind::softmax:
      case EmbeddingKind::max:
        numkit::require_shape(!spec_.nn_layers.empty(), "SetEncoder: nn feature map needs at least one layer");
        nn_.input_dim = element_dim_;
        for (Index s : spec_.nn_layers) nn_.layers.push_back({s, spec_.nn_activation});
        nn_.validate();
        out_dim_ = nn_.output_dim();
        break;
      case EmbeddingKind::histogram:
      case EmbeddingKind::rbf:
        if (element_dim_ != 2)
          throw std::invalid_argument("histogram/RBF embeddings are defined for (distance, bearing) features only");
        out_dim_ = spec_.kind == EmbeddingKind::histogram ? static_cast<Index>(spec_.hist_bins) * spec_.hist_bins
                                                          : static_cast<Index>(spec_.rbf_centers) * spec_.rbf_centers;
        numkit::require_shape(out_dim_ >= 1, "SetEncoder: bin/centre count must be >= 1");
        break;
      case EmbeddingKind::concat:
        if (spec_.max_neighbors < 1) throw std::invalid_argument("concat embedding needs max_neighbors >= 1");
        nn_ = MlpSpec::make(spec_.max_neighbors * element_dim_, {}, Activation::relu, spec_.concat_hidden,
                            Activation::relu);
        nn_.validate();
        out_dim_ = spec_.concat_hidden;
        break;
      case EmbeddingKind::moments:
        if (spec_.moments.empty()) throw std::invalid_argument("moments embedding needs at least one moment");
        out_dim_ = static_cast<Index>(spec_.moments.size()) * element_dim_;
        break;
    }
  }

  const EmbeddingSpec& spec() const { return spec_; }
  Index element_dim() const { return element_dim_; }
  Index output_dim() const { return out_dim_; }
  Index param_count() const { return has_params() ? nn_.param_count() : 0; }
  bool has_params() const { return spec_.uses_nn_features() || spec_.kind == EmbeddingKind::concat; }
  const MlpSpec& network() const { return nn_; }

  numkit::ParamLayout layout() const { return has_params() ? nn_.layout() : numkit::ParamLayout{}; }

  template <typename Rng>
  Vector init(Rng& rng) const {
    return has_params() ? numkit::mlp_init(nn_, rng) : Vector{};
  }

  /// B x output_dim embeddings. Empty sets map to zero rows.
  Matrix forward(ConstVecRef params, const SetBatch& batch, Cache* cache = nullptr) const {
    numkit::require_shape(params.size() == param_count(), "SetEncoder: parameter length mismatch");
    numkit::require_shape(batch.elements.rows() == 0 || batch.dim() == element_dim_,
                          "SetEncoder: element dimension mismatch");
    const Index B = batch.size();
    Matrix out = Matrix::Zero(B, out_dim_);
    switch (spec_.kind) {
      case EmbeddingKind::nn_mean:
      case EmbeddingKind::softmax:
      case EmbeddingKind::max: {
        Cache local;
        Cache& c = cache ? *cache : local;
        c.inputs = scaled(batch.elements);
        c.features = c.inputs.rows() > 0 ? numkit::mlp_forward_batch(nn_, params, c.inputs, &c.mlp)
                                         : Matrix(0, out_dim_);
        pool_forward(batch, c, out);
        if (cache) cache->pooled = out;
        break;
      }
      case EmbeddingKind::histogram:
      case EmbeddingKind::rbf: {
        const RbfGrid grid{distance_range_, spec_.rbf_centers};
        for (Index b = 0; b < B; ++b) {
          const Index n = batch.count(b);
          if (n == 0) continue;
          Vector acc = Vector::Zero(out_dim_);
          for (Index r = batch.begin(b); r < batch.begin(b) + n; ++r) {
            const double d = batch.elements(r, 0);
            const double phi = batch.elements(r, 1);
            acc += spec_.kind == EmbeddingKind::histogram
                       ? feature_map_histogram(d, phi, distance_range_, spec_.hist_bins)
                       : feature_map_rbf(d, phi, grid);
          }
          out.row(b) = (spec_.sum_pooling ? acc : Vector(acc / static_cast<double>(n))).transpose();
        }
        break;
      }
      case EmbeddingKind::concat: {
        Cache local;
        Cache& c = cache ? *cache : local;
        c.inputs = concat_inputs(batch);
        out = numkit::mlp_forward_batch(nn_, params, c.inputs, &c.mlp);
        break;
      }
      case EmbeddingKind::moments:
        for (Index b = 0; b < B; ++b) {
          const Index n = batch.count(b);
          if (n == 0) continue;
          const Matrix set = scaled(batch.elements.middleRows(batch.begin(b), n));
          out.row(b) = moment_features(set, spec_.moments).values.transpose();
        }
        break;
    }
    return out;
  }

  /// Accumulates d(Σ upstream ⊙ output)/dθ into `grad`.
  void backward(ConstVecRef params, const SetBatch& batch, const Cache& cache, const Matrix& upstream,
                VecRef grad) const {
    numkit::require_shape(grad.size() == param_count(), "SetEncoder: gradient length mismatch");
    if (!has_params()) return;
    if (spec_.kind == EmbeddingKind::concat) {
      numkit::mlp_backward_batch(nn_, params, cache.mlp, upstream, grad);
      return;
    }
    if (cache.features.rows() == 0) return;
    const Matrix d_features = pool_backward(batch, cache, upstream);
    numkit::mlp_backward_batch(nn_, params, cache.mlp, d_features, grad);
  }

  /// Directional derivative of the output along parameter direction `tangent`.
  Matrix jvp(ConstVecRef params, const SetBatch& batch, const Cache& cache, ConstVecRef tangent) const {
    const Index B = batch.size();
    if (!has_params()) return Matrix::Zero(B, out_dim_);
    if (spec_.kind == EmbeddingKind::concat) return numkit::mlp_jvp_batch(nn_, params, cache.mlp, tangent);
    if (cache.features.rows() == 0) return Matrix::Zero(B, out_dim_);
    const Matrix d_features = numkit::mlp_jvp_batch(nn_, params, cache.mlp, tangent);
    return pool_tangent(batch, cache, d_features);
  }

 private:
  Matrix scaled(const Matrix& elements) const {
    if (elements.rows() == 0) return Matrix(0, element_dim_);
    return elements.array().rowwise() * scale_.transpose().array();
  }

  Matrix concat_inputs(const SetBatch& batch) const {
    Matrix in(batch.size(), spec_.max_neighbors * element_dim_);
    for (Index b = 0; b < batch.size(); ++b) {
      const Matrix set = scaled(batch.elements.middleRows(batch.begin(b), batch.count(b)));
      in.row(b) = concat_features(set, spec_.max_neighbors).transpose();
    }
    return in;
  }

  void pool_forward(const SetBatch& batch, Cache& c, Matrix& out) const {
    const Index K = out_dim_;
    const Matrix& F = c.features;
    if (spec_.kind == EmbeddingKind::softmax) c.weights.resize(F.rows(), K);
    if (spec_.kind == EmbeddingKind::max) c.argmax.assign(static_cast<std::size_t>(batch.size() * K), -1);
    for (Index b = 0; b < batch.size(); ++b) {
      const Index n = batch.count(b);
      if (n == 0) continue;
      const Index r0 = batch.begin(b);
      const auto seg = F.middleRows(r0, n);
      switch (spec_.kind) {
        case EmbeddingKind::nn_mean:
          out.row(b) = spec_.sum_pooling ? Eigen::RowVectorXd(seg.colwise().sum())
                                         : Eigen::RowVectorXd(seg.colwise().mean());
          break;
        case EmbeddingKind::softmax:
          for (Index k = 0; k < K; ++k) {
            const double top = (spec_.alpha * seg.col(k).array()).maxCoeff();
            double den = 0.0;
            for (Index j = 0; j < n; ++j) den += (c.weights(r0 + j, k) = std::exp(spec_.alpha * seg(j, k) - top));
            double acc = 0.0;
            for (Index j = 0; j < n; ++j) {
              c.weights(r0 + j, k) /= den;
              acc += c.weights(r0 + j, k) * seg(j, k);
            }
            out(b, k) = acc;
          }
          break;
        case EmbeddingKind::max:
          for (Index k = 0; k < K; ++k) {
            Index best = 0;
            for (Index j = 1; j < n; ++j)
              if (seg(j, k) > seg(best, k)) best = j;
            c.argmax[static_cast<std::size_t>(b * K + k)] = r0 + best;
            out(b, k) = seg(best, k);
          }
          break;
        default: break;
      }
    }
  }

  Matrix pool_backward(const SetBatch& batch, const Cache& c, const Matrix& upstream) const {
    const Index K = out_dim_;
    Matrix dF = Matrix::Zero(c.features.rows(), K);
    for (Index b = 0; b < batch.size(); ++b) {
      const Index n = batch.count(b);
      if (n == 0) continue;
      const Index r0 = batch.begin(b);
      switch (spec_.kind) {
        case EmbeddingKind::nn_mean: {
          const double w = spec_.sum_pooling ? 1.0 : 1.0 / static_cast<double>(n);
          dF.middleRows(r0, n).rowwise() = w * upstream.row(b);
          break;
        }
        case EmbeddingKind::softmax:
          for (Index j = 0; j < n; ++j)
            for (Index k = 0; k < K; ++k)
              dF(r0 + j, k) = upstream(b, k) * c.weights(r0 + j, k) *
                              (1.0 + spec_.alpha * (c.features(r0 + j, k) - c.pooled(b, k)));
          break;
        case EmbeddingKind::max:
          for (Index k = 0; k < K; ++k) dF(c.argmax[static_cast<std::size_t>(b * K + k)], k) += upstream(b, k);
          break;
        default: break;
      }
    }
    return dF;
  }

  Matrix pool_tangent(const SetBatch& batch, const Cache& c, const Matrix& dF) const {
    const Index K = out_dim_;
    Matrix out = Matrix::Zero(batch.size(), K);
    for (Index b = 0; b < batch.size(); ++b) {
      const Index n = batch.count(b);
      if (n == 0) continue;
      const Index r0 = batch.begin(b);
      switch (spec_.kind) {
        case EmbeddingKind::nn_mean:
          out.row(b) = dF.middleRows(r0, n).colwise().sum();
          if (!spec_.sum_pooling) out.row(b) /= static_cast<double>(n);
          break;
        case EmbeddingKind::softmax:
          for (Index j = 0; j < n; ++j)
            for (Index k = 0; k < K; ++k)
              out(b, k) += dF(r0 + j, k) * c.weights(r0 + j, k) *
                           (1.0 + spec_.alpha * (c.features(r0 + j, k) - c.pooled(b, k)));
          break;
        case EmbeddingKind::max:
          for (Index k = 0; k < K; ++k) out(b, k) = dF(c.argmax[static_cast<std::size_t>(b * K + k)], k);
          break;
        default: break;
      }
    }
    return out;
  }

  EmbeddingSpec spec_;
  Index element_dim_ = 0;
  Vector scale_;
  double distance_range_ = 100.0;
  MlpSpec nn_;
  Index out_dim_ = 0;
};

}  // namespace swarmrl::policy
