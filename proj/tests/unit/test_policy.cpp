#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "swarmrl/policy/checkpoint.hpp"
#include "swarmrl/policy/encoders.hpp"
#include "swarmrl/policy/network.hpp"

using namespace swarmrl::policy;
using swarmrl::numkit::Activation;
using swarmrl::numkit::Index;
using swarmrl::numkit::Matrix;
using swarmrl::numkit::MlpSpec;
using swarmrl::numkit::Vector;
namespace env = swarmrl::env;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Index>(r.size()), static_cast<Index>(r.begin()->size()));
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(FeatureMapNn, ZeroWeightsGiveBias) {
  const auto spec = MlpSpec::make(2, {}, Activation::relu, 3, Activation::relu);
  Vector p = Vector::Zero(spec.param_count());
  p.tail(3) << 0.5, 0.0, 2.0;
  EXPECT_EQ(feature_map_nn(Vector::Constant(2, 7.0), spec, p), p.tail(3));
}

TEST(FeatureMapNn, MatchesHandComputation) {
  const auto spec = MlpSpec::make(2, {}, Activation::relu, 4, Activation::relu);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Vector p(spec.param_count());
  for (Index k = 0; k < p.size(); ++k) p[k] = nd(rng);
  const Vector o = (Vector(2) << 0.3, -0.8).finished();
  const Vector y = feature_map_nn(o, spec, p);
  for (Index r = 0; r < 4; ++r) {
    const double z = p[2 * r] * o[0] + p[2 * r + 1] * o[1] + p[8 + r];
    EXPECT_NEAR(y[r], std::max(z, 0.0), 1e-15);
  }
}

TEST(Histogram, OneHotCell) {
  // Bin width 100 / 8 = 12.5 in distance and 2π / 8 in bearing.
  const double d = 3.5 * 12.5;
  const double phi = -M_PI + 5.5 * (2 * M_PI / 8);
  const Vector h = feature_map_histogram(d, phi, 100.0);
  EXPECT_EQ(h.size(), 64);
  EXPECT_EQ(h.sum(), 1.0);
  EXPECT_EQ(h[3 * 8 + 5], 1.0);
}

TEST(Histogram, ClipsDistance) {
  const Vector h = feature_map_histogram(500.0, 0.1, 100.0);
  Index idx = 0;
  h.maxCoeff(&idx);
  EXPECT_EQ(idx / 8, 7);
}

TEST(Histogram, EdgeGoesToLowerBin) {
  const Vector h = feature_map_histogram(3 * 12.5, 0.1, 100.0);
  Index idx = 0;
  h.maxCoeff(&idx);
  EXPECT_EQ(idx / 8, 2);
  EXPECT_EQ(right_closed_bin(0.0, 0.0, 100.0, 8), 0);
  EXPECT_EQ(right_closed_bin(M_PI, -M_PI, M_PI, 8), 7);
}

TEST(Histogram, MeanEmbeddingSumsToOne) {
  const auto f = FeatureSpec::from_task(env::TaskConfig{}, env::WorldConfig{});
  EmbeddingSpec s;
  s.kind = EmbeddingKind::histogram;
  const SetEncoder enc(s, 2, f.neighbor_scale, f.distance_range);
  std::mt19937_64 rng(2);
  for (Index n = 1; n < 30; ++n) {
    const Matrix set = oracle::random_neighbor_set(f.layout, n, rng, f.distance_range);
    EXPECT_NEAR(enc.forward(Vector{}, SetBatch::single(set)).sum(), 1.0, 1e-12);
  }
}

TEST(Rbf, PeakAndOffset) {
  const RbfGrid g{100.0, 8};
  const Vector at = feature_map_rbf(g.mu_d(2), g.mu_phi(6), g);
  EXPECT_DOUBLE_EQ(at[2 * 8 + 6], 1.0);
  const Vector off = feature_map_rbf(g.mu_d(2) + g.sigma_d(), g.mu_phi(6), g);
  EXPECT_NEAR(off[2 * 8 + 6], std::exp(-0.5), 1e-15);
  EXPECT_NEAR(std::exp(-0.5), 0.6065, 1e-4);
}

TEST(Rbf, StrictlyPositive) {
  const RbfGrid g{100.0, 8};
  const Vector r = feature_map_rbf(99.0, -3.0, g);
  EXPECT_GT(r.minCoeff(), 0.0);
  EXPECT_LE(r.maxCoeff(), 1.0);
}

TEST(EmbedMean, IdenticalVectors) {
  const Matrix m = rows({{1.0, -2.0, 3.0}, {1.0, -2.0, 3.0}, {1.0, -2.0, 3.0}});
  EXPECT_EQ(embed_mean(m).values, m.row(0).transpose());
}

TEST(EmbedMean, EmptySet) {
  const Embedding e = embed_mean(Matrix(0, 4));
  EXPECT_TRUE(e.empty);
  EXPECT_EQ(e.values, Vector::Zero(4));
}

TEST(EmbedMean, PermutationAndDuplication) {
  const Matrix m = rows({{0.1, 2.0}, {3.0, -1.0}, {-0.7, 0.4}});
  const Matrix p = rows({{-0.7, 0.4}, {0.1, 2.0}, {3.0, -1.0}});
  const Matrix d = rows({{0.1, 2.0}, {3.0, -1.0}, {-0.7, 0.4}, {0.1, 2.0}, {3.0, -1.0}, {-0.7, 0.4}});
  EXPECT_LT((embed_mean(m).values - embed_mean(p).values).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((embed_mean(m).values - embed_mean(d).values).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(PoolSoftmax, AlphaZeroIsMean) {
  const Matrix m = rows({{0.1, 2.0}, {3.0, -1.0}, {-0.7, 0.4}});
  EXPECT_LT((pool_softmax(m, 0.0) - embed_mean(m).values).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(PoolSoftmax, Singleton) {
  const Matrix m = rows({{0.25, -4.0}});
  for (double a : {-3.0, 0.0, 1.0, 100.0}) EXPECT_LT((pool_softmax(m, a) - m.row(0).transpose()).norm(), 1e-12);
}

TEST(PoolSoftmax, LargeAlpha) {
  const Matrix m = rows({{0.0}, {1.0}});
  EXPECT_NEAR(pool_softmax(m, 50.0)[0], 1.0, 1e-9);
}

TEST(PoolSoftmax, ApproachesMax) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> ui(0, 20);
  for (int t = 0; t < 50; ++t) {
    // Values on a 0.1 grid guarantee per-dimension gaps ≥ 0.1.
    Matrix m(6, 3);
    for (Index c = 0; c < 3; ++c) {
      std::vector<int> vals(21);
      std::iota(vals.begin(), vals.end(), 0);
      std::shuffle(vals.begin(), vals.end(), rng);
      for (Index r = 0; r < 6; ++r) m(r, c) = 0.1 * vals[static_cast<std::size_t>(r)];
    }
    EXPECT_LT((pool_softmax(m, 1e3) - pool_max(m).values).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(PoolMax, Cases) {
  const Matrix m = rows({{1.0, -2.0}, {0.0, 5.0}});
  EXPECT_EQ(pool_max(m).values, (Vector(2) << 1.0, 5.0).finished());
  const Matrix one = rows({{0.3, -0.1}});
  EXPECT_EQ(pool_max(one).values, one.row(0).transpose());
  const Matrix p = rows({{0.0, 5.0}, {1.0, -2.0}});
  EXPECT_EQ(pool_max(m).values, pool_max(p).values);
  const Embedding e = pool_max(Matrix(0, 2));
  EXPECT_TRUE(e.empty);
  EXPECT_EQ(e.values, Vector::Zero(2));
}

TEST(Concat, PaddingAndOrder) {
  const Matrix m = rows({{5.0, 0.1}, {2.0, -0.3}});
  const Vector v = concat_features(m, 4);
  ASSERT_EQ(v.size(), 8);
  EXPECT_EQ(v.tail(4), Vector::Zero(4));
  EXPECT_EQ(v[0], 2.0);
  EXPECT_EQ(v[2], 5.0);
  const Matrix r = rows({{2.0, -0.3}, {5.0, 0.1}});
  EXPECT_EQ(concat_features(r, 4), v);
}

TEST(Concat, TruncatesFarthest) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 50);
  Matrix m(5, 2);
  for (Index r = 0; r < 5; ++r) m.row(r) << u(rng), u(rng);
  const Vector v = concat_features(m, 4);
  std::vector<double> d(5);
  for (Index r = 0; r < 5; ++r) d[static_cast<std::size_t>(r)] = m(r, 0);
  std::sort(d.begin(), d.end());
  for (Index k = 0; k < 4; ++k) EXPECT_EQ(v[2 * k], d[static_cast<std::size_t>(k)]);
}

TEST(Moments, DegenerateSet) {
  const Matrix m = rows({{2.0, -1.0}, {2.0, -1.0}, {2.0, -1.0}, {2.0, -1.0}});
  const Vector v = moment_features(m, {Moment::mean, Moment::std, Moment::skew, Moment::kurtosis}).values;
  EXPECT_EQ(v.head(2), m.row(0).transpose());
  EXPECT_EQ(v.tail(6), Vector::Zero(6));
}

TEST(Moments, PopulationStd) {
  const Matrix m = rows({{-1.0}, {1.0}});
  const Vector v = moment_features(m, {Moment::mean, Moment::std}).values;
  EXPECT_DOUBLE_EQ(v[0], 0.0);
  EXPECT_DOUBLE_EQ(v[1], 1.0);
}

TEST(Moments, SymmetricSetHasNoSkew) {
  const Matrix m = rows({{-3.0}, {-1.0}, {0.0}, {1.0}, {3.0}});
  EXPECT_NEAR(moment_features(m, {Moment::skew}).values[0], 0.0, 1e-15);
  // Kurtosis of {−1, 1}×2 is 1 − 3 = −2 (excess).
  const Matrix k = rows({{-1.0}, {1.0}, {-1.0}, {1.0}});
  EXPECT_NEAR(moment_features(k, {Moment::kurtosis}).values[0], -2.0, 1e-15);
}

TEST(Moments, SmallSetsReportZero) {
  const Matrix m = rows({{1.0}, {4.0}});
  const Vector v = moment_features(m, {Moment::std, Moment::skew, Moment::kurtosis}).values;
  EXPECT_GT(v[0], 0.0);
  EXPECT_EQ(v[1], 0.0);
  EXPECT_EQ(v[2], 0.0);
}

TEST(Encoders, DimensionIndependentOfSetSize) {
  std::mt19937_64 rng(5);
  for (const auto& c : oracle::encoder_cases()) {
    const auto f = FeatureSpec::from_task(c.task, c.world);
    const SetEncoder enc(c.net.embedding, f.neighbor_dim(), f.neighbor_scale, f.distance_range);
    const Vector p = enc.init(rng);
    for (Index n = 0; n <= 64; n += 7) {
      const Matrix set = oracle::random_neighbor_set(f.layout, n, rng, f.distance_range);
      const Matrix out = enc.forward(p, SetBatch::single(set));
      EXPECT_EQ(out.cols(), enc.output_dim()) << c.name;
      EXPECT_TRUE(out.allFinite()) << c.name;
    }
  }
}

TEST(Encoders, InvarianceOnRandomSets) {
  const auto rep = oracle::check_invariance(200, 64, 6);
  EXPECT_LT(rep.permutation, 1e-9);
  EXPECT_LT(rep.duplication, 1e-9);
  EXPECT_LT(rep.max_duplication, 1e-12);
  EXPECT_LT(rep.softmax_alpha0, 1e-9);
  EXPECT_TRUE(rep.dims_constant);
}

TEST(Encoders, HistogramNeedsBasicFeatures) {
  EmbeddingSpec s;
  s.kind = EmbeddingKind::histogram;
  EXPECT_THROW(SetEncoder(s, 3, Vector::Ones(3), 100.0), std::invalid_argument);
}

TEST(PolicyForward, PermutationInvariantMean) {
  std::mt19937_64 rng(7);
  for (const auto& c : oracle::encoder_cases()) {
    const auto f = FeatureSpec::from_task(c.task, c.world);
    const PolicyNetwork net(f, c.net, 2, true);
    const Vector p = oracle::random_params(net, rng);
    auto o = oracle::random_observation(f, 6, f.has_evader_set() ? 3 : 0, rng);
    auto q = o;
    q.neighbors.row(0).swap(q.neighbors.row(4));
    q.neighbors.row(2).swap(q.neighbors.row(5));
    if (f.has_evader_set()) q.evaders.row(0).swap(q.evaders.row(2));
    const auto a = policy_forward(o, net, p);
    const auto b = policy_forward(q, net, p);
    EXPECT_LT((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-9) << c.name;
  }
}

TEST(PolicyForward, EmptyNeighbourhood) {
  std::mt19937_64 rng(8);
  for (const auto& c : oracle::encoder_cases()) {
    const auto f = FeatureSpec::from_task(c.task, c.world);
    const PolicyNetwork net(f, c.net, 2, true);
    const Vector p = oracle::random_params(net, rng);
    const auto o = oracle::random_observation(f, 0, 0, rng);
    const auto d = policy_forward(o, net, p);
    EXPECT_TRUE(d.mean.allFinite()) << c.name;
    EXPECT_EQ(d.dim(), 2);
  }
}

TEST(PolicyForward, MatchesComposedPipeline) {
  // feature_map → mean → [μ̂, indicator, scaled o_loc] → trunk, by hand.
  std::mt19937_64 rng(9);
  env::TaskConfig t;
  const auto f = FeatureSpec::from_task(t, env::WorldConfig{});
  NetworkSpec ns;
  const PolicyNetwork net(f, ns, 2, true);
  const Vector p = oracle::random_params(net, rng);
  const auto o = oracle::random_observation(f, 5, 0, rng);
  const auto& phi = net.neighbor_encoder().network();
  const Vector phi_p = p.head(phi.param_count());
  Vector mu = Vector::Zero(phi.output_dim());
  for (Index r = 0; r < 5; ++r) {
    const Vector x = o.neighbors.row(r).transpose().cwiseProduct(f.neighbor_scale);
    mu += swarmrl::numkit::mlp_forward(phi, phi_p, x) / 5.0;
  }
  Vector in(net.trunk_input_dim());
  in << mu, 0.0, o.local.cwiseProduct(f.local_scale);
  const Vector trunk_p = p.segment(phi.param_count(), net.trunk().param_count());
  const Vector want = swarmrl::numkit::mlp_forward(net.trunk(), trunk_p, in);
  EXPECT_LT((policy_forward(o, net, p).mean - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SampleAction, ZeroStdGivesClampedMean) {
  const swarmrl::numkit::DiagGaussian d{(Vector(2) << 0.2, 5.0).finished(), Vector::Constant(2, -80.0)};
  std::mt19937_64 rng(1);
  env::TaskConfig t;
  const env::Action a = sample_action(d, rng, t);
  EXPECT_NEAR(a.linear, 0.2, 1e-12);
  EXPECT_EQ(a.angular, t.omega_max);
}

TEST(SampleAction, SeedDeterministic) {
  const swarmrl::numkit::DiagGaussian d{Vector::Zero(2), Vector::Zero(2)};
  std::mt19937_64 a(5), b(5);
  EXPECT_EQ(sample_raw(d, a), sample_raw(d, b));
}

TEST(SampleAction, MonteCarloMean) {
  const swarmrl::numkit::DiagGaussian d{(Vector(2) << 0.3, -0.1).finished(), (Vector(2) << -0.5, 0.2).finished()};
  std::mt19937_64 rng(6);
  const int n = 100000;
  Vector acc = Vector::Zero(2);
  for (int k = 0; k < n; ++k) acc += sample_raw(d, rng);
  acc /= n;
  for (Index k = 0; k < 2; ++k) EXPECT_LT(std::abs(acc[k] - d.mean[k]), 3.0 * std::exp(d.log_std[k]) / std::sqrt(n));
}

TEST(Network, LayoutMatchesCount) {
  for (const auto& c : oracle::encoder_cases()) {
    const auto f = FeatureSpec::from_task(c.task, c.world);
    const PolicyNetwork net(f, c.net, 2, true);
    EXPECT_EQ(net.layout().size(), net.param_count()) << c.name;
    EXPECT_EQ(net.log_std_offset() + 2, net.param_count());
  }
}

TEST(Network, InitialLogStd) {
  std::mt19937_64 rng(1);
  const auto f = FeatureSpec::from_task(env::TaskConfig{}, env::WorldConfig{});
  const Policy p = make_policy(f, NetworkSpec{}, rng);
  EXPECT_NEAR(p.net.log_std(p.params)[0], std::log(0.6), 1e-15);
}

class GradientCheck : public ::testing::TestWithParam<int> {};

TEST_P(GradientCheck, MatchesFiniteDifferences) {
  const auto cases = oracle::encoder_cases();
  const auto& c = cases[static_cast<std::size_t>(GetParam())];
  const auto rep = oracle::check_gradients(c, 8, 100 + static_cast<std::uint64_t>(GetParam()));
  EXPECT_LT(rep.policy, 1e-4) << c.name;
  EXPECT_LT(rep.value, 1e-4) << c.name;
  EXPECT_LT(rep.fvp, 1e-3) << c.name;
}

INSTANTIATE_TEST_SUITE_P(AllEncoders, GradientCheck,
                         ::testing::Range(0, static_cast<int>(oracle::encoder_cases().size())));

TEST(Checkpoint, RoundTrip) {
  std::mt19937_64 rng(11);
  for (const auto& c : oracle::encoder_cases()) {
    const auto f = FeatureSpec::from_task(c.task, c.world);
    Checkpoint ck{c.task, c.world, c.net, make_policy(f, c.net, rng), make_value_function(f, c.net, rng), 17};
    ck.value.ret_mean = -3.25;
    ck.value.ret_std = 0.5;
    std::stringstream ss;
    write_checkpoint(ss, ck);
    const Checkpoint back = read_checkpoint(ss);
    EXPECT_EQ(back.iteration, 17);
    EXPECT_EQ(back.policy.params, ck.policy.params) << c.name;
    EXPECT_EQ(back.value.params, ck.value.params);
    EXPECT_EQ(back.value.ret_mean, -3.25);
    EXPECT_EQ(back.network, ck.network);
    EXPECT_EQ(back.task.n_agents, c.task.n_agents);
  }
}

TEST(Checkpoint, RejectsCorruption) {
  std::mt19937_64 rng(12);
  const auto c = oracle::encoder_cases().front();
  const auto f = FeatureSpec::from_task(c.task, c.world);
  const Checkpoint ck{c.task, c.world, c.net, make_policy(f, c.net, rng), make_value_function(f, c.net, rng), 1};
  std::stringstream ss;
  write_checkpoint(ss, ck);
  const std::string good = ss.str();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::stringstream a(bad_magic);
  EXPECT_THROW(read_checkpoint(a), CheckpointError);

  std::stringstream b(good.substr(0, good.size() - 3));
  EXPECT_THROW(read_checkpoint(b), CheckpointError);

  std::stringstream d(good + "junk");
  EXPECT_THROW(read_checkpoint(d), CheckpointError);

  std::string bad_version = good;
  bad_version[8] = 9;
  std::stringstream e(bad_version);
  EXPECT_THROW(read_checkpoint(e), CheckpointError);
}
