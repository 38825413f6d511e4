#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "swarmrl/experiment/runner.hpp"

namespace ex = swarmrl::experiment;
namespace env = swarmrl::env;
namespace bl = swarmrl::baselines;
namespace policy = swarmrl::policy;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("swarmrl_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("SWARMRL_WORKERS=2 ") + SWARMRL_CLI_PATH + " " + args + " > " + log.string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void write_json(const fs::path& p, const policy::Json& j) {
  std::ofstream os(p);
  os << j.dump(2);
}

policy::Json smoke_config(const fs::path& out) {
  return {{"seed", 3},
          {"out", out.string()},
          {"task", {{"n_agents", 4}}},
          {"trainer",
           {{"workers", 2}, {"steps_per_worker", 64}, {"subsample_agents", 4}, {"iterations", 2}, {"log_wall_time", false}}},
          {"eval", {{"episodes", 2}, {"horizon", 30}, {"trajectories", 1}}}};
}

}  // namespace

TEST(Config, DefaultsAreValid) { EXPECT_NO_THROW(ex::ExperimentConfig{}.validate()); }

TEST(Config, RelativeVelocityNeedsDoubleIntegrator) {
  policy::Json j = {{"task", {{"features", "extended"}, {"relative_velocity", true}}}};
  EXPECT_THROW(ex::config_from_json(j), env::ConfigError);
  j["task"]["dynamics"] = "double";
  EXPECT_NO_THROW(ex::config_from_json(j));
}

TEST(Config, ReportsEveryViolation) {
  const policy::Json j = {{"trials", 0}, {"task", {{"n_agents", 3}}}, {"trainer", {{"subsample_agents", 0}}}, {"bogus", 1}};
  try {
    ex::config_from_json(j);
    FAIL() << "accepted an invalid config";
  } catch (const env::ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bogus"), std::string::npos) << msg;
  }
  policy::Json k = {{"trials", 0}, {"task", {{"n_agents", 3}}}, {"trainer", {{"subsample_agents", 0}}}};
  try {
    ex::config_from_json(k);
    FAIL() << "accepted an invalid config";
  } catch (const env::ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("trials"), std::string::npos) << msg;
    EXPECT_NE(msg.find("subsample_agents"), std::string::npos) << msg;
  }
}

TEST(Config, JsonRoundTrip) {
  policy::Json j = smoke_config("x");
  j["network"] = {{"embedding", {{"kind", "softmax"}, {"alpha", 2.5}}}};
  const auto c = ex::config_from_json(j);
  const auto back = ex::config_from_json(ex::to_json(c));
  EXPECT_EQ(ex::to_json(back).dump(), ex::to_json(c).dump());
  EXPECT_EQ(back.network.embedding.alpha, 2.5);
}

TEST(Config, WorkersFromEnvironment) {
  ::setenv("SWARMRL_WORKERS", "3", 1);
  EXPECT_EQ(ex::threads_from_env(7), 3);
  ::setenv("SWARMRL_WORKERS", "zero", 1);
  EXPECT_THROW(ex::threads_from_env(7), env::ConfigError);
  ::unsetenv("SWARMRL_WORKERS");
  EXPECT_EQ(ex::threads_from_env(7), 7);
}

TEST(TopQMedian, Examples) {
  EXPECT_EQ(ex::top_q_median({{1.0}, {2.0}, {3.0}}, 2), std::vector<double>{2.5});
  EXPECT_EQ(ex::top_q_median({{1.0}, {2.0}, {3.0}}, 3), std::vector<double>{2.0});
  // Selection is by final value, the median is per iteration.
  const auto m = ex::top_q_median({{9.0, 0.0}, {1.0, 5.0}, {2.0, 4.0}}, 2);
  EXPECT_EQ(m, (std::vector<double>{1.5, 4.5}));
  EXPECT_THROW(ex::top_q_median({{1.0}}, 2), std::invalid_argument);
}

TEST(MeanDistance, ZeroActionConstantProfile) {
  env::TaskConfig t;
  t.n_agents = 2;
  const env::WorldConfig w;
  struct Fixed final : bl::Controller {
    std::string name() const override { return "fixed"; }
    std::vector<env::Action> act(const env::SwarmEnv& e, std::mt19937_64&) override {
      // First call pins the pair 10 apart, then nothing moves.
      auto& m = const_cast<env::SwarmEnv&>(e);
      if (e.t() == 0) m.set_state({{40, 50, 0, 0, 0}, {50, 50, 1, 0, 0}}, {});
      return std::vector<env::Action>(2);
    }
  };
  const auto rep = ex::evaluate_mean_distance([] { return std::make_unique<Fixed>(); }, t, w, 3, 25, 1);
  ASSERT_EQ(rep.mean_distance.size(), 26u);
  for (std::size_t k = 1; k < rep.mean_distance.size(); ++k) EXPECT_DOUBLE_EQ(rep.mean_distance[k], 10.0);
}

TEST(MeanDistance, SharedInitialStates) {
  env::TaskConfig t;
  t.n_agents = 5;
  const env::WorldConfig w;
  const auto a = ex::evaluate_mean_distance([] { return std::make_unique<bl::ZeroController>(); }, t, w, 4, 5, 9);
  const auto b = ex::evaluate_mean_distance([] { return std::make_unique<bl::ConsensusController>(); }, t, w, 4, 5, 9);
  EXPECT_EQ(a.mean_distance.front(), b.mean_distance.front());
  EXPECT_THROW(ex::evaluate_capture([] { return std::make_unique<bl::ZeroController>(); }, t, w, 1, 5, 1),
               env::ConfigError);
}

TEST(Capture, MonotoneAndFinalFraction) {
  env::TaskConfig t;
  t.task = env::TaskKind::pursuit;
  t.n_agents = 6;
  env::WorldConfig w;
  w.boundary = env::Boundary::toroidal;
  const auto rep = ex::evaluate_capture([] { return std::make_unique<bl::SurroundController>(); }, t, w, 12, 400, 2, 2);
  ASSERT_EQ(rep.capture.size(), 401u);
  for (std::size_t k = 1; k < rep.capture.size(); ++k) EXPECT_GE(rep.capture[k], rep.capture[k - 1]);
  EXPECT_EQ(rep.capture.front(), 0.0);
  EXPECT_EQ(rep.captured_fraction(), rep.capture.back());
}

TEST(Capture, IdlePursuersRarelyCatchEarly) {
  env::TaskConfig t;
  t.task = env::TaskKind::pursuit;
  t.n_agents = 5;
  const auto rep = ex::evaluate_capture([] { return std::make_unique<bl::ZeroController>(); }, t, env::WorldConfig{}, 20,
                                        10, 4);
  EXPECT_LE(rep.capture.back(), 0.05);
}

TEST(Capture, SurroundBeatsDirectChase) {
  env::TaskConfig t;
  t.task = env::TaskKind::pursuit;
  t.n_agents = 10;
  env::WorldConfig w;
  w.boundary = env::Boundary::toroidal;
  const auto chase = ex::evaluate_capture([] { return std::make_unique<bl::DirectChaseController>(); }, t, w, 12, 1024, 11, 2);
  const auto ring = ex::evaluate_capture([] { return std::make_unique<bl::SurroundController>(); }, t, w, 12, 1024, 11, 2);
  double area_chase = 0.0, area_ring = 0.0;
  for (std::size_t k = 0; k < chase.capture.size(); ++k) {
    area_chase += chase.capture[k];
    area_ring += ring.capture[k];
  }
  EXPECT_GT(area_ring, area_chase);
}

TEST(CrossScale, RejectsConcatAtLargerN) {
  env::TaskConfig t;
  t.n_agents = 4;
  policy::NetworkSpec net;
  net.embedding.kind = policy::EmbeddingKind::concat;
  net.embedding.max_neighbors = 3;
  std::mt19937_64 rng(1);
  const auto f = policy::FeatureSpec::from_task(t, env::WorldConfig{});
  const policy::Checkpoint ck{t, env::WorldConfig{}, net, policy::make_policy(f, net, rng),
                              policy::make_value_function(f, net, rng), 0};
  EXPECT_THROW(ex::cross_scale_eval(ck, 8, 1, 5, 1), env::ConfigError);
  EXPECT_NO_THROW(ex::cross_scale_eval(ck, 3, 1, 5, 1));
}

TEST(CrossScale, SizeInvariantRunsAnywhere) {
  env::TaskConfig t;
  t.n_agents = 10;
  policy::NetworkSpec net;
  std::mt19937_64 rng(2);
  const auto f = policy::FeatureSpec::from_task(t, env::WorldConfig{});
  const policy::Checkpoint ck{t, env::WorldConfig{}, net, policy::make_policy(f, net, rng),
                              policy::make_value_function(f, net, rng), 0};
  for (int n : {2, 5, 20}) {
    const auto rep = ex::cross_scale_eval(ck, n, 1, 5, 1);
    EXPECT_EQ(rep.embedding_dim, 64);
    EXPECT_EQ(rep.mean_distance.size(), 6u);
  }
}

TEST(Cli, SmokeRunWritesArtifactsDeterministically) {
  const fs::path dir = scratch("smoke");
  write_json(dir / "a.json", smoke_config(dir / "a"));
  write_json(dir / "b.json", smoke_config(dir / "b"));
  ASSERT_EQ(run_cli("train --config " + (dir / "a.json").string(), dir / "a.log"), 0) << slurp(dir / "a.log");
  ASSERT_EQ(run_cli("train --config " + (dir / "b.json").string(), dir / "b.log"), 0) << slurp(dir / "b.log");
  for (const char* f : {"config.snapshot", "curve.csv", "checkpoints/final.ckpt", "checkpoints/iter_000002.ckpt",
                        "eval/mean_distance.csv", "eval/returns.csv", "traj/episode_000.jsonl"})
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  const std::string curve = slurp(dir / "a" / "curve.csv");
  EXPECT_EQ(curve, slurp(dir / "b" / "curve.csv"));
  EXPECT_EQ(curve.rfind(swarmrl::trpo::kCurveHeader, 0), 0u);
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 3);
  EXPECT_EQ(slurp(dir / "a" / "checkpoints" / "final.ckpt"), slurp(dir / "b" / "checkpoints" / "final.ckpt"));

  // The checkpoint evaluates at another swarm size.
  ASSERT_EQ(run_cli("eval --checkpoint " + (dir / "a" / "checkpoints" / "final.ckpt").string() +
                        " --agents 7 --episodes 2 --horizon 20 --out " + (dir / "e").string(),
                    dir / "e.log"),
            0)
      << slurp(dir / "e.log");
  EXPECT_TRUE(fs::exists(dir / "e" / "eval" / "mean_distance.csv"));
  fs::remove_all(dir);
}

TEST(Cli, RejectsInvalidConfigBeforeCompute) {
  const fs::path dir = scratch("invalid");
  EXPECT_NE(run_cli("train --config /nonexistent.json --out " + (dir / "r").string(), dir / "x.log"), 0);
  policy::Json j = {{"out", (dir / "r").string()}, {"task", {{"features", "extended"}, {"relative_velocity", true}}}};
  write_json(dir / "bad.json", j);
  EXPECT_EQ(run_cli("train --config " + (dir / "bad.json").string(), dir / "bad.log"), 2);
  EXPECT_NE(slurp(dir / "bad.log").find("relative velocity"), std::string::npos) << slurp(dir / "bad.log");
  EXPECT_FALSE(fs::exists(dir / "r"));
  fs::remove_all(dir);
}

TEST(Cli, BaselineAndAggregate) {
  const fs::path dir = scratch("baseline");
  ASSERT_EQ(run_cli("baseline --controller consensus --agents 5 --episodes 2 --horizon 40 --out " + (dir / "pd").string(),
                    dir / "pd.log"),
            0)
      << slurp(dir / "pd.log");
  EXPECT_TRUE(fs::exists(dir / "pd" / "eval" / "mean_distance.csv"));
  for (int k = 0; k < 3; ++k) {
    std::ofstream os(dir / ("c" + std::to_string(k) + ".csv"));
    os << swarmrl::trpo::kCurveHeader << "\n";
    for (int it = 0; it < 2; ++it) os << it << ",10," << (k + it) << ",0,0,0,0\n";
  }
  ASSERT_EQ(run_cli("aggregate --top-q 2 --in " + (dir / "c0.csv").string() + " " + (dir / "c1.csv").string() + " " +
                        (dir / "c2.csv").string() + " --out " + (dir / "agg.csv").string(),
                    dir / "agg.log"),
            0)
      << slurp(dir / "agg.log");
  EXPECT_EQ(slurp(dir / "agg.csv"), "iter,median_avg_return\n0,1.5\n1,2.5\n");
  fs::remove_all(dir);
}
