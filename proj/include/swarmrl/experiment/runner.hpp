#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "swarmrl/experiment/config.hpp"
#include "swarmrl/experiment/metrics.hpp"

namespace swarmrl::experiment {

namespace fs = std::filesystem;

inline std::ofstream open_out(const fs::path& p, bool binary = false) {
  if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
  std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

inline void write_snapshot(const fs::path& dir, const ExperimentConfig& cfg) {
  auto os = open_out(dir / "config.snapshot");
  os << to_json(cfg).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// CSV artifacts

inline void write_eval_csvs(const fs::path& dir, const EvalReport& rep) {
  if (!rep.mean_distance.empty()) {
    auto os = open_out(dir / "eval" / "mean_distance.csv");
    os << "t,mean_distance\n";
    for (std::size_t t = 0; t < rep.mean_distance.size(); ++t)
      os << t << "," << trpo::format_double(rep.mean_distance[t]) << "\n";
  }
  if (!rep.capture.empty()) {
    auto os = open_out(dir / "eval" / "capture.csv");
    os << "t,capture_fraction\n";
    for (std::size_t t = 0; t < rep.capture.size(); ++t) os << t << "," << trpo::format_double(rep.capture[t]) << "\n";
  }
  auto os = open_out(dir / "eval" / "returns.csv");
  os << "episode,return\n";
  for (std::size_t k = 0; k < rep.episode_returns.size(); ++k)
    os << k << "," << trpo::format_double(rep.episode_returns[k]) << "\n";
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw std::runtime_error(where + ": not a number: '" + s + "'");
  return v;
}

/// Parses a learning-curve CSV written by write_curve.
inline trpo::LearningCurve read_curve(std::istream& is, const std::string& name = "curve.csv") {
  std::string line;
  if (!std::getline(is, line) || line != trpo::kCurveHeader)
    throw std::runtime_error(name + ": unexpected header (want '" + std::string(trpo::kCurveHeader) + "')");
  trpo::LearningCurve out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    const std::string where = name + ":" + std::to_string(lineno);
    if (c.size() != 7) throw std::runtime_error(where + ": expected 7 columns");
    trpo::IterationRecord r;
    r.iter = static_cast<int>(parse_double(c[0], where));
    r.samples = static_cast<long long>(parse_double(c[1], where));
    r.avg_return = parse_double(c[2], where);
    r.mean_kl = parse_double(c[3], where);
    r.surrogate_improvement = parse_double(c[4], where);
    r.value_loss = parse_double(c[5], where);
    r.wall_time_s = parse_double(c[6], where);
    out.push_back(r);
  }
  return out;
}

inline trpo::LearningCurve read_curve_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  return read_curve(is, p.string());
}

inline void write_aggregate(std::ostream& os, const std::vector<double>& median) {
  os << "iter,median_avg_return\n";
  for (std::size_t t = 0; t < median.size(); ++t) os << t << "," << trpo::format_double(median[t]) << "\n";
}

/// top_q_median over the avg_return column of several curve files.
inline std::vector<double> aggregate_curves(const std::vector<fs::path>& files, int q) {
  std::vector<std::vector<double>> curves;
  for (const auto& f : files) {
    std::vector<double> c;
    for (const auto& r : read_curve_file(f)) c.push_back(r.avg_return);
    curves.push_back(std::move(c));
  }
  return top_q_median(curves, q);
}

// ---------------------------------------------------------------------------
// Controllers

inline ControllerFactory baseline_factory(const std::string& name) {
  if (name == "zero") return [] { return std::make_unique<baselines::ZeroController>(); };
  if (name == "random") return [] { return std::make_unique<baselines::RandomController>(); };
  if (name == "consensus") return [] { return std::make_unique<baselines::ConsensusController>(); };
  if (name == "voronoi") return [] { return std::make_unique<baselines::VoronoiPursuitController>(); };
  if (name == "chase") return [] { return std::make_unique<baselines::DirectChaseController>(); };
  if (name == "surround") return [] { return std::make_unique<baselines::SurroundController>(); };
  throw env::ConfigError("unknown baseline '" + name + "' (zero|random|consensus|voronoi|chase|surround)");
}

inline ControllerFactory policy_factory(const policy::Policy& pol, bool greedy) {
  return [pol, greedy] { return std::make_unique<baselines::PolicyController>(pol, greedy); };
}

/// eval/*.csv and traj/*.jsonl for one controller.
inline EvalReport evaluate_into(const fs::path& dir, const ControllerFactory& make, const ExperimentConfig& cfg,
                                int threads) {
  const int horizon = cfg.eval.resolved_horizon(cfg.task);
  EvalReport rep = evaluate(make, cfg.task, cfg.world, cfg.eval.episodes, horizon, cfg.seed, threads);
  write_eval_csvs(dir, rep);
  for (int k = 0; k < cfg.eval.trajectories; ++k) {
    std::ostringstream name;
    name << "episode_" << std::setw(3) << std::setfill('0') << k << ".jsonl";
    auto os = open_out(dir / "traj" / name.str());
    auto ctl = make();
    write_trajectory(os, *ctl, cfg.task, cfg.world, horizon, episode_seed(cfg.seed, k));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Entry points

struct TrainOutput {
  std::vector<trpo::TrainResult> trials;
  std::vector<double> aggregate;  // only for trials > 1
};

inline fs::path checkpoint_name(int iteration) {
  std::ostringstream s;
  s << "iter_" << std::setw(6) << std::setfill('0') << iteration << ".ckpt";
  return s.str();
}

/// Trains cfg.trials independent runs (trial k uses seed derived from
/// cfg.seed and k; a single trial uses cfg.seed directly), then evaluates
/// the final greedy policy of each.
inline TrainOutput run_train(const ExperimentConfig& cfg, int threads, std::ostream* log = nullptr) {
  cfg.validate();
  const fs::path root(cfg.out);
  fs::create_directories(root);
  write_snapshot(root, cfg);
  TrainOutput out;
  std::vector<fs::path> curves;
  for (int k = 0; k < cfg.trials; ++k) {
    ExperimentConfig tc = cfg;
    fs::path dir = root;
    if (cfg.trials > 1) {
      std::ostringstream n;
      n << "trial_" << std::setw(2) << std::setfill('0') << k;
      dir = root / n.str();
      tc.seed = trpo::derive_seed(cfg.seed, 0x7a1, static_cast<std::uint64_t>(k));
      tc.out = dir.string();
      fs::create_directories(dir);
      write_snapshot(dir, tc);
    }
    trpo::TrainerConfig tr = tc.trainer;
    tr.seed = tc.seed;
    tr.threads = threads;
    auto curve_os = open_out(dir / "curve.csv");
    curve_os << trpo::kCurveHeader << "\n";
    trpo::TrainHooks hooks;
    hooks.on_iteration = [&](const trpo::IterationRecord& r) {
      curve_os << trpo::curve_row(r) << "\n";
      curve_os.flush();
      if (log)
        *log << "[trial " << k << "] iter " << r.iter << " avg_return " << trpo::format_double(r.avg_return)
             << " kl " << r.mean_kl << (r.diagnostic.empty() ? "" : " (" + r.diagnostic + ")") << "\n";
    };
    hooks.on_checkpoint = [&](int it, const policy::Policy& p, const policy::ValueFunction& v) {
      policy::Checkpoint c{tc.task, tc.world, tc.network, p, v, it};
      policy::save_checkpoint(dir / "checkpoints" / checkpoint_name(it), c);
      if (it == tr.iterations) policy::save_checkpoint(dir / "checkpoints" / "final.ckpt", c);
    };
    fs::create_directories(dir / "checkpoints");
    trpo::TrainResult res = trpo::train(tc.task, tc.world, tc.network, tr, hooks);
    evaluate_into(dir, policy_factory(res.policy, cfg.eval.greedy), tc, threads);
    curves.push_back(dir / "curve.csv");
    out.trials.push_back(std::move(res));
  }
  if (cfg.trials > 1) {
    out.aggregate = aggregate_curves(curves, std::min(cfg.top_q, cfg.trials));
    auto os = open_out(root / "aggregate.csv");
    write_aggregate(os, out.aggregate);
  }
  return out;
}

/// Evaluates a checkpoint under cfg's task (swarm size may differ from
/// training; see cross_scale_eval).
inline EvalReport run_eval(const ExperimentConfig& cfg, const fs::path& checkpoint, int threads) {
  const policy::Checkpoint ck = policy::load_checkpoint(checkpoint);
  const auto& emb = ck.policy.net.spec().embedding;
  if (!emb.size_invariant() && cfg.task.n_agents - 1 > emb.max_neighbors)
    throw env::ConfigError("eval: the concat encoder was trained for at most " + std::to_string(emb.max_neighbors) +
                           " neighbours; it cannot run with " + std::to_string(cfg.task.n_agents) + " agents");
  if (ck.task.task != cfg.task.task || ck.task.features != cfg.task.features ||
      ck.task.observability != cfg.task.observability || ck.task.dynamics != cfg.task.dynamics)
    throw env::ConfigError("eval: task, features, observability and dynamics must match the checkpoint");
  if (ck.world.x_max != cfg.world.x_max || ck.world.y_max != cfg.world.y_max || ck.world.boundary != cfg.world.boundary)
    throw env::ConfigError("eval: world size and boundary must match the checkpoint");
  fs::create_directories(cfg.out);
  write_snapshot(cfg.out, cfg);
  EvalReport rep = evaluate_into(cfg.out, policy_factory(ck.policy, cfg.eval.greedy), cfg, threads);
  rep.embedding_dim = static_cast<long>(ck.policy.net.embedding_dim());
  return rep;
}

inline EvalReport run_baseline(const ExperimentConfig& cfg, const std::string& name, int threads) {
  cfg.validate();
  fs::create_directories(cfg.out);
  write_snapshot(cfg.out, cfg);
  return evaluate_into(cfg.out, baseline_factory(name), cfg, threads);
}

}  // namespace swarmrl::experiment
