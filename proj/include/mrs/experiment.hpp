#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "baselines.hpp"
#include "field.hpp"
#include "fleet.hpp"
#include "io.hpp"
#include "learn.hpp"
#include "rng.hpp"

namespace mrs {

enum class PolicyKind { Pg, DarpLite, Maxima };

inline PolicyKind parse_policy(std::string_view s) {
  if (s == "pg") return PolicyKind::Pg;
  if (s == "darp_lite") return PolicyKind::DarpLite;
  if (s == "maxima") return PolicyKind::Maxima;
  throw std::invalid_argument("unknown policy '" + std::string(s) + "' (expected pg, darp_lite or maxima)");
}

inline std::string_view to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::Pg: return "pg";
    case PolicyKind::DarpLite: return "darp_lite";
    case PolicyKind::Maxima: return "maxima";
  }
  return "?";
}

// `gauss:N` (random N-component mixture), `diffusion`, or a CSV path.
struct FieldSource {
  enum class Kind { Gauss, Diffusion, File } kind = Kind::Gauss;
  int components = 2;
  std::string path;

  static FieldSource parse(const std::string& s) {
    FieldSource f;
    if (s.rfind("gauss:", 0) == 0) {
      f.kind = Kind::Gauss;
      f.components = detail::parse_number<int>(std::string_view(s).substr(6), "--field gauss:N");
      if (f.components < 1) throw std::invalid_argument("--field gauss:N needs N >= 1");
    } else if (s == "diffusion") {
      f.kind = Kind::Diffusion;
    } else {
      f.kind = Kind::File;
      f.path = s;
    }
    return f;
  }
};

struct ExperimentConfig {
  FieldSource field;
  int width = 25;
  int height = 25;
  FleetConfig fleet;
  PolicyKind policy = PolicyKind::Pg;
  std::string params_path;
  TrainConfig train;
  std::vector<double> ranges{0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.50, 0.75, 1.0};
  std::vector<int> robot_counts{2};
  int trials = 20;
  std::uint64_t seed = 1;
  double kappa = 1.0;
  int window = 7;
  int order = 3;
  std::string input;
  std::string out = ".";

  void validate() const {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (ranges.empty()) throw std::invalid_argument("sweep: communication range list is empty");
    if (robot_counts.empty()) throw std::invalid_argument("sweep: robot count list is empty");
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
    if (width < 1 || height < 1) throw std::invalid_argument("field dimensions must be >= 1");
  }
};

inline std::vector<Failure> parse_failures(const std::vector<std::string>& specs) {
  std::vector<Failure> out;
  for (const auto& s : specs) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("--fail expects <id:step>, got '" + s + "'");
    out.push_back({detail::parse_number<int>(std::string_view(s).substr(0, colon), "--fail id"),
                   detail::parse_number<int>(std::string_view(s).substr(colon + 1), "--fail step")});
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s, std::string_view what) {
  std::vector<T> out;
  for (const auto& item : detail::split(s, ',')) out.push_back(detail::parse_number<T>(item, what));
  return out;
}

// Applies a flat key=value config on top of `cfg`. Unknown keys are rejected.
inline void apply_config(const ConfigMap& map, ExperimentConfig& cfg) {
  for (const auto& [key, value] : map) {
    auto num = [&]<typename T>(T& target) { target = detail::parse_number<T>(value, key); };
    if (key == "seed") {
      num(cfg.seed);
    } else if (key == "trials" || key == "sweep.trials") {
      num(cfg.trials);
    } else if (key == "out") {
      cfg.out = value;
    } else if (key == "params") {
      cfg.params_path = value;
    } else if (key == "kappa") {
      num(cfg.kappa);
    } else if (key == "field.source") {
      cfg.field = FieldSource::parse(value);
    } else if (key == "field.width") {
      num(cfg.width);
    } else if (key == "field.height") {
      num(cfg.height);
    } else if (key == "fleet.robots") {
      num(cfg.fleet.robots);
    } else if (key == "fleet.comm_range") {
      num(cfg.fleet.comm_range);
    } else if (key == "fleet.comm_period") {
      num(cfg.fleet.comm_period);
    } else if (key == "fleet.horizon") {
      num(cfg.fleet.horizon);
    } else if (key == "fleet.starts") {
      cfg.fleet.starts = parse_start_preset(value);
    } else if (key == "fleet.shaping") {
      cfg.fleet.shaping = parse_shaping(value);
    } else if (key == "fleet.fail") {
      cfg.fleet.failures = parse_failures(detail::split(value, ','));
    } else if (key == "fleet.policy") {
      cfg.policy = parse_policy(value);
    } else if (key == "mode" || key == "fleet.mode" || key == "train.mode") {
      cfg.fleet.mode = cfg.train.mode = parse_action_mode(value);
    } else if (key == "train.iterations") {
      num(cfg.train.iterations);
    } else if (key == "train.rollouts") {
      num(cfg.train.rollouts);
    } else if (key == "train.horizon") {
      num(cfg.train.horizon);
    } else if (key == "train.learning_rate") {
      num(cfg.train.learning_rate);
    } else if (key == "train.decay") {
      cfg.train.decay = value == "true" || value == "1";
    } else if (key == "train.gamma") {
      num(cfg.train.gamma);
    } else if (key == "train.estimator") {
      cfg.train.estimator = parse_estimator(value);
    } else if (key == "train.features") {
      cfg.train.features = parse_feature_norm(value);
    } else if (key == "train.components") {
      const auto parts = parse_list<int>(std::string(value), key);
      cfg.train.fields.min_components = parts.front();
      cfg.train.fields.max_components = parts.back();
    } else if (key == "sweep.ranges") {
      cfg.ranges = parse_list<double>(value, key);
    } else if (key == "sweep.robots") {
      cfg.robot_counts = parse_list<int>(value, key);
    } else if (key == "smooth.window") {
      num(cfg.window);
    } else if (key == "smooth.order") {
      num(cfg.order);
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
}

inline constexpr std::uint64_t kTrialStream = 0x7a1a1;
inline constexpr std::uint64_t kExperimentFieldStream = 0xf1e1d0;

inline std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return derive_seed(seed, {kTrialStream, static_cast<std::uint64_t>(trial)});
}

// Seeded diffusion field: four random point sources spread for 2 * max(width, height) steps.
inline ScoreMap random_diffusion_field(int width, int height, RngStream& rng) {
  std::vector<PointSource> sources;
  for (int i = 0; i < 4; ++i)
    sources.push_back({{static_cast<int>(rng.below(static_cast<std::uint64_t>(height))),
                        static_cast<int>(rng.below(static_cast<std::uint64_t>(width)))},
                       rng.uniform(0.5, 1.0)});
  return diffusion_field(width, height, sources, 0.25, 2 * std::max(width, height));
}

// The experiment's field; generated fields depend only on the master seed.
inline ScoreMap make_field(const ExperimentConfig& cfg) {
  RngStream rng(derive_seed(cfg.seed, {kExperimentFieldStream}));
  switch (cfg.field.kind) {
    case FieldSource::Kind::File: return load_field(cfg.field.path);
    case FieldSource::Kind::Diffusion: return random_diffusion_field(cfg.width, cfg.height, rng);
    case FieldSource::Kind::Gauss: {
      MixtureSampling how;
      how.min_components = how.max_components = cfg.field.components;
      return gaussian_mixture_field(cfg.width, cfg.height, random_mixture(cfg.width, cfg.height, how, rng));
    }
  }
  throw std::logic_error("unreachable");
}

inline std::vector<Cell> cells_of(const std::vector<RobotState>& states) {
  std::vector<Cell> out;
  for (const auto& s : states) out.push_back(s.position);
  return out;
}

// One trial of the selected policy. `fleet.seed` is replaced by the trial seed.
inline TeamResult run_trial(const ScoreMap& field, const std::optional<PolicyParams>& params, PolicyKind policy,
                            FleetConfig fleet, std::uint64_t master_seed, int trial) {
  fleet.seed = trial_seed(master_seed, trial);
  switch (policy) {
    case PolicyKind::Pg:
      if (!params) throw ConfigError("policy pg needs a parameter file (--params)");
      return simulate_team(field, *params, fleet);
    case PolicyKind::DarpLite:
      fleet.validate();
      if (fleet.robots > 1 && fleet.starts == StartPreset::Same && fleet.start_cells.empty())
        throw ConfigError("policy darp_lite needs distinct start cells; use --starts corners or --starts random");
      return coverage_team(field, cells_of(start_states(fleet, field.dims())), fleet.horizon);
    case PolicyKind::Maxima:
      fleet.validate();
      return maxima_search_team(field, cells_of(start_states(fleet, field.dims())), fleet.horizon);
  }
  throw std::logic_error("unreachable");
}

inline std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

inline std::optional<PolicyParams> policy_params(const ExperimentConfig& cfg) {
  if (cfg.policy != PolicyKind::Pg) return std::nullopt;
  if (cfg.params_path.empty()) throw ConfigError("policy pg needs a parameter file (--params)");
  return load_params(cfg.params_path);
}

// ---------------------------------------------------------------------------
// Commands

inline TrainResult cmd_train(ExperimentConfig cfg, std::ostream& log = std::cerr) {
  cfg.validate();
  cfg.train.width = cfg.width;
  cfg.train.height = cfg.height;
  cfg.train.seed = cfg.seed;
  const auto dir = prepare_out(cfg.out);
  TrainResult res = train(cfg.train);
  for (const auto& w : res.warnings) log << "warning: " << w << '\n';
  save_params(res.params, (dir / "params.txt").string());
  auto curve = detail::open_out((dir / "curve.csv").string());
  curve << "iteration,mean_return\n";
  for (std::size_t i = 0; i < res.curve.size(); ++i) curve << i << ',' << format_real(res.curve[i]) << '\n';
  return res;
}

inline std::vector<TrialMetrics> cmd_simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dir = prepare_out(cfg.out);
  const ScoreMap field = make_field(cfg);
  const auto params = policy_params(cfg);
  auto traj = detail::open_out((dir / "trajectories.csv").string());
  auto metrics = detail::open_out((dir / "metrics.csv").string());
  traj << kTrajectoryHeader << '\n';
  metrics << kMetricsHeader << '\n';
  std::vector<TrialMetrics> out;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    const TeamResult r = run_trial(field, params, cfg.policy, cfg.fleet, cfg.seed, trial);
    write_trajectory_rows(traj, trial, r);
    out.push_back(measure(trial, std::string(to_string(cfg.policy)), cfg.fleet.robots, cfg.fleet.comm_range,
                          cfg.fleet.comm_period, r, cfg.kappa));
    write_metrics_row(metrics, out.back());
  }
  return out;
}

struct SweepPoint {
  int robots = 0;
  double comm_range = 0.0;
  MetricSummary discounted, undiscounted, overlap_count, overlap_fraction, messages;
};

inline std::vector<SweepPoint> cmd_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto dir = prepare_out(cfg.out);
  const ScoreMap field = make_field(cfg);
  const auto params = policy_params(cfg);
  auto agg = detail::open_out((dir / "sweep.csv").string());
  auto trials_out = detail::open_out((dir / "sweep_trials.csv").string());
  trials_out << kMetricsHeader << '\n';
  agg << "policy,K,comm_range,comm_period,trials";
  for (const char* m : {"discounted_reward", "undiscounted_reward", "overlap_count", "overlap_fraction", "messages"})
    agg << ',' << m << "_mean," << m << "_median," << m << "_se";
  agg << '\n';
  std::vector<SweepPoint> points;
  for (int robots : cfg.robot_counts) {
    for (double range : cfg.ranges) {
      FleetConfig fleet = cfg.fleet;
      fleet.robots = robots;
      fleet.comm_range = range;
      std::vector<double> disc, undisc, ocount, ofrac, msgs;
      for (int trial = 0; trial < cfg.trials; ++trial) {
        TeamResult r;
        try {
          r = run_trial(field, params, cfg.policy, fleet, cfg.seed, trial);
        } catch (const std::exception& e) {
          throw std::runtime_error("sweep point K=" + std::to_string(robots) + ", comm_range=" + format_real(range) +
                                   ", trial " + std::to_string(trial) + ": " + e.what());
        }
        const TrialMetrics m =
            measure(trial, std::string(to_string(cfg.policy)), robots, range, fleet.comm_period, r, cfg.kappa);
        write_metrics_row(trials_out, m);
        disc.push_back(m.discounted_reward);
        undisc.push_back(m.undiscounted_reward);
        ocount.push_back(m.overlap_count);
        ofrac.push_back(m.overlap_fraction);
        msgs.push_back(m.messages);
      }
      SweepPoint p{robots, range, aggregate(disc), aggregate(undisc), aggregate(ocount), aggregate(ofrac),
                   aggregate(msgs)};
      agg << to_string(cfg.policy) << ',' << robots << ',' << format_real(range) << ',' << fleet.comm_period << ','
          << cfg.trials;
      for (const MetricSummary* s : {&p.discounted, &p.undiscounted, &p.overlap_count, &p.overlap_fraction, &p.messages})
        agg << ',' << format_real(s->mean) << ',' << format_real(s->median) << ',' << format_real(s->std_error);
      agg << '\n';
      points.push_back(std::move(p));
    }
  }
  return points;
}

// Smooths every (trial, robot) path of a trajectory CSV; writes the same schema with real
// row/col values.
inline std::vector<TrajectoryRow> smooth_rows(const std::vector<TrajectoryRow>& rows, int window, int order) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) groups[{rows[i].trial, rows[i].robot}].push_back(i);
  std::vector<TrajectoryRow> out = rows;
  for (auto& [key, idx] : groups) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rows[a].t < rows[b].t; });
    std::vector<Point> path;
    for (std::size_t i : idx) path.push_back({rows[i].row, rows[i].col});
    if (static_cast<int>(path.size()) < window)
      throw std::invalid_argument("smooth: trial " + std::to_string(key.first) + ", robot " +
                                  std::to_string(key.second) + " has only " + std::to_string(path.size()) +
                                  " points, fewer than window " + std::to_string(window) +
                                  "; choose a smaller --window");
    const auto smoothed = savgol_smooth(path, window, order);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out[idx[j]].row = smoothed[j].row;
      out[idx[j]].col = smoothed[j].col;
    }
  }
  return out;
}

inline void write_smoothed(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << kTrajectoryHeader << '\n';
  for (const auto& r : rows)
    out << r.trial << ',' << r.robot << ',' << r.t << ',' << format_real(r.row) << ',' << format_real(r.col) << ','
        << r.action << ',' << r.reward << '\n';
}

inline std::vector<TrajectoryRow> cmd_smooth(const ExperimentConfig& cfg) {
  if (cfg.input.empty()) throw std::invalid_argument("smooth: no input trajectory CSV given (--input)");
  std::ifstream in(cfg.input);
  if (!in) throw std::runtime_error("cannot open " + cfg.input);
  const auto rows = smooth_rows(parse_trajectory_csv(in, cfg.input), cfg.window, cfg.order);
  const auto dir = prepare_out(cfg.out);
  auto out = detail::open_out((dir / "smoothed.csv").string());
  write_smoothed(out, rows);
  return rows;
}

}  // namespace mrs
