// Command-line driver: train, simulate, sweep, smooth.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "mrs/mrs.hpp"

namespace {

struct Flags {
  std::string config;
  std::string field;
  std::string params;
  std::string robots;
  std::string comm_range;
  int comm_period = 0;
  int horizon = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  std::string policy;
  std::string shaping;
  std::vector<std::string> fail;
  std::string starts;
  std::string out;
  std::string mode;
  int width = 0;
  int height = 0;
  double kappa = 0.0;
  // train
  int iterations = 0;
  int rollouts = 0;
  double learning_rate = 0.0;
  double gamma = 0.0;
  std::string estimator;
  std::string features;
  // smooth
  std::string input;
  int window = 0;
  int order = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key=value config file (flags override it)");
  cmd->add_option("--field", f.field, "field source: <path> | gauss:N | diffusion");
  cmd->add_option("--width", f.width, "generated field width in cells");
  cmd->add_option("--height", f.height, "generated field height in cells");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--mode", f.mode, "action space: 4conn | heading");
}

void add_fleet(CLI::App* cmd, Flags& f, bool lists) {
  cmd->add_option("--params", f.params, "trained parameter file (policy pg)");
  cmd->add_option("--robots", f.robots, lists ? "team sizes, comma separated" : "team size K");
  cmd->add_option("--comm-range", f.comm_range,
                  lists ? "communication ranges as fractions of d_max, comma separated"
                        : "communication range as a fraction of d_max");
  cmd->add_option("--comm-period", f.comm_period, "steps between state exchanges");
  cmd->add_option("--horizon", f.horizon, "steps per episode");
  cmd->add_option("--trials", f.trials, "independent trials");
  cmd->add_option("--policy", f.policy, "pg | darp_lite | maxima");
  cmd->add_option("--shaping", f.shaping, "off | distance");
  cmd->add_option("--fail", f.fail, "robot failure <id:step> (repeatable)");
  cmd->add_option("--starts", f.starts, "same | corners | random");
  cmd->add_option("--kappa", f.kappa, "hyperbolic discount for the reward metric");
}

// Config file first, then explicitly given flags.
mrs::ExperimentConfig resolve(const CLI::App& cmd, const Flags& f, bool lists) {
  using namespace mrs;
  ExperimentConfig cfg;
  if (!f.config.empty()) apply_config(load_config(f.config), cfg);
  auto given = [&](const char* name) { return cmd.get_option_no_throw(name) && cmd.count(name) > 0; };
  if (given("--field")) cfg.field = FieldSource::parse(f.field);
  if (given("--width")) cfg.width = f.width;
  if (given("--height")) cfg.height = f.height;
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--out")) cfg.out = f.out;
  if (given("--mode")) cfg.fleet.mode = cfg.train.mode = parse_action_mode(f.mode);
  if (given("--params")) cfg.params_path = f.params;
  if (given("--robots")) {
    cfg.robot_counts = parse_list<int>(f.robots, "--robots");
    if (!lists && cfg.robot_counts.size() != 1) throw std::invalid_argument("--robots takes a single value here");
    cfg.fleet.robots = cfg.robot_counts.front();
  }
  if (given("--comm-range")) {
    cfg.ranges = parse_list<double>(f.comm_range, "--comm-range");
    if (!lists && cfg.ranges.size() != 1) throw std::invalid_argument("--comm-range takes a single value here");
    cfg.fleet.comm_range = cfg.ranges.front();
  }
  if (given("--comm-period")) cfg.fleet.comm_period = f.comm_period;
  if (given("--horizon")) cfg.fleet.horizon = cfg.train.horizon = f.horizon;
  if (given("--trials")) cfg.trials = f.trials;
  if (given("--policy")) cfg.policy = parse_policy(f.policy);
  if (given("--shaping")) cfg.fleet.shaping = parse_shaping(f.shaping);
  if (given("--fail")) cfg.fleet.failures = parse_failures(f.fail);
  if (given("--starts")) cfg.fleet.starts = parse_start_preset(f.starts);
  if (given("--kappa")) cfg.kappa = f.kappa;
  if (given("--iterations")) cfg.train.iterations = f.iterations;
  if (given("--rollouts")) cfg.train.rollouts = f.rollouts;
  if (given("--lr")) cfg.train.learning_rate = f.learning_rate;
  if (given("--gamma")) cfg.train.gamma = f.gamma;
  if (given("--estimator")) cfg.train.estimator = parse_estimator(f.estimator);
  if (given("--features")) cfg.train.features = parse_feature_norm(f.features);
  if (given("--input")) cfg.input = f.input;
  if (given("--window")) cfg.window = f.window;
  if (given("--order")) cfg.order = f.order;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot policy-gradient sampling: training, team simulation, sweeps and path smoothing"};
  app.require_subcommand(1);
  Flags f;

  auto* train = app.add_subcommand("train", "train the shared sampling policy");
  add_common(train, f);
  train->add_option("--horizon", f.horizon, "steps per rollout");
  train->add_option("--iterations", f.iterations, "gradient steps");
  train->add_option("--rollouts", f.rollouts, "rollouts per iteration");
  train->add_option("--lr", f.learning_rate, "learning rate");
  train->add_option("--gamma", f.gamma, "training discount");
  train->add_option("--estimator", f.estimator, "reinforce | gpomdp");
  train->add_option("--features", f.features, "feature normalisation: peak | share");

  auto* simulate = app.add_subcommand("simulate", "run team trials and write trajectories + metrics");
  add_common(simulate, f);
  add_fleet(simulate, f, false);

  auto* sweep = app.add_subcommand("sweep", "aggregate metrics over communication ranges and team sizes");
  add_common(sweep, f);
  add_fleet(sweep, f, true);

  auto* smooth = app.add_subcommand("smooth", "Savitzky-Golay smoothing of a trajectory CSV");
  smooth->add_option("--config", f.config, "key=value config file");
  smooth->add_option("--input", f.input, "trajectory CSV")->required();
  smooth->add_option("--window", f.window, "odd window length (default 7)");
  smooth->add_option("--order", f.order, "polynomial order (default 3)");
  smooth->add_option("--out", f.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  mrs::ExperimentConfig cfg;
  CLI::App* cmd = app.get_subcommands().front();
  try {
    cfg = resolve(*cmd, f, cmd == sweep);
    cfg.validate();
    cfg.fleet.validate();
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (cmd == train) {
      const auto res = mrs::cmd_train(cfg);
      std::cout << "trained " << res.curve.size() << " iterations; final mean return "
                << (res.curve.empty() ? 0.0 : res.curve.back()) << '\n';
    } else if (cmd == simulate) {
      const auto rows = mrs::cmd_simulate(cfg);
      std::cout << "simulated " << rows.size() << " trials\n";
    } else if (cmd == sweep) {
      const auto points = mrs::cmd_sweep(cfg);
      std::cout << "swept " << points.size() << " grid points\n";
    } else {
      const auto rows = mrs::cmd_smooth(cfg);
      std::cout << "smoothed " << rows.size() << " rows\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
