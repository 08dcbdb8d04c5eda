#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "features.hpp"
#include "field.hpp"
#include "mdp.hpp"
#include "policy.hpp"
#include "rng.hpp"
#include "trajectory.hpp"

namespace mrs {

// What the policy saw and did at one decision point.
struct Decision {
  Eigen::VectorXd phi;
  std::vector<Action> feasible;
  Action action = Action::North;
};

struct Episode {
  Trajectory trajectory;
  std::vector<Decision> decisions;  // decisions[t] produced trajectory.actions[t]
};

// One decision of the shared policy on `local`, moving `robot` on `truth`. Used by both
// the single-agent rollout and the fleet simulation so the two stay draw-for-draw identical.
inline Decision decide(const ScoreMap& local, const RobotState& robot, const PolicyParams& params, RngStream& rng) {
  Decision d;
  d.phi = state_features(local, robot.position, params.layout, robot.heading);
  d.feasible = feasible_actions(robot, local.dims(), params.layout.mode);
  if (d.feasible.size() == 1) {
    d.action = d.feasible.front();
    rng.uniform();  // keep one draw per decision regardless of the support size
    return d;
  }
  const auto probs = action_probabilities(params, d.phi, d.feasible);
  d.action = d.feasible[sample_action(probs, rng)];
  return d;
}

inline RobotState random_start(GridDims dims, ActionMode mode, RngStream& rng) {
  RobotState s;
  const auto idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(dims.cell_count())));
  s.position = dims.cell(idx);
  if (mode == ActionMode::HeadingConstrained) s.heading = static_cast<Heading>(rng.below(8));
  return s;
}

// H decisions of the policy on a private copy of `map`. The start cell is scanned at t = 0.
inline Episode rollout(const ScoreMap& map, const PolicyParams& params, int horizon, RngStream& rng,
                       std::optional<RobotState> start = std::nullopt) {
  if (horizon < 0) throw std::invalid_argument("rollout: horizon must be >= 0");
  params.check();
  ScoreMap world = map;
  RobotState robot = start ? *start : random_start(map.dims(), params.layout.mode, rng);
  detail::expects(map.contains(robot.position), "rollout: start outside the grid");
  Episode ep;
  ep.trajectory.robot = robot.id;
  ep.trajectory.start(robot.position, scan(world, robot.position));
  ep.decisions.reserve(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    Decision d = decide(world, robot, params, rng);
    const double r = apply(world, robot, d.action, params.layout.mode);
    ep.trajectory.push(d.action, robot.position, r);
    ep.decisions.push_back(std::move(d));
  }
  return ep;
}

// ---------------------------------------------------------------------------
// Gradient estimators. Rewards are weighted by gamma^t on the trajectory clock. The start
// scan does not depend on theta and is left out of the returns the estimators use.

enum class Estimator { Reinforce, GPOMDP };

inline std::string_view to_string(Estimator e) { return e == Estimator::Reinforce ? "reinforce" : "gpomdp"; }

inline Estimator parse_estimator(std::string_view s) {
  if (s == "reinforce") return Estimator::Reinforce;
  if (s == "gpomdp") return Estimator::GPOMDP;
  throw std::invalid_argument("unknown estimator '" + std::string(s) + "' (expected reinforce or gpomdp)");
}

struct GradientEstimate {
  Eigen::VectorXd g;
  double mean_return = 0.0;
  double std_return = 0.0;
};

// R(tau) = sum_{t>=1} gamma^t r_t
inline double learning_return(const Trajectory& traj, double gamma) {
  double total = 0.0, w = 1.0;
  for (std::size_t t = 1; t < traj.rewards.size(); ++t) {
    w *= gamma;
    total += w * traj.rewards[t];
  }
  return total;
}

// Discounted reward-to-go after each decision: togo[t] = sum_{j>=t+1} gamma^j r_j.
inline std::vector<double> reward_to_go(const Trajectory& traj, double gamma) {
  const std::size_t n = traj.steps();
  std::vector<double> weighted(n + 1, 0.0);
  double w = 1.0;
  for (std::size_t j = 1; j <= n; ++j) {
    w *= gamma;
    weighted[j] = w * traj.rewards[j];
  }
  std::vector<double> togo(n, 0.0);
  double acc = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    acc += weighted[t + 1];
    togo[t] = acc;
  }
  return togo;
}

// grad log pi for every decision of the episode.
inline std::vector<Eigen::VectorXd> score_vectors(const Episode& ep, const PolicyParams& params) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(ep.decisions.size());
  for (const auto& d : ep.decisions) out.push_back(log_prob_gradient(params, d.phi, d.action, d.feasible));
  return out;
}

// Single-trajectory REINFORCE term for a fixed baseline.
inline Eigen::VectorXd reinforce_term(const Episode& ep, const PolicyParams& params, double gamma, double baseline) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(params.layout.total_dim());
  for (const auto& s : score_vectors(ep, params)) sum += s;
  return sum * (learning_return(ep.trajectory, gamma) - baseline);
}

// Single-trajectory G(PO)MDP term for fixed per-decision baselines.
inline Eigen::VectorXd gpomdp_term(const Episode& ep, const PolicyParams& params, double gamma,
                                   std::span<const double> baselines) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(params.layout.total_dim());
  const auto togo = reward_to_go(ep.trajectory, gamma);
  const auto scores = score_vectors(ep, params);
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const double b = t < baselines.size() ? baselines[t] : 0.0;
    sum += scores[t] * (togo[t] - b);
  }
  return sum;
}

namespace detail {

inline void return_stats(std::span<const Episode> batch, double gamma, GradientEstimate& est) {
  const double m = static_cast<double>(batch.size());
  double mean = 0.0;
  for (const auto& ep : batch) mean += learning_return(ep.trajectory, gamma);
  mean /= m;
  double ss = 0.0;
  for (const auto& ep : batch) {
    const double d = learning_return(ep.trajectory, gamma) - mean;
    ss += d * d;
  }
  est.mean_return = mean;
  est.std_return = batch.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
}

}  // namespace detail

// (1/m) sum_i [sum_t grad log pi] (R_i - b), b = batch mean return.
inline GradientEstimate reinforce_gradient(std::span<const Episode> batch, const PolicyParams& params, double gamma) {
  if (batch.empty()) throw std::invalid_argument("reinforce_gradient: empty batch");
  GradientEstimate est;
  detail::return_stats(batch, gamma, est);
  est.g = Eigen::VectorXd::Zero(params.layout.total_dim());
  for (const auto& ep : batch) est.g += reinforce_term(ep, params, gamma, est.mean_return);
  est.g /= static_cast<double>(batch.size());
  return est;
}

// (1/m) sum_i sum_t grad log pi_t (togo_{i,t} - b_t), b_t = batch mean reward-to-go at t.
inline GradientEstimate gpomdp_gradient(std::span<const Episode> batch, const PolicyParams& params, double gamma) {
  if (batch.empty()) throw std::invalid_argument("gpomdp_gradient: empty batch");
  GradientEstimate est;
  detail::return_stats(batch, gamma, est);
  std::vector<std::vector<double>> togo;
  std::size_t longest = 0;
  for (const auto& ep : batch) {
    togo.push_back(reward_to_go(ep.trajectory, gamma));
    longest = std::max(longest, togo.back().size());
  }
  std::vector<double> baseline(longest, 0.0);
  for (const auto& tg : togo)
    for (std::size_t t = 0; t < tg.size(); ++t) baseline[t] += tg[t];
  for (double& b : baseline) b /= static_cast<double>(batch.size());
  est.g = Eigen::VectorXd::Zero(params.layout.total_dim());
  for (const auto& ep : batch) est.g += gpomdp_term(ep, params, gamma, baseline);
  est.g /= static_cast<double>(batch.size());
  return est;
}

inline GradientEstimate estimate_gradient(Estimator which, std::span<const Episode> batch, const PolicyParams& params,
                                          double gamma) {
  return which == Estimator::Reinforce ? reinforce_gradient(batch, params, gamma)
                                       : gpomdp_gradient(batch, params, gamma);
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int width = 25;
  int height = 25;
  MixtureSampling fields{1, 3};
  ActionMode mode = ActionMode::FourConnected;
  FeatureNorm features = FeatureNorm::PeakRelative;
  int horizon = 150;
  int rollouts = 10;
  int iterations = 600;
  double learning_rate = 0.1;
  bool decay = true;  // eta_i = eta / sqrt(i + 1)
  double gamma = 0.95;
  Estimator estimator = Estimator::GPOMDP;
  std::uint64_t seed = 1;

  void validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("train: grid must be at least 1x1");
    if (horizon < 1) throw std::invalid_argument("train: horizon must be >= 1");
    if (rollouts < 1) throw std::invalid_argument("train: rollouts per iteration must be >= 1");
    if (iterations < 0) throw std::invalid_argument("train: iterations must be >= 0");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("train: learning rate must be >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("train: gamma must lie in [0, 1]");
  }
};

struct TrainResult {
  PolicyParams params;
  std::vector<double> curve;  // batch mean learning return per iteration
  std::vector<std::string> warnings;
};

inline constexpr double kDivergenceLimit = 1e6;

// Stream keys; fixed so results depend only on (seed, iteration, rollout).
inline constexpr std::uint64_t kFieldStream = 0xf1e1d;
inline constexpr std::uint64_t kRolloutStream = 0x2011;

inline ScoreMap training_field(const TrainConfig& cfg, int iteration) {
  RngStream rng(derive_seed(cfg.seed, {kFieldStream, static_cast<std::uint64_t>(iteration)}));
  return gaussian_mixture_field(cfg.width, cfg.height, random_mixture(cfg.width, cfg.height, cfg.fields, rng));
}

inline TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  TrainResult result;
  result.params = PolicyParams::zeros(make_layout({cfg.width, cfg.height}, cfg.mode, cfg.features));
  if (cfg.rollouts == 1)
    result.warnings.emplace_back(
        "rollouts=1: the batch-mean baseline equals the only return, so every gradient is zero; use >= 2");
  result.curve.reserve(static_cast<std::size_t>(cfg.iterations));
  std::vector<Episode> batch(static_cast<std::size_t>(cfg.rollouts));
  for (int it = 0; it < cfg.iterations; ++it) {
    const ScoreMap field = training_field(cfg, it);
    for (int i = 0; i < cfg.rollouts; ++i) {
      RngStream rng(derive_seed(cfg.seed, {kRolloutStream, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(i)}));
      batch[static_cast<std::size_t>(i)] = rollout(field, result.params, cfg.horizon, rng);
    }
    const GradientEstimate est = estimate_gradient(cfg.estimator, batch, result.params, cfg.gamma);
    const double eta = cfg.decay ? cfg.learning_rate / std::sqrt(static_cast<double>(it + 1)) : cfg.learning_rate;
    result.params.theta += eta * est.g;
    result.curve.push_back(est.mean_return);
    const double worst = result.params.theta.cwiseAbs().maxCoeff();
    if (!std::isfinite(worst) || worst > kDivergenceLimit)
      throw DivergenceError("train: parameters diverged at iteration " + std::to_string(it) + " (max |theta| = " +
                            std::to_string(worst) + "); lower the learning rate");
  }
  return result;
}

// Mean discounted return (start scan included) of `params` over `episodes` fresh fields.
struct EvaluationConfig {
  int width = 25;
  int height = 25;
  MixtureSampling fields{1, 3};
  int horizon = 150;
  double gamma = 0.95;
  int episodes = 50;
  std::uint64_t seed = 7;
};

inline double evaluate(const PolicyParams& params, const EvaluationConfig& cfg) {
  double total = 0.0;
  for (int e = 0; e < cfg.episodes; ++e) {
    RngStream field_rng(derive_seed(cfg.seed, {kFieldStream, static_cast<std::uint64_t>(e)}));
    const ScoreMap field =
        gaussian_mixture_field(cfg.width, cfg.height, random_mixture(cfg.width, cfg.height, cfg.fields, field_rng));
    RngStream rng(derive_seed(cfg.seed, {kRolloutStream, static_cast<std::uint64_t>(e)}));
    const Episode ep = rollout(field, params, cfg.horizon, rng);
    total += discounted_return(ep.trajectory.rewards, cfg.gamma);
  }
  return cfg.episodes > 0 ? total / cfg.episodes : 0.0;
}

}  // namespace mrs
