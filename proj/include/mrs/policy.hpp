#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "errors.hpp"
#include "features.hpp"
#include "mdp.hpp"
#include "rng.hpp"

namespace mrs {

// Linear Gibbs softmax policy: one parameter block of length k per action.
struct PolicyParams {
  Eigen::VectorXd theta;
  FeatureLayout layout;

  static PolicyParams zeros(const FeatureLayout& layout) {
    return {Eigen::VectorXd::Zero(layout.total_dim()), layout};
  }

  void check() const {
    if (theta.size() != layout.total_dim())
      throw ConfigError("policy parameters have " + std::to_string(theta.size()) + " entries, layout expects " +
                        std::to_string(layout.total_dim()));
    if (!theta.allFinite()) throw ConfigError("policy parameters contain non-finite entries");
  }
};

namespace detail {

inline double logit(const PolicyParams& params, const Eigen::VectorXd& phi_s, Action a) {
  const int idx = policy_index(a);
  if (idx < 0) return 0.0;
  const Eigen::Index k = params.layout.state_dim();
  return params.theta.segment(idx * k, k).dot(phi_s);
}

inline void check_support(const PolicyParams& params, const Eigen::VectorXd& phi_s, std::span<const Action> feasible) {
  expects(!feasible.empty(), "policy: empty feasible action set");
  expects(phi_s.size() == params.layout.state_dim(), "policy: state feature length does not match the layout");
  if (feasible.size() > 1)
    for (Action a : feasible)
      expects(policy_index(a) >= 0 && (a <= Action::West) == (params.layout.mode == ActionMode::FourConnected),
              "policy: action outside the policy's action space");
}

}  // namespace detail

// Softmax over the feasible actions only; infeasible actions get no probability mass.
inline std::vector<double> action_probabilities(const PolicyParams& params, const Eigen::VectorXd& phi_s,
                                                std::span<const Action> feasible) {
  detail::check_support(params, phi_s, feasible);
  std::vector<double> p(feasible.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < feasible.size(); ++i) {
    p[i] = detail::logit(params, phi_s, feasible[i]);
    top = std::max(top, p[i]);
  }
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - top);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

// Inverse-CDF draw; returns an index into `probabilities`.
inline std::size_t sample_action(std::span<const double> probabilities, RngStream& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (u < cumulative) return i;
  }
  // u landed in the rounding gap above the last partial sum
  for (std::size_t i = probabilities.size(); i-- > 0;)
    if (probabilities[i] > 0.0) return i;
  return 0;
}

// grad_theta log pi(a | s) = phi_sa - sum_b pi(b) phi_sb.
inline Eigen::VectorXd log_prob_gradient(const PolicyParams& params, const Eigen::VectorXd& phi_s, Action chosen,
                                         std::span<const Action> feasible) {
  const auto probs = action_probabilities(params, phi_s, feasible);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.layout.total_dim());
  bool found = false;
  const Eigen::Index k = params.layout.state_dim();
  for (std::size_t i = 0; i < feasible.size(); ++i) {
    const int idx = policy_index(feasible[i]);
    const double coeff = (feasible[i] == chosen ? 1.0 : 0.0) - probs[i];
    found = found || feasible[i] == chosen;
    if (idx >= 0) grad.segment(idx * k, k) += coeff * phi_s;
  }
  detail::expects(found, "log_prob_gradient: chosen action is not feasible");
  if (feasible.size() == 1) grad.setZero();
  return grad;
}

}  // namespace mrs
