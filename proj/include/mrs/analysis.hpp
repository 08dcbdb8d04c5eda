#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "mdp.hpp"
#include "trajectory.hpp"

namespace mrs {

// Sum over robots of r_{k,t} / (1 + kappa t) on the shared clock.
inline double team_discounted_reward(const TeamResult& result, double kappa = 1.0) {
  double total = 0.0;
  for (const auto& t : result.trajectories) total += hyperbolic_return(t.rewards, kappa);
  return total;
}

struct Overlap {
  int count = 0;
  double fraction = 0.0;
};

// Per cell, every distinct robot beyond the first that visited it counts once.
// Revisits by the same robot are not overlap.
inline Overlap path_overlap(const TeamResult& result) {
  std::map<Cell, int> visitors;
  for (const auto& traj : result.trajectories) {
    std::vector<Cell> cells = traj.path;
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    for (Cell c : cells) ++visitors[c];
  }
  Overlap o;
  for (const auto& [cell, n] : visitors) o.count += std::max(0, n - 1);
  o.fraction = visitors.empty() ? 0.0 : static_cast<double>(o.count) / static_cast<double>(visitors.size());
  return o;
}

struct MetricSummary {
  std::vector<double> values;
  double mean = 0.0;
  double median = 0.0;
  double std_error = 0.0;  // sample std / sqrt(n); 0 for a single trial
};

inline MetricSummary aggregate(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("aggregate: need at least one value");
  MetricSummary s;
  s.values.assign(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  std::vector<double> sorted = s.values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Savitzky-Golay smoothing

// Least-squares weights that evaluate a degree-`order` fit over `window` equally spaced
// samples at sample `at` (0-based inside the window).
inline Eigen::VectorXd savgol_weights(int window, int order, int at) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("savgol: window must be a positive odd integer");
  if (order < 0 || order >= window) throw std::invalid_argument("savgol: order must satisfy 0 <= order < window");
  if (at < 0 || at >= window) throw std::invalid_argument("savgol: evaluation point outside the window");
  const int half = window / 2;
  const double scale = std::max(half, 1);
  Eigen::MatrixXd vander(window, order + 1);
  for (int i = 0; i < window; ++i) {
    const double x = (i - half) / scale;
    double p = 1.0;
    for (int j = 0; j <= order; ++j, p *= x) vander(i, j) = p;
  }
  // rows of the pseudo-inverse give the polynomial coefficients as linear maps of the samples
  const Eigen::MatrixXd pinv = vander.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));
  Eigen::RowVectorXd basis(order + 1);
  const double x0 = (at - half) / scale;
  double p = 1.0;
  for (int j = 0; j <= order; ++j, p *= x0) basis(j) = p;
  return (basis * pinv).transpose();
}

struct Point {
  double row = 0.0;
  double col = 0.0;
};

// Smooths each coordinate independently. Interior samples use the centred window; the first
// and last window/2 samples are evaluated from the fit over the first/last full window.
inline std::vector<Point> savgol_smooth(std::span<const Point> path, int window, int order) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("savgol: window must be a positive odd integer");
  if (order < 0 || order >= window) throw std::invalid_argument("savgol: order must satisfy 0 <= order < window");
  const int n = static_cast<int>(path.size());
  if (n < window)
    throw std::invalid_argument("savgol: path of length " + std::to_string(n) + " is shorter than the window (" +
                                std::to_string(window) + "); use a smaller window");
  const int half = window / 2;
  std::vector<Eigen::VectorXd> weights;
  for (int at = 0; at < window; ++at) weights.push_back(savgol_weights(window, order, at));
  std::vector<Point> out(path.size());
  for (int i = 0; i < n; ++i) {
    int first, at;
    if (i < half) {
      first = 0;
      at = i;
    } else if (i >= n - half) {
      first = n - window;
      at = i - first;
    } else {
      first = i - half;
      at = half;
    }
    const auto& w = weights[static_cast<std::size_t>(at)];
    double r = 0.0, c = 0.0;
    for (int j = 0; j < window; ++j) {
      r += w[j] * path[static_cast<std::size_t>(first + j)].row;
      c += w[j] * path[static_cast<std::size_t>(first + j)].col;
    }
    out[static_cast<std::size_t>(i)] = {r, c};
  }
  return out;
}

}  // namespace mrs
