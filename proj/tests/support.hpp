#pragma once

// Test helpers shared by the unit tests and the acceptance runner. The toy-MDP oracle
// recomputes features, the softmax and its derivative from scratch so that the library's
// estimators can be checked against an independent brute-force enumeration.

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "mrs/mrs.hpp"

namespace test {

inline mrs::ScoreMap random_map(int width, int height, mrs::RngStream& rng, double zero_fraction = 0.2) {
  std::vector<double> v(static_cast<std::size_t>(width) * height);
  for (double& x : v) x = rng.uniform() < zero_fraction ? 0.0 : rng.uniform();
  return mrs::ScoreMap(width, height, std::move(v));
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mrs_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Runs a shell command, returns its exit status; stdout+stderr go to `log` if given.
inline int run(const std::string& command, std::string* log = nullptr) {
  const std::string full = command + " 2>&1";
  FILE* pipe = ::popen(full.c_str(), "r");
  if (!pipe) return -1;
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = ::pclose(pipe);
  if (log) *log = out;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------
// Enumerable single-robot MDP on a tiny grid, four-connected moves, peak-relative features
// on one pyramid level (grids up to 3x3).

struct ToyPath {
  double prob = 1.0;
  mrs::Episode episode;
  std::vector<Eigen::VectorXd> phi;                 // oracle features per decision
  std::vector<std::vector<int>> feasible;           // oracle action indices per decision
  std::vector<int> chosen;                          // index into feasible per decision
  std::vector<double> rewards;                      // oracle rewards per decision
};

struct ToyMdp {
  mrs::ScoreMap map;
  mrs::Cell start{0, 0};
  int horizon = 3;
  double gamma = 0.9;

  static constexpr int kStateDim = 9;
  static constexpr std::array<std::array<int, 2>, 8> kRingOffsets{
      {{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}}};
  static constexpr std::array<std::array<int, 2>, 4> kMoves{{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};

  mrs::FeatureLayout layout() const { return {1, mrs::ActionMode::FourConnected, mrs::FeatureNorm::PeakRelative}; }

  Eigen::VectorXd features(const std::vector<double>& scores, int r, int c) const {
    const int w = map.width(), h = map.height();
    double peak = 0.0;
    for (double s : scores) peak = std::max(peak, s);
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(kStateDim);
    for (int k = 0; k < 8; ++k) {
      const int rr = r + kRingOffsets[k][0], cc = c + kRingOffsets[k][1];
      if (rr < 0 || rr >= h || cc < 0 || cc >= w || peak <= 0.0) continue;
      phi[k] = scores[static_cast<std::size_t>(rr * w + cc)] / peak;
    }
    phi[8] = 1.0;
    return phi;
  }

  std::vector<int> feasible(int r, int c) const {
    std::vector<int> out;
    for (int a = 0; a < 4; ++a) {
      const int rr = r + kMoves[a][0], cc = c + kMoves[a][1];
      if (rr >= 0 && rr < map.height() && cc >= 0 && cc < map.width()) out.push_back(a);
    }
    return out;
  }

  static std::vector<double> softmax(const Eigen::VectorXd& theta, const Eigen::VectorXd& phi,
                                     const std::vector<int>& feas) {
    std::vector<double> z;
    for (int a : feas) z.push_back(theta.segment(a * kStateDim, kStateDim).dot(phi));
    double top = z[0];
    for (double v : z) top = std::max(top, v);
    double sum = 0.0;
    for (double& v : z) sum += (v = std::exp(v - top));
    for (double& v : z) v /= sum;
    return z;
  }

  // Every action sequence with its probability and the corresponding library Episode.
  std::vector<ToyPath> enumerate(const Eigen::VectorXd& theta) const {
    std::vector<ToyPath> out;
    ToyPath root;
    std::vector<double> scores(map.scores().begin(), map.scores().end());
    const int w = map.width();
    root.episode.trajectory.start(start, scores[static_cast<std::size_t>(start.row * w + start.col)]);
    scores[static_cast<std::size_t>(start.row * w + start.col)] = 0.0;
    mrs::ScoreMap lib_map = map;
    lib_map.set(start, 0.0);
    recurse(theta, root, scores, lib_map, start.row, start.col, out);
    return out;
  }

  // sum_{t>=1} gamma^t r_t, with r_t the reward of decision t - 1
  double path_return(const ToyPath& p) const {
    double ret = 0.0, w = 1.0;
    for (double r : p.rewards) ret += (w *= gamma) * r;
    return ret;
  }

  // J(theta) = E[sum_{t>=1} gamma^t r_t]
  double objective(const Eigen::VectorXd& theta) const {
    double j = 0.0;
    for (const auto& p : enumerate(theta)) j += p.prob * path_return(p);
    return j;
  }

  // Product rule on p(tau) = prod_t pi_t with d pi(a)/d theta_b = pi(a) (delta_ab - pi(b)) phi.
  Eigen::VectorXd analytic_gradient(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
    for (const auto& p : enumerate(theta)) {
      const double ret = path_return(p);
      std::vector<double> pis;
      for (std::size_t t = 0; t < p.chosen.size(); ++t)
        pis.push_back(softmax(theta, p.phi[t], p.feasible[t])[static_cast<std::size_t>(p.chosen[t])]);
      for (std::size_t t = 0; t < p.chosen.size(); ++t) {
        double others = 1.0;
        for (std::size_t s = 0; s < pis.size(); ++s)
          if (s != t) others *= pis[s];
        const auto probs = softmax(theta, p.phi[t], p.feasible[t]);
        const int a = p.feasible[t][static_cast<std::size_t>(p.chosen[t])];
        Eigen::VectorXd dpi = Eigen::VectorXd::Zero(theta.size());
        for (std::size_t i = 0; i < p.feasible[t].size(); ++i) {
          const int b = p.feasible[t][i];
          const double coeff = pis[t] * ((a == b ? 1.0 : 0.0) - probs[i]);
          dpi.segment(b * kStateDim, kStateDim) += coeff * p.phi[t];
        }
        g += ret * others * dpi;
      }
    }
    return g;
  }

  Eigen::VectorXd finite_difference_gradient(const Eigen::VectorXd& theta, double h = 1e-5) const {
    Eigen::VectorXd g(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd up = theta, down = theta;
      up[i] += h;
      down[i] -= h;
      g[i] = (objective(up) - objective(down)) / (2 * h);
    }
    return g;
  }

 private:
  void recurse(const Eigen::VectorXd& theta, const ToyPath& prefix, const std::vector<double>& scores,
               const mrs::ScoreMap& lib_map, int r, int c, std::vector<ToyPath>& out) const {
    const int t = static_cast<int>(prefix.chosen.size());
    if (t == horizon) {
      out.push_back(prefix);
      return;
    }
    const Eigen::VectorXd phi = features(scores, r, c);
    const std::vector<int> feas = feasible(r, c);
    const auto probs = softmax(theta, phi, feas);
    mrs::RobotState robot;
    robot.position = {r, c};
    for (std::size_t i = 0; i < feas.size(); ++i) {
      const int a = feas[i];
      const int rr = r + kMoves[a][0], cc = c + kMoves[a][1];
      ToyPath next = prefix;
      next.prob *= probs[i];
      next.phi.push_back(phi);
      next.feasible.push_back(feas);
      next.chosen.push_back(static_cast<int>(i));
      std::vector<double> after = scores;
      const std::size_t k = static_cast<std::size_t>(rr * map.width() + cc);
      const double reward = after[k];
      after[k] = 0.0;

      mrs::Decision d;
      d.phi = mrs::state_features(lib_map, robot.position, layout(), robot.heading);
      d.feasible = mrs::feasible_actions(robot, map.dims(), mrs::ActionMode::FourConnected);
      d.action = mrs::kFourConnectedActions[static_cast<std::size_t>(a)];
      next.episode.decisions.push_back(d);
      mrs::ScoreMap lib_after = lib_map;
      mrs::RobotState moved = robot;
      const double lib_reward = mrs::apply(lib_after, moved, d.action, mrs::ActionMode::FourConnected);
      next.episode.trajectory.push(d.action, moved.position, lib_reward);
      next.rewards.push_back(reward);
      recurse(theta, next, after, lib_after, rr, cc, out);
    }
  }
};

inline ToyMdp default_toy() {
  ToyMdp toy;
  toy.map = mrs::ScoreMap(2, 2, std::vector<double>{0.2, 0.5, 0.9, 0.35});
  toy.start = {0, 0};
  toy.horizon = 3;
  toy.gamma = 0.9;
  return toy;
}

inline Eigen::VectorXd random_theta(Eigen::Index n, mrs::RngStream& rng, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

inline double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// One random finite-difference case for grad log pi: random layout, theta, features and a
// feasible subset with at least two actions. Returns max-norm relative error.
inline double log_prob_fd_error(mrs::RngStream& rng, double h = 1e-5) {
  using namespace mrs;
  const ActionMode mode = rng.below(2) ? ActionMode::FourConnected : ActionMode::HeadingConstrained;
  const FeatureLayout layout{1 + static_cast<int>(rng.below(3)), mode, FeatureNorm::PeakRelative};
  PolicyParams params{random_theta(layout.total_dim(), rng, 2.0), layout};
  Eigen::VectorXd phi(layout.state_dim());
  for (Eigen::Index i = 0; i < phi.size(); ++i) phi[i] = rng.uniform();
  const auto all = policy_actions(mode);
  std::vector<Action> feasible;
  while (feasible.size() < 2) {
    feasible.clear();
    for (Action a : all)
      if (rng.uniform() < 0.7) feasible.push_back(a);
  }
  const Action chosen = feasible[rng.below(feasible.size())];
  auto log_pi = [&](const Eigen::VectorXd& theta) {
    // independent log-softmax
    std::vector<double> z;
    double mine = 0.0;
    for (Action a : feasible) {
      const int idx = policy_index(a);
      z.push_back(theta.segment(idx * layout.state_dim(), layout.state_dim()).dot(phi));
      if (a == chosen) mine = z.back();
    }
    double top = z[0];
    for (double v : z) top = std::max(top, v);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - top);
    return mine - top - std::log(sum);
  };
  const Eigen::VectorXd g = log_prob_gradient(params, phi, chosen, feasible);
  Eigen::VectorXd fd(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    Eigen::VectorXd up = params.theta, down = params.theta;
    up[i] += h;
    down[i] -= h;
    fd[i] = (log_pi(up) - log_pi(down)) / (2 * h);
  }
  return (g - fd).cwiseAbs().maxCoeff() / std::max(g.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace test
