#pragma once

#include <numeric>
#include <vector>

#include "field.hpp"
#include "mdp.hpp"

namespace mrs {

// One robot's run on the shared clock. path[t] is where the robot stands at time t and
// rewards[t] what it scanned there (rewards[0] is the start-cell scan); actions[t] moves it
// from path[t] to path[t + 1]. A robot that never became active has an empty trajectory.
struct Trajectory {
  int robot = 0;
  std::vector<Cell> path;
  std::vector<double> rewards;
  std::vector<Action> actions;

  bool empty() const { return path.empty(); }
  std::size_t steps() const { return actions.size(); }
  double total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

  void start(Cell c, double reward) {
    path.assign(1, c);
    rewards.assign(1, reward);
    actions.clear();
  }

  void push(Action a, Cell destination, double reward) {
    actions.push_back(a);
    path.push_back(destination);
    rewards.push_back(reward);
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct TeamResult {
  std::vector<Trajectory> trajectories;  // one per robot, indexed by id
  std::vector<int> messages;             // messages delivered at each loop step
  ScoreMap remaining;                    // truth map after the run

  int total_messages() const { return std::accumulate(messages.begin(), messages.end(), 0); }
  double total_reward() const {
    double s = 0.0;
    for (const auto& t : trajectories) s += t.total_reward();
    return s;
  }
};

}  // namespace mrs
