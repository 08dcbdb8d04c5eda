#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "field.hpp"

namespace mrs {

enum class ActionMode : std::uint8_t { FourConnected, HeadingConstrained };

// Compass headings, clockwise from North. Only meaningful in heading-constrained mode.
enum class Heading : std::uint8_t { N, NE, E, SE, S, SW, W, NW };

// Policy actions are the first seven; TurnRight90 is the forced in-place turn used when a
// heading-constrained robot faces out of a corner, Stay is only produced by baseline planners.
enum class Action : std::uint8_t { North, East, South, West, Left45, Straight, Right45, TurnRight90, Stay };

inline constexpr std::array<Action, 4> kFourConnectedActions{Action::North, Action::East, Action::South, Action::West};
inline constexpr std::array<Action, 3> kHeadingActions{Action::Left45, Action::Straight, Action::Right45};

inline std::span<const Action> policy_actions(ActionMode mode) {
  if (mode == ActionMode::FourConnected) return kFourConnectedActions;
  return kHeadingActions;
}

inline int action_count(ActionMode mode) { return static_cast<int>(policy_actions(mode).size()); }

// Position of `a` within policy_actions(mode); -1 for the non-policy actions.
inline int policy_index(Action a) {
  switch (a) {
    case Action::North: return 0;
    case Action::East: return 1;
    case Action::South: return 2;
    case Action::West: return 3;
    case Action::Left45: return 0;
    case Action::Straight: return 1;
    case Action::Right45: return 2;
    default: return -1;
  }
}

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::North: return "N";
    case Action::East: return "E";
    case Action::South: return "S";
    case Action::West: return "W";
    case Action::Left45: return "L45";
    case Action::Straight: return "F";
    case Action::Right45: return "R45";
    case Action::TurnRight90: return "R90";
    case Action::Stay: return "STAY";
  }
  return "?";
}

inline std::string_view to_string(ActionMode m) { return m == ActionMode::FourConnected ? "4conn" : "heading"; }

inline ActionMode parse_action_mode(std::string_view s) {
  if (s == "4conn") return ActionMode::FourConnected;
  if (s == "heading") return ActionMode::HeadingConstrained;
  throw std::invalid_argument("unknown action mode '" + std::string(s) + "' (expected 4conn or heading)");
}

inline Cell heading_offset(Heading h) {
  static constexpr std::array<Cell, 8> kOffsets{
      Cell{-1, 0}, Cell{-1, 1}, Cell{0, 1}, Cell{1, 1}, Cell{1, 0}, Cell{1, -1}, Cell{0, -1}, Cell{-1, -1}};
  return kOffsets[static_cast<std::size_t>(h)];
}

inline Heading rotate(Heading h, int eighths) {
  return static_cast<Heading>(((static_cast<int>(h) + eighths) % 8 + 8) % 8);
}

struct RobotState {
  int id = 0;
  Cell position;
  Heading heading = Heading::N;
  bool alive = true;
};

// Where `action` takes the robot. No bounds check.
struct Move {
  Cell destination;
  Heading heading;
};

inline Move resolve(const RobotState& s, Action a) {
  auto shifted = [&](Cell d) { return Cell{s.position.row + d.row, s.position.col + d.col}; };
  switch (a) {
    case Action::North: return {shifted({-1, 0}), Heading::N};
    case Action::East: return {shifted({0, 1}), Heading::E};
    case Action::South: return {shifted({1, 0}), Heading::S};
    case Action::West: return {shifted({0, -1}), Heading::W};
    case Action::Left45: {
      const Heading h = rotate(s.heading, -1);
      return {shifted(heading_offset(h)), h};
    }
    case Action::Straight: return {shifted(heading_offset(s.heading)), s.heading};
    case Action::Right45: {
      const Heading h = rotate(s.heading, 1);
      return {shifted(heading_offset(h)), h};
    }
    case Action::TurnRight90: return {s.position, rotate(s.heading, 2)};
    case Action::Stay: return {s.position, s.heading};
  }
  return {s.position, s.heading};
}

// Actions whose destination stays inside the grid, in the fixed policy order.
// In heading mode an empty set is replaced by the in-place right turn.
inline std::vector<Action> feasible_actions(const RobotState& s, GridDims dims, ActionMode mode) {
  detail::expects(dims.contains(s.position), "feasible_actions: robot position outside the grid");
  std::vector<Action> out;
  for (Action a : policy_actions(mode))
    if (dims.contains(resolve(s, a).destination)) out.push_back(a);
  if (out.empty() && mode == ActionMode::HeadingConstrained) out.push_back(Action::TurnRight90);
  return out;
}

// Collects and zeroes the score under `c`.
inline double scan(ScoreMap& map, Cell c) {
  const double r = map.at(c);
  map.set(c, 0.0);
  return r;
}

struct WorldState {
  ScoreMap truth;
  std::vector<RobotState> robots;
  int time = 0;

  RobotState& robot(int id) {
    for (auto& r : robots)
      if (r.id == id) return r;
    throw ContractViolation("WorldState: no robot with id " + std::to_string(id));
  }
};

// Moves a robot on the authoritative map and returns the undiscounted reward.
// Movement that stays within the grid is required; the caller owns the discounting.
inline double apply(ScoreMap& map, RobotState& robot, Action action, ActionMode mode) {
  const Move mv = resolve(robot, action);
  if (action == Action::TurnRight90) {
    detail::expects(mode == ActionMode::HeadingConstrained && feasible_actions(robot, map.dims(), mode).front() ==
                                                                  Action::TurnRight90,
                    "step: in-place turn is only allowed when no forward action is feasible");
    robot.heading = mv.heading;
    return 0.0;
  }
  detail::expects(action == Action::Stay || policy_index(action) >= 0, "step: unknown action");
  detail::expects(map.contains(mv.destination),
                  "step: infeasible action " + std::string(to_string(action)) + " would leave the grid");
  robot.position = mv.destination;
  robot.heading = mv.heading;
  return scan(map, mv.destination);
}

inline double step(WorldState& world, int robot_id, Action action,
                   ActionMode mode = ActionMode::FourConnected) {
  RobotState& r = world.robot(robot_id);
  if (action != Action::Stay && action != Action::TurnRight90) {
    const bool four = policy_index(action) >= 0 && action <= Action::West;
    detail::expects(four == (mode == ActionMode::FourConnected), "step: action does not belong to the action mode");
  }
  return apply(world.truth, r, action, mode);
}

inline double discounted_return(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("discounted_return: gamma must lie in [0, 1]");
  double total = 0.0, weight = 1.0;
  for (double r : rewards) {
    total += weight * r;
    weight *= gamma;
  }
  return total;
}

inline double hyperbolic_return(std::span<const double> rewards, double kappa = 1.0) {
  if (!(kappa > 0.0)) throw std::invalid_argument("hyperbolic_return: kappa must be > 0");
  double total = 0.0;
  for (std::size_t t = 0; t < rewards.size(); ++t) total += rewards[t] / (1.0 + kappa * static_cast<double>(t));
  return total;
}

}  // namespace mrs
