#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "features.hpp"
#include "field.hpp"
#include "learn.hpp"
#include "mdp.hpp"
#include "policy.hpp"
#include "rng.hpp"
#include "trajectory.hpp"

namespace mrs {

enum class StartPreset { Same, Corners, Random };
enum class Shaping { Off, DistanceWeighted };

inline StartPreset parse_start_preset(std::string_view s) {
  if (s == "same") return StartPreset::Same;
  if (s == "corners") return StartPreset::Corners;
  if (s == "random") return StartPreset::Random;
  throw std::invalid_argument("unknown start preset '" + std::string(s) + "' (expected same, corners or random)");
}

inline std::string_view to_string(StartPreset p) {
  switch (p) {
    case StartPreset::Same: return "same";
    case StartPreset::Corners: return "corners";
    case StartPreset::Random: return "random";
  }
  return "?";
}

inline Shaping parse_shaping(std::string_view s) {
  if (s == "off") return Shaping::Off;
  if (s == "distance") return Shaping::DistanceWeighted;
  throw std::invalid_argument("unknown shaping mode '" + std::string(s) + "' (expected off or distance)");
}

struct Failure {
  int robot = 0;
  int step = 0;  // the robot is gone from this clock time on
};

struct FleetConfig {
  int robots = 2;
  double comm_range = 0.3;  // fraction of d_max
  int comm_period = 20;
  int horizon = 150;
  ActionMode mode = ActionMode::FourConnected;
  StartPreset starts = StartPreset::Same;
  std::vector<Cell> start_cells;  // overrides the preset when non-empty
  Shaping shaping = Shaping::Off;
  std::vector<Failure> failures;
  std::uint64_t seed = 1;

  void validate() const {
    if (robots < 1) throw std::invalid_argument("fleet: need at least one robot");
    if (!(comm_range >= 0.0 && comm_range <= 1.0))
      throw std::invalid_argument("fleet: communication range must lie in [0, 1]");
    if (comm_period < 1) throw std::invalid_argument("fleet: communication period must be >= 1");
    if (horizon < 0) throw std::invalid_argument("fleet: horizon must be >= 0");
    if (!start_cells.empty() && static_cast<int>(start_cells.size()) != robots)
      throw std::invalid_argument("fleet: explicit start list must have one cell per robot");
    for (const auto& f : failures) {
      if (f.robot < 0 || f.robot >= robots)
        throw std::invalid_argument("fleet: failure names unknown robot " + std::to_string(f.robot));
      if (f.step < 0) throw std::invalid_argument("fleet: failure step must be >= 0");
    }
  }

  // First clock time at which `robot` is no longer present.
  int fail_time(int robot) const {
    int t = std::numeric_limits<int>::max();
    for (const auto& f : failures)
      if (f.robot == robot) t = std::min(t, f.step);
    return t;
  }
};

inline constexpr std::uint64_t kRobotStream = 0x20b07;
inline constexpr std::uint64_t kStartStream = 0x57a27;

inline std::uint64_t robot_stream_seed(std::uint64_t seed, int robot) {
  return derive_seed(seed, {kRobotStream, static_cast<std::uint64_t>(robot)});
}

// Start states for every robot. `same` launches everyone from the top-left cell; `corners`
// cycles through the four corners; `random` draws distinct cells.
inline std::vector<RobotState> start_states(const FleetConfig& cfg, GridDims dims) {
  std::vector<RobotState> out(static_cast<std::size_t>(cfg.robots));
  const Cell corners[4] = {{0, 0}, {dims.height - 1, dims.width - 1}, {0, dims.width - 1}, {dims.height - 1, 0}};
  const Heading inward[4] = {Heading::SE, Heading::NW, Heading::SW, Heading::NE};
  RngStream rng(derive_seed(cfg.seed, {kStartStream}));
  std::set<int> taken;
  for (int k = 0; k < cfg.robots; ++k) {
    RobotState& s = out[static_cast<std::size_t>(k)];
    s.id = k;
    if (!cfg.start_cells.empty()) {
      s.position = cfg.start_cells[static_cast<std::size_t>(k)];
      s.heading = Heading::SE;
    } else if (cfg.starts == StartPreset::Same) {
      s.position = corners[0];
      s.heading = inward[0];
    } else if (cfg.starts == StartPreset::Corners) {
      s.position = corners[k % 4];
      s.heading = inward[k % 4];
    } else {
      const int cells = dims.cell_count();
      int idx;
      do {
        idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(cells)));
      } while (static_cast<int>(taken.size()) < cells && taken.count(idx));
      taken.insert(idx);
      s.position = dims.cell(idx);
      s.heading = static_cast<Heading>(rng.below(8));
    }
    if (!dims.contains(s.position))
      throw std::invalid_argument("fleet: start cell of robot " + std::to_string(k) + " is outside the grid");
  }
  return out;
}

// Euclidean disk model: robots talk when no further apart than rho * d_max.
inline bool in_range(Cell a, Cell b, double rho, double dmax) { return euclidean(a, b) <= rho * dmax; }

struct PeerInfo {
  Cell position;
  int time = 0;
};

// What one robot believes about the world.
struct LocalView {
  int owner = 0;
  ScoreMap local;
  std::map<int, PeerInfo> peers;           // last-known peer positions
  std::vector<std::vector<Cell>> unsent;   // per peer id: visited cells not yet delivered

  LocalView(int owner_id, const ScoreMap& prior, int robots)
      : owner(owner_id), local(prior), unsent(static_cast<std::size_t>(robots)) {}

  // Record a visit of the owner: zero locally, queue for every peer.
  void visited(Cell c) {
    local.set(c, 0.0);
    for (std::size_t p = 0; p < unsent.size(); ++p)
      if (static_cast<int>(p) != owner) unsent[p].push_back(c);
  }
};

// Periodic state exchange at clock t. Returns the number of messages delivered.
inline int exchange(std::vector<LocalView>& views, std::span<const RobotState> robots, int t, const FleetConfig& cfg,
                    double dmax) {
  if (t % cfg.comm_period != 0) return 0;
  int messages = 0;
  auto deliver = [&](const RobotState& from, LocalView& sender, LocalView& receiver) {
    auto& buffer = sender.unsent[static_cast<std::size_t>(receiver.owner)];
    for (Cell c : buffer) receiver.local.set(c, 0.0);
    buffer.clear();
    receiver.peers[from.id] = PeerInfo{from.position, t};
    ++messages;
  };
  for (std::size_t i = 0; i < robots.size(); ++i) {
    if (!robots[i].alive) continue;
    for (std::size_t j = i + 1; j < robots.size(); ++j) {
      if (!robots[j].alive) continue;
      if (!in_range(robots[i].position, robots[j].position, cfg.comm_range, dmax)) continue;
      deliver(robots[i], views[i], views[j]);
      deliver(robots[j], views[j], views[i]);
    }
  }
  return messages;
}

// Distance-shaping weight of `cell` for a robot at `self`: mean distance of the cell to the
// known peers over the robot's own distance to it (clamped at 1 cell).
inline double shaped_weight(Cell self, Cell cell, const std::map<int, PeerInfo>& peers) {
  if (peers.empty()) return 1.0;
  double sum = 0.0;
  for (const auto& [id, info] : peers) sum += euclidean(info.position, cell);
  const double mean = sum / static_cast<double>(peers.size());
  return mean / std::max(euclidean(self, cell), 1.0);
}

inline ScoreMap shaped_map(const LocalView& view, Cell self) {
  if (view.peers.empty()) return view.local;
  ScoreMap out = view.local;
  for (int i = 0; i < out.height(); ++i)
    for (int j = 0; j < out.width(); ++j)
      if (const double v = out.at(i, j); v > 0.0) out.set({i, j}, v * shaped_weight(self, {i, j}, view.peers));
  return out;
}

inline void check_layout(const PolicyParams& params, GridDims dims, ActionMode mode) {
  params.check();
  const FeatureLayout expected = make_layout(dims, mode, params.layout.norm);
  if (!(params.layout == expected))
    throw ConfigError("parameter layout (levels=" + std::to_string(params.layout.levels) +
                      ", mode=" + std::string(to_string(params.layout.mode)) +
                      ") does not match the run (levels=" + std::to_string(expected.levels) +
                      ", mode=" + std::string(to_string(expected.mode)) + ")");
}

// Called at every decision time after the exchange; lets tests audit the local views.
using FleetObserver = std::function<void(int t, const std::vector<LocalView>&, const WorldState&)>;

// Lock-step team run of identical policies on one authoritative truth map.
inline TeamResult simulate_team(const ScoreMap& truth, const PolicyParams& params, const FleetConfig& cfg,
                                const FleetObserver& observer = {}) {
  cfg.validate();
  check_layout(params, truth.dims(), cfg.mode);
  const double dmax = d_max(truth);
  WorldState world{truth, start_states(cfg, truth.dims()), 0};
  std::vector<LocalView> views;
  std::vector<RngStream> streams;
  TeamResult result;
  result.trajectories.resize(static_cast<std::size_t>(cfg.robots));
  for (int k = 0; k < cfg.robots; ++k) {
    views.emplace_back(k, truth, cfg.robots);
    streams.emplace_back(robot_stream_seed(cfg.seed, k));
    result.trajectories[static_cast<std::size_t>(k)].robot = k;
  }
  std::vector<int> fail_at(static_cast<std::size_t>(cfg.robots));
  for (int k = 0; k < cfg.robots; ++k) fail_at[static_cast<std::size_t>(k)] = cfg.fail_time(k);

  for (auto& r : world.robots) {
    const auto k = static_cast<std::size_t>(r.id);
    r.alive = fail_at[k] > 0;
    if (!r.alive) continue;
    result.trajectories[k].start(r.position, scan(world.truth, r.position));
    views[k].visited(r.position);
  }

  result.messages.assign(static_cast<std::size_t>(cfg.horizon), 0);
  for (int t = 0; t < cfg.horizon; ++t) {
    world.time = t;
    for (auto& r : world.robots) r.alive = r.alive && t < fail_at[static_cast<std::size_t>(r.id)];
    result.messages[static_cast<std::size_t>(t)] = exchange(views, world.robots, t, cfg, dmax);
    if (observer) observer(t, views, world);
    for (auto& r : world.robots) {
      const auto k = static_cast<std::size_t>(r.id);
      // a robot whose next arrival would fall at or after its failure time stops here
      if (!r.alive || t + 1 >= fail_at[k]) continue;
      const Decision d = cfg.shaping == Shaping::DistanceWeighted
                             ? decide(shaped_map(views[k], r.position), r, params, streams[k])
                             : decide(views[k].local, r, params, streams[k]);
      const double reward = apply(world.truth, r, d.action, cfg.mode);
      views[k].visited(r.position);
      result.trajectories[k].push(d.action, r.position, reward);
    }
  }
  result.remaining = std::move(world.truth);
  return result;
}

}  // namespace mrs
