#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "mdp.hpp"
#include "trajectory.hpp"

namespace mrs {

inline constexpr Cell kNeighbours[4] = {{-1, 0}, {0, 1}, {1, 0}, {0, -1}};

inline Cell offset(Cell c, Cell d) { return {c.row + d.row, c.col + d.col}; }

// 4-connected A* with unit step cost and the Manhattan heuristic. `passable` restricts the
// cells the path may use (start and goal included); an empty result means unreachable.
inline std::vector<Cell> astar(GridDims dims, Cell start, Cell goal, const std::function<bool(Cell)>& passable) {
  detail::expects(dims.contains(start) && dims.contains(goal), "astar: start and goal must lie inside the grid");
  if (passable && (!passable(start) || !passable(goal))) return {};
  const int n = dims.cell_count();
  std::vector<int> g(static_cast<std::size_t>(n), std::numeric_limits<int>::max());
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  std::vector<char> closed(static_cast<std::size_t>(n), 0);
  // (f, h, index): ties prefer the node closer to the goal, then lower row-major index
  using Node = std::tuple<int, int, int>;
  std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
  const int s = dims.index(start), goal_idx = dims.index(goal);
  g[static_cast<std::size_t>(s)] = 0;
  open.emplace(manhattan(start, goal), manhattan(start, goal), s);
  while (!open.empty()) {
    const auto [f, h, idx] = open.top();
    open.pop();
    if (closed[static_cast<std::size_t>(idx)]) continue;
    closed[static_cast<std::size_t>(idx)] = 1;
    if (idx == goal_idx) break;
    const Cell here = dims.cell(idx);
    for (Cell d : kNeighbours) {
      const Cell next = offset(here, d);
      if (!dims.contains(next) || (passable && !passable(next))) continue;
      const int ni = dims.index(next);
      const int cost = g[static_cast<std::size_t>(idx)] + 1;
      if (cost < g[static_cast<std::size_t>(ni)]) {
        g[static_cast<std::size_t>(ni)] = cost;
        parent[static_cast<std::size_t>(ni)] = idx;
        const int hn = manhattan(next, goal);
        open.emplace(cost + hn, hn, ni);
      }
    }
  }
  if (!closed[static_cast<std::size_t>(goal_idx)]) return {};
  std::vector<Cell> path;
  for (int at = goal_idx; at != -1; at = parent[static_cast<std::size_t>(at)]) path.push_back(dims.cell(at));
  std::reverse(path.begin(), path.end());
  return path;
}

inline std::vector<Cell> astar(GridDims dims, Cell start, Cell goal) { return astar(dims, start, goal, {}); }

inline Action action_between(Cell from, Cell to) {
  const Cell d{to.row - from.row, to.col - from.col};
  if (d == Cell{-1, 0}) return Action::North;
  if (d == Cell{0, 1}) return Action::East;
  if (d == Cell{1, 0}) return Action::South;
  if (d == Cell{0, -1}) return Action::West;
  detail::expects(d == Cell{0, 0}, "action_between: cells are not 4-adjacent");
  return Action::Stay;
}

// ---------------------------------------------------------------------------
// Equal-area division (simplified DARP, "darp_lite")

struct RegionAssignment {
  GridDims dims;
  std::vector<int> owner;   // robot id per cell, row-major
  std::vector<int> counts;  // cells per robot

  int owner_of(Cell c) const { return owner[static_cast<std::size_t>(dims.index(c))]; }
  std::vector<char> mask(int robot) const {
    std::vector<char> m(owner.size());
    for (std::size_t i = 0; i < owner.size(); ++i) m[i] = owner[i] == robot;
    return m;
  }
};

namespace detail {

// Cells of `mask` reachable from `from` through `mask`, skipping `removed`.
inline int reachable_count(GridDims dims, const std::vector<char>& mask, Cell from, int removed = -1) {
  if (!mask[static_cast<std::size_t>(dims.index(from))] || dims.index(from) == removed) return 0;
  std::vector<char> seen(mask.size(), 0);
  std::deque<Cell> queue{from};
  seen[static_cast<std::size_t>(dims.index(from))] = 1;
  int count = 0;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    ++count;
    for (Cell d : kNeighbours) {
      const Cell n = offset(c, d);
      if (!dims.contains(n)) continue;
      const int ni = dims.index(n);
      if (ni == removed || seen[static_cast<std::size_t>(ni)] || !mask[static_cast<std::size_t>(ni)]) continue;
      seen[static_cast<std::size_t>(ni)] = 1;
      queue.push_back(n);
    }
  }
  return count;
}

// Move single boundary cells from bigger to smaller neighbouring regions while that keeps
// both connected. Every transfer lowers sum(count^2), so this terminates.
inline void rebalance(RegionAssignment& ra, const std::vector<Cell>& starts) {
  const GridDims dims = ra.dims;
  const int robots = static_cast<int>(starts.size());
  while (true) {
    std::vector<int> order(static_cast<std::size_t>(robots));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ra.counts[a] > ra.counts[b]; });
    bool moved = false;
    for (int donor : order) {
      const auto donor_mask = ra.mask(donor);
      int best_cell = -1, best_receiver = -1;
      for (int idx = 0; idx < dims.cell_count() && best_cell < 0; ++idx) {
        if (ra.owner[static_cast<std::size_t>(idx)] != donor || dims.cell(idx) == starts[static_cast<std::size_t>(donor)])
          continue;
        const Cell c = dims.cell(idx);
        int receiver = -1;
        for (Cell d : kNeighbours) {
          const Cell n = offset(c, d);
          if (!dims.contains(n)) continue;
          const int o = ra.owner_of(n);
          if (o == donor || ra.counts[donor] - ra.counts[o] < 2) continue;
          if (receiver < 0 || ra.counts[o] < ra.counts[receiver] || (ra.counts[o] == ra.counts[receiver] && o < receiver))
            receiver = o;
        }
        if (receiver < 0) continue;
        if (reachable_count(dims, donor_mask, starts[static_cast<std::size_t>(donor)], idx) != ra.counts[donor] - 1)
          continue;
        best_cell = idx;
        best_receiver = receiver;
      }
      if (best_cell >= 0) {
        ra.owner[static_cast<std::size_t>(best_cell)] = best_receiver;
        --ra.counts[donor];
        ++ra.counts[best_receiver];
        moved = true;
        break;
      }
    }
    if (!moved) return;
  }
}

}  // namespace detail

// Balanced multi-source region growing: robots take turns claiming the oldest unowned cell
// on their own frontier, followed by a boundary-swap pass that evens out the counts.
inline RegionAssignment divide_areas(GridDims dims, const std::vector<Cell>& starts) {
  const int robots = static_cast<int>(starts.size());
  if (robots < 1) throw std::invalid_argument("divide_areas: need at least one robot");
  if (robots > dims.cell_count()) throw std::invalid_argument("divide_areas: more robots than cells");
  RegionAssignment ra{dims, std::vector<int>(static_cast<std::size_t>(dims.cell_count()), -1),
                      std::vector<int>(static_cast<std::size_t>(robots), 0)};
  std::vector<std::deque<Cell>> frontier(static_cast<std::size_t>(robots));
  for (int k = 0; k < robots; ++k) {
    const Cell s = starts[static_cast<std::size_t>(k)];
    if (!dims.contains(s)) throw std::invalid_argument("divide_areas: start outside the grid");
    if (ra.owner_of(s) != -1) throw std::invalid_argument("divide_areas: start cells must be distinct");
    ra.owner[static_cast<std::size_t>(dims.index(s))] = k;
    ra.counts[static_cast<std::size_t>(k)] = 1;
  }
  auto expand = [&](int k, Cell c) {
    for (Cell d : kNeighbours) {
      const Cell n = offset(c, d);
      if (dims.contains(n) && ra.owner_of(n) == -1) frontier[static_cast<std::size_t>(k)].push_back(n);
    }
  };
  for (int k = 0; k < robots; ++k) expand(k, starts[static_cast<std::size_t>(k)]);
  int unowned = dims.cell_count() - robots;
  while (unowned > 0) {
    bool progress = false;
    for (int k = 0; k < robots && unowned > 0; ++k) {
      auto& q = frontier[static_cast<std::size_t>(k)];
      while (!q.empty() && ra.owner_of(q.front()) != -1) q.pop_front();
      if (q.empty()) continue;
      const Cell c = q.front();
      q.pop_front();
      ra.owner[static_cast<std::size_t>(dims.index(c))] = k;
      ++ra.counts[static_cast<std::size_t>(k)];
      --unowned;
      expand(k, c);
      progress = true;
    }
    if (!progress) break;  // unreachable on a connected grid
  }
  detail::rebalance(ra, starts);
  return ra;
}

// ---------------------------------------------------------------------------
// Coverage sweep

// Lawnmower path over `region` (row-major mask): the region's rows are split into maximal
// horizontal runs, each run is swept end to end, and the robot moves to the next run with the
// nearest entry point via a shortest path that stays inside the region.
inline std::vector<Cell> boustrophedon_path(GridDims dims, const std::vector<char>& region, Cell start) {
  detail::expects(region.size() == static_cast<std::size_t>(dims.cell_count()), "boustrophedon: mask size mismatch");
  detail::expects(dims.contains(start) && region[static_cast<std::size_t>(dims.index(start))],
                  "boustrophedon: start must lie inside the region");
  const int size = static_cast<int>(std::count(region.begin(), region.end(), 1));
  detail::expects(detail::reachable_count(dims, region, start) == size, "boustrophedon: region is not connected");
  auto inside = [&](Cell c) { return dims.contains(c) && region[static_cast<std::size_t>(dims.index(c))]; };

  struct Run {
    int row, c0, c1;
  };
  std::vector<Run> runs;
  for (int i = 0; i < dims.height; ++i) {
    for (int j = 0; j < dims.width;) {
      if (!inside({i, j})) {
        ++j;
        continue;
      }
      int k = j;
      while (k + 1 < dims.width && inside({i, k + 1})) ++k;
      if (i == start.row && j <= start.col && start.col <= k) {
        // the start splits its own run in two
        if (j < start.col) runs.push_back({i, j, start.col - 1});
        if (start.col < k) runs.push_back({i, start.col + 1, k});
      } else {
        runs.push_back({i, j, k});
      }
      j = k + 1;
    }
  }

  std::vector<char> visited(region.size(), 0);
  std::vector<Cell> path{start};
  visited[static_cast<std::size_t>(dims.index(start))] = 1;
  auto walk_to = [&](Cell c) {
    path.push_back(c);
    visited[static_cast<std::size_t>(dims.index(c))] = 1;
  };
  auto run_done = [&](const Run& r) {
    for (int j = r.c0; j <= r.c1; ++j)
      if (!visited[static_cast<std::size_t>(dims.index({r.row, j}))]) return false;
    return true;
  };

  while (true) {
    // BFS distances inside the region from the current cell
    const Cell here = path.back();
    std::vector<int> dist(region.size(), -1);
    std::deque<Cell> q{here};
    dist[static_cast<std::size_t>(dims.index(here))] = 0;
    while (!q.empty()) {
      const Cell c = q.front();
      q.pop_front();
      for (Cell d : kNeighbours) {
        const Cell n = offset(c, d);
        if (!inside(n) || dist[static_cast<std::size_t>(dims.index(n))] >= 0) continue;
        dist[static_cast<std::size_t>(dims.index(n))] = dist[static_cast<std::size_t>(dims.index(c))] + 1;
        q.push_back(n);
      }
    }
    int best_run = -1, best_dist = std::numeric_limits<int>::max(), best_idx = 0;
    bool from_left = true;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (run_done(runs[r])) continue;
      for (bool left : {true, false}) {
        const Cell end{runs[r].row, left ? runs[r].c0 : runs[r].c1};
        const int dd = dist[static_cast<std::size_t>(dims.index(end))];
        const int idx = dims.index(end);
        if (dd < best_dist || (dd == best_dist && idx < best_idx)) {
          best_run = static_cast<int>(r);
          best_dist = dd;
          best_idx = idx;
          from_left = left;
        }
      }
    }
    if (best_run < 0) break;
    const Run run = runs[static_cast<std::size_t>(best_run)];
    const Cell entry{run.row, from_left ? run.c0 : run.c1};
    const auto bridge = astar(dims, here, entry, inside);
    for (std::size_t i = 1; i < bridge.size(); ++i) walk_to(bridge[i]);
    if (from_left)
      for (int j = run.c0 + 1; j <= run.c1; ++j) walk_to({run.row, j});
    else
      for (int j = run.c1 - 1; j >= run.c0; --j) walk_to({run.row, j});
  }
  return path;
}

// ---------------------------------------------------------------------------
// Team baselines. Same clock convention as the fleet: start cells are scanned at t = 0,
// robots move in id order, rewards come from and zero the single truth map.

namespace detail {

inline TeamResult start_team(ScoreMap& truth, const std::vector<Cell>& starts, int horizon) {
  if (starts.empty()) throw std::invalid_argument("baseline: need at least one robot");
  if (horizon < 0) throw std::invalid_argument("baseline: horizon must be >= 0");
  TeamResult result;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    if (!truth.contains(starts[k])) throw std::invalid_argument("baseline: start outside the grid");
    Trajectory t;
    t.robot = static_cast<int>(k);
    t.start(starts[k], scan(truth, starts[k]));
    result.trajectories.push_back(std::move(t));
  }
  result.messages.assign(static_cast<std::size_t>(horizon), 0);
  return result;
}

inline void move_robot(ScoreMap& truth, Trajectory& traj, Cell to) {
  const Cell from = traj.path.back();
  const Action a = action_between(from, to);
  traj.push(a, to, a == Action::Stay ? 0.0 : scan(truth, to));
}

}  // namespace detail

// Each idle robot claims the highest-scoring cell not claimed by a teammate (ties: lowest
// row-major index), drives there along an A* path collecting on the way, then claims again.
inline TeamResult maxima_search_team(const ScoreMap& initial, const std::vector<Cell>& starts, int horizon) {
  ScoreMap truth = initial;
  TeamResult result = detail::start_team(truth, starts, horizon);
  const GridDims dims = truth.dims();
  const std::size_t robots = starts.size();
  std::vector<int> target(robots, -1);
  std::vector<std::deque<Cell>> plan(robots);
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t k = 0; k < robots; ++k) {
      Trajectory& traj = result.trajectories[k];
      const Cell here = traj.path.back();
      if (plan[k].empty()) {
        std::set<int> claimed;
        for (std::size_t o = 0; o < robots; ++o)
          if (o != k && target[o] >= 0) claimed.insert(target[o]);
        int best = -1;
        double best_score = -1.0;
        for (int idx = 0; idx < dims.cell_count(); ++idx) {
          if (claimed.count(idx)) continue;
          const double s = truth.at(dims.cell(idx));
          if (s > best_score) {
            best = idx;
            best_score = s;
          }
        }
        target[k] = best;
        if (best >= 0) {
          const auto route = astar(dims, here, dims.cell(best));
          plan[k].assign(route.begin() + 1, route.end());
        }
      }
      if (plan[k].empty()) {
        detail::move_robot(truth, traj, here);
        continue;
      }
      const Cell next = plan[k].front();
      plan[k].pop_front();
      detail::move_robot(truth, traj, next);
    }
  }
  result.remaining = std::move(truth);
  return result;
}

// darp_lite: equal-area division, then one lawnmower sweep per region, cut at the horizon.
inline TeamResult coverage_team(const ScoreMap& initial, const std::vector<Cell>& starts, int horizon) {
  const RegionAssignment ra = divide_areas(initial.dims(), starts);
  std::vector<std::vector<Cell>> sweeps;
  for (std::size_t k = 0; k < starts.size(); ++k)
    sweeps.push_back(boustrophedon_path(initial.dims(), ra.mask(static_cast<int>(k)), starts[k]));
  ScoreMap truth = initial;
  TeamResult result = detail::start_team(truth, starts, horizon);
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const auto& sweep = sweeps[k];
      const auto next = static_cast<std::size_t>(t + 1);
      detail::move_robot(truth, result.trajectories[k], next < sweep.size() ? sweep[next] : sweep.back());
    }
  }
  result.remaining = std::move(truth);
  return result;
}

}  // namespace mrs
