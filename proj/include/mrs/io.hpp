#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "analysis.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "mdp.hpp"
#include "policy.hpp"
#include "trajectory.hpp"

namespace mrs {

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t at = s.find(sep, pos);
    out.emplace_back(trim(s.substr(pos, at == std::string_view::npos ? std::string_view::npos : at - pos)));
    if (at == std::string_view::npos) break;
    pos = at + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::string_view what) {
  s = trim(s);
  T value{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size())
    throw std::invalid_argument(std::string(what) + ": not a valid number: '" + std::string(s) + "'");
  return value;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parameter files: layout header lines, then one theta entry per line.

inline void write_params(std::ostream& out, const PolicyParams& p) {
  out << "levels=" << p.layout.levels << '\n'
      << "actions=" << p.layout.actions() << '\n'
      << "k=" << p.layout.state_dim() << '\n'
      << "mode=" << to_string(p.layout.mode) << '\n'
      << "features=" << to_string(p.layout.norm) << '\n';
  for (Eigen::Index i = 0; i < p.theta.size(); ++i) out << format_real(p.theta[i]) << '\n';
}

inline void save_params(const PolicyParams& p, const std::string& path) {
  auto out = detail::open_out(path);
  write_params(out, p);
  if (!out) throw std::runtime_error("error while writing " + path);
}

inline PolicyParams parse_params(std::istream& in, const std::string& origin = "<params>") {
  std::map<std::string, std::string> header;
  std::vector<double> theta;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (const auto eq = t.find('='); eq != std::string_view::npos) {
      if (!theta.empty()) throw ParseError(origin + ":" + std::to_string(lineno) + ": header line after parameters");
      header[std::string(detail::trim(t.substr(0, eq)))] = std::string(detail::trim(t.substr(eq + 1)));
      continue;
    }
    try {
      theta.push_back(detail::parse_number<double>(t, "parameter"));
    } catch (const std::invalid_argument& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  for (const char* key : {"levels", "actions", "k", "mode"})
    if (!header.count(key)) throw ParseError(origin + ": missing header line '" + key + "='");
  PolicyParams p;
  try {
    p.layout.levels = detail::parse_number<int>(header["levels"], "levels");
    p.layout.mode = parse_action_mode(header["mode"]);
    if (header.count("features")) p.layout.norm = parse_feature_norm(header["features"]);
    if (detail::parse_number<int>(header["actions"], "actions") != p.layout.actions() ||
        detail::parse_number<int>(header["k"], "k") != p.layout.state_dim())
      throw ParseError(origin + ": header (actions=" + header["actions"] + ", k=" + header["k"] +
                       ") is inconsistent with levels=" + header["levels"] + ", mode=" + header["mode"]);
  } catch (const std::invalid_argument& e) {
    throw ParseError(origin + ": " + e.what());
  }
  if (static_cast<int>(theta.size()) != p.layout.total_dim())
    throw ParseError(origin + ": expected " + std::to_string(p.layout.total_dim()) + " parameters, found " +
                     std::to_string(theta.size()));
  p.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  return p;
}

inline PolicyParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open parameter file: " + path);
  return parse_params(in, path);
}

// ---------------------------------------------------------------------------
// Flat key=value configuration with section prefixes (field., fleet., train., sweep.).

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config(std::istream& in, const std::string& origin = "<config>") {
  ConfigMap cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    cfg[std::string(detail::trim(t.substr(0, eq)))] = std::string(detail::trim(t.substr(eq + 1)));
  }
  return cfg;
}

inline ConfigMap load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in, path);
}

// ---------------------------------------------------------------------------
// Trajectory CSV: one row per robot per clock time.
//   trial,robot,t,row,col,action,reward
// `action` is what the robot did next from that cell ("-" on its last row).

inline constexpr std::string_view kTrajectoryHeader = "trial,robot,t,row,col,action,reward";

inline void write_trajectory_rows(std::ostream& out, int trial, const TeamResult& result) {
  for (const auto& traj : result.trajectories) {
    for (std::size_t t = 0; t < traj.path.size(); ++t) {
      out << trial << ',' << traj.robot << ',' << t << ',' << traj.path[t].row << ',' << traj.path[t].col << ','
          << (t < traj.actions.size() ? to_string(traj.actions[t]) : std::string_view("-")) << ','
          << format_real(traj.rewards[t]) << '\n';
    }
  }
}

struct TrajectoryRow {
  int trial = 0;
  int robot = 0;
  int t = 0;
  double row = 0.0;
  double col = 0.0;
  std::string action;
  std::string reward;  // kept verbatim so a pass-through rewrite is lossless
};

inline std::vector<TrajectoryRow> parse_trajectory_csv(std::istream& in, const std::string& origin = "<trajectories>") {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kTrajectoryHeader)
    throw ParseError(origin + ": expected header '" + std::string(kTrajectoryHeader) + "'");
  std::vector<TrajectoryRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 7)
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 7 fields, found " + std::to_string(f.size()));
    try {
      rows.push_back({detail::parse_number<int>(f[0], "trial"), detail::parse_number<int>(f[1], "robot"),
                      detail::parse_number<int>(f[2], "t"), detail::parse_number<double>(f[3], "row"),
                      detail::parse_number<double>(f[4], "col"), f[5], f[6]});
      detail::parse_number<double>(f[6], "reward");
    } catch (const std::invalid_argument& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Metrics CSV

inline constexpr std::string_view kMetricsHeader =
    "trial,policy,K,comm_range,comm_period,discounted_reward,undiscounted_reward,overlap_count,overlap_fraction,messages";

struct TrialMetrics {
  int trial = 0;
  std::string policy;
  int robots = 0;
  double comm_range = 0.0;
  int comm_period = 0;
  double discounted_reward = 0.0;
  double undiscounted_reward = 0.0;
  int overlap_count = 0;
  double overlap_fraction = 0.0;
  int messages = 0;
};

inline TrialMetrics measure(int trial, std::string policy, int robots, double comm_range, int comm_period,
                            const TeamResult& result, double kappa) {
  const Overlap o = path_overlap(result);
  return {trial,
          std::move(policy),
          robots,
          comm_range,
          comm_period,
          team_discounted_reward(result, kappa),
          result.total_reward(),
          o.count,
          o.fraction,
          result.total_messages()};
}

inline void write_metrics_row(std::ostream& out, const TrialMetrics& m) {
  out << m.trial << ',' << m.policy << ',' << m.robots << ',' << format_real(m.comm_range) << ',' << m.comm_period
      << ',' << format_real(m.discounted_reward) << ',' << format_real(m.undiscounted_reward) << ','
      << m.overlap_count << ',' << format_real(m.overlap_fraction) << ',' << m.messages << '\n';
}

inline std::vector<TrialMetrics> parse_metrics_csv(std::istream& in, const std::string& origin = "<metrics>") {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kMetricsHeader)
    throw ParseError(origin + ": expected header '" + std::string(kMetricsHeader) + "'");
  std::vector<TrialMetrics> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 10) throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 10 fields");
    try {
      rows.push_back({detail::parse_number<int>(f[0], "trial"), f[1], detail::parse_number<int>(f[2], "K"),
                      detail::parse_number<double>(f[3], "comm_range"), detail::parse_number<int>(f[4], "comm_period"),
                      detail::parse_number<double>(f[5], "discounted_reward"),
                      detail::parse_number<double>(f[6], "undiscounted_reward"),
                      detail::parse_number<int>(f[7], "overlap_count"),
                      detail::parse_number<double>(f[8], "overlap_fraction"),
                      detail::parse_number<int>(f[9], "messages")});
    } catch (const std::invalid_argument& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace mrs
