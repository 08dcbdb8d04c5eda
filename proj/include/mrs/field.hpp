#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace mrs {

struct Cell {
  int row = 0;
  int col = 0;

  friend constexpr bool operator==(const Cell&, const Cell&) = default;
  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

inline double euclidean(Cell a, Cell b) {
  return std::hypot(static_cast<double>(a.row - b.row), static_cast<double>(a.col - b.col));
}

inline int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

struct GridDims {
  int width = 0;
  int height = 0;

  bool contains(Cell c) const { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; }
  int cell_count() const { return width * height; }
  int index(Cell c) const { return c.row * width + c.col; }
  Cell cell(int index) const { return {index / width, index % width}; }

  friend constexpr bool operator==(const GridDims&, const GridDims&) = default;
};

// Dense row-major grid of non-negative utility scores. Row 0 is the top of the grid.
class ScoreMap {
 public:
  ScoreMap() = default;

  ScoreMap(int width, int height, double fill = 0.0) : dims_{width, height} {
    if (width < 1 || height < 1) throw std::invalid_argument("ScoreMap: width and height must be >= 1");
    if (!(fill >= 0.0)) throw std::invalid_argument("ScoreMap: scores must be non-negative");
    scores_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  ScoreMap(int width, int height, std::vector<double> scores) : dims_{width, height}, scores_(std::move(scores)) {
    if (width < 1 || height < 1) throw std::invalid_argument("ScoreMap: width and height must be >= 1");
    if (scores_.size() != static_cast<std::size_t>(width) * height)
      throw std::invalid_argument("ScoreMap: score count does not match width*height");
    for (double s : scores_)
      if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("ScoreMap: scores must be finite and >= 0");
  }

  int width() const { return dims_.width; }
  int height() const { return dims_.height; }
  GridDims dims() const { return dims_; }
  bool contains(Cell c) const { return dims_.contains(c); }

  double at(Cell c) const { return scores_[static_cast<std::size_t>(dims_.index(c))]; }
  double at(int row, int col) const { return at(Cell{row, col}); }

  void set(Cell c, double value) {
    if (!(value >= 0.0)) throw std::invalid_argument("ScoreMap: scores must be non-negative");
    scores_[static_cast<std::size_t>(dims_.index(c))] = value;
  }

  std::span<const double> scores() const { return scores_; }

  double total() const { return std::accumulate(scores_.begin(), scores_.end(), 0.0); }
  double max() const { return scores_.empty() ? 0.0 : *std::max_element(scores_.begin(), scores_.end()); }

  friend bool operator==(const ScoreMap&, const ScoreMap&) = default;

 private:
  GridDims dims_;
  std::vector<double> scores_;
};

// Divide by the maximum so the peak becomes exactly 1. All-zero maps pass through.
inline ScoreMap normalize(const ScoreMap& map) {
  const double peak = map.max();
  if (peak <= 0.0) return map;
  std::vector<double> out(map.scores().begin(), map.scores().end());
  for (double& s : out) s /= peak;
  return ScoreMap(map.width(), map.height(), std::move(out));
}

// Largest Euclidean distance between two cells of the grid.
inline double d_max(GridDims dims) {
  return std::hypot(static_cast<double>(dims.height - 1), static_cast<double>(dims.width - 1));
}
inline double d_max(const ScoreMap& map) { return d_max(map.dims()); }

// ---------------------------------------------------------------------------
// Gaussian mixtures

struct GaussianComponent {
  double mean_row = 0.0;  // cell coordinates; cell (i, j) has its center at (i + 0.5, j + 0.5)
  double mean_col = 0.0;
  double var_row = 1.0;  // covariance entries, cells^2
  double cov = 0.0;
  double var_col = 1.0;
  double weight = 1.0;
};

struct GaussianMixtureSpec {
  std::vector<GaussianComponent> components;
};

inline void validate(const GaussianMixtureSpec& spec) {
  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    const auto& c = spec.components[i];
    const double det = c.var_row * c.var_col - c.cov * c.cov;
    if (!(c.weight > 0.0))
      throw std::invalid_argument("gaussian mixture: component " + std::to_string(i) + " has non-positive weight");
    if (!(c.var_row > 0.0) || !(det > 0.0))
      throw std::invalid_argument("gaussian mixture: component " + std::to_string(i) +
                                  " covariance is not positive-definite");
  }
}

// Mixture density evaluated at cell centers, normalized to a peak of 1.
inline ScoreMap gaussian_mixture_field(int width, int height, const GaussianMixtureSpec& spec) {
  validate(spec);
  ScoreMap raw(width, height);
  for (const auto& c : spec.components) {
    const double det = c.var_row * c.var_col - c.cov * c.cov;
    // inverse of [[var_row, cov], [cov, var_col]]
    const double irr = c.var_col / det, icc = c.var_row / det, irc = -c.cov / det;
    for (int i = 0; i < height; ++i) {
      for (int j = 0; j < width; ++j) {
        const double dr = i + 0.5 - c.mean_row;
        const double dc = j + 0.5 - c.mean_col;
        const double q = irr * dr * dr + 2.0 * irc * dr * dc + icc * dc * dc;
        raw.set({i, j}, raw.at(i, j) + c.weight * std::exp(-0.5 * q));
      }
    }
  }
  return normalize(raw);
}

// Draws a random mixture with `count` components; sizes are relative to the grid.
struct MixtureSampling {
  int min_components = 1;
  int max_components = 1;
  double min_sigma_frac = 0.08;  // standard deviation as a fraction of max(width, height)
  double max_sigma_frac = 0.25;
  double max_correlation = 0.6;
};

inline GaussianMixtureSpec random_mixture(int width, int height, const MixtureSampling& how, RngStream& rng) {
  if (how.min_components < 0 || how.max_components < how.min_components)
    throw std::invalid_argument("random_mixture: invalid component range");
  const int span = how.max_components - how.min_components + 1;
  const int count = how.min_components + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
  const double extent = std::max(width, height);
  GaussianMixtureSpec spec;
  for (int i = 0; i < count; ++i) {
    GaussianComponent c;
    c.mean_row = rng.uniform(0.0, height);
    c.mean_col = rng.uniform(0.0, width);
    const double sr = extent * rng.uniform(how.min_sigma_frac, how.max_sigma_frac);
    const double sc = extent * rng.uniform(how.min_sigma_frac, how.max_sigma_frac);
    const double rho = rng.uniform(-how.max_correlation, how.max_correlation);
    c.var_row = sr * sr;
    c.var_col = sc * sc;
    c.cov = rho * sr * sc;
    c.weight = rng.uniform(0.5, 1.0);
    spec.components.push_back(c);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Diffusion

struct PointSource {
  Cell cell;
  double strength = 1.0;
};

// Explicit 5-point heat diffusion with zero-flux boundaries; not normalized.
// Total mass is conserved step to step.
inline ScoreMap diffuse(int width, int height, std::span<const PointSource> sources, double diffusion_coeff,
                        int steps) {
  if (!(diffusion_coeff >= 0.0) || diffusion_coeff > 0.25)
    throw std::invalid_argument("diffusion: coefficient must lie in [0, 0.25] for a stable explicit stencil");
  if (steps < 0) throw std::invalid_argument("diffusion: steps must be >= 0");
  const GridDims dims{width, height};
  std::vector<double> u(static_cast<std::size_t>(width) * height, 0.0);
  for (const auto& s : sources) {
    if (!dims.contains(s.cell)) throw std::invalid_argument("diffusion: source outside the grid");
    if (!(s.strength >= 0.0)) throw std::invalid_argument("diffusion: source strength must be >= 0");
    u[static_cast<std::size_t>(dims.index(s.cell))] += s.strength;
  }
  std::vector<double> next(u.size());
  for (int step = 0; step < steps; ++step) {
    for (int i = 0; i < height; ++i) {
      for (int j = 0; j < width; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * width + j;
        const double here = u[k];
        // a missing neighbour mirrors the cell itself, so no flux crosses the boundary
        const double up = i > 0 ? u[k - width] : here;
        const double down = i + 1 < height ? u[k + width] : here;
        const double left = j > 0 ? u[k - 1] : here;
        const double right = j + 1 < width ? u[k + 1] : here;
        next[k] = here + diffusion_coeff * ((up - here) + (down - here) + (left - here) + (right - here));
      }
    }
    u.swap(next);
  }
  for (double& v : u) v = std::max(v, 0.0);
  return ScoreMap(width, height, std::move(u));
}

inline ScoreMap diffusion_field(int width, int height, std::span<const PointSource> sources, double diffusion_coeff,
                                int steps) {
  return normalize(diffuse(width, height, sources, diffusion_coeff, steps));
}

// ---------------------------------------------------------------------------
// CSV grid files: one row per line, comma separated, optional leading '#' comments.

inline ScoreMap parse_field(std::istream& in, const std::string& origin = "<field>") {
  std::vector<double> scores;
  int width = -1;
  int row = 0;
  std::string line;
  bool data_started = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!data_started && (line.empty() || line.front() == '#')) continue;
    if (line.empty()) {
      // trailing blank lines are fine, blank lines inside the grid are not
      std::string rest;
      while (std::getline(in, rest))
        if (!rest.empty() && rest != "\r")
          throw ParseError(origin + ": blank line inside grid after row " + std::to_string(row - 1));
      break;
    }
    data_started = true;
    int col = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      std::string_view token(line.data() + pos, (comma == std::string::npos ? line.size() : comma) - pos);
      while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
      while (!token.empty() && (token.back() == ' ' || token.back() == '\t')) token.remove_suffix(1);
      double value = 0.0;
      const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (token.empty() || ec != std::errc() || end != token.data() + token.size() || !std::isfinite(value))
        throw ParseError(origin + ": row " + std::to_string(row) + ", column " + std::to_string(col) +
                         ": not a number: '" + std::string(token) + "'");
      if (value < 0.0)
        throw ParseError(origin + ": row " + std::to_string(row) + ", column " + std::to_string(col) +
                         ": negative score " + std::string(token));
      scores.push_back(value);
      ++col;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (width < 0) {
      width = col;
    } else if (col != width) {
      throw ParseError(origin + ": row " + std::to_string(row) + " has " + std::to_string(col) +
                       " values, expected " + std::to_string(width));
    }
    ++row;
  }
  if (row == 0) throw ParseError(origin + ": no grid rows");
  return ScoreMap(width, row, std::move(scores));
}

inline ScoreMap load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open field file: " + path);
  return parse_field(in, path);
}

inline void write_field(std::ostream& out, const ScoreMap& map) {
  char buf[32];
  for (int i = 0; i < map.height(); ++i) {
    for (int j = 0; j < map.width(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", map.at(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

inline void save_field(const ScoreMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write field file: " + path);
  write_field(out, map);
  if (!out) throw std::runtime_error("error while writing field file: " + path);
}

}  // namespace mrs
