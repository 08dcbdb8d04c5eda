#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "mdp.hpp"

namespace mrs {

// Smallest L with 3^L >= max(width, height).
inline int feature_levels(int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("feature_levels: grid must be at least 1x1");
  const int extent = std::max(width, height);
  int levels = 0;
  long long reach = 1;
  while (reach < extent) {
    reach *= 3;
    ++levels;
  }
  return std::max(levels, 1);
}

inline constexpr int kRingCells = 8;
inline constexpr int kHeadingEntries = 8;

// How a super-cell's score mass becomes a feature value.
//   Share:        sum inside the super-cell / total remaining score of the map
//   PeakRelative: mean inside the super-cell (out-of-grid area counts as 0) / current peak score
// Share makes single-cell features O(1/cells), far below the coarse levels, which a single
// learning rate cannot fit; PeakRelative keeps every level on the same O(1) scale.
enum class FeatureNorm : std::uint8_t { PeakRelative, Share };

inline std::string_view to_string(FeatureNorm n) { return n == FeatureNorm::Share ? "share" : "peak"; }

inline FeatureNorm parse_feature_norm(std::string_view s) {
  if (s == "peak") return FeatureNorm::PeakRelative;
  if (s == "share") return FeatureNorm::Share;
  throw std::invalid_argument("unknown feature normalization '" + std::string(s) + "' (expected peak or share)");
}

// Shape of the state and state-action feature vectors.
struct FeatureLayout {
  int levels = 1;
  ActionMode mode = ActionMode::FourConnected;
  FeatureNorm norm = FeatureNorm::PeakRelative;

  int state_dim() const { return kRingCells * levels + 1 + (mode == ActionMode::HeadingConstrained ? kHeadingEntries : 0); }
  int actions() const { return action_count(mode); }
  int total_dim() const { return actions() * state_dim(); }

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

inline FeatureLayout make_layout(GridDims dims, ActionMode mode, FeatureNorm norm = FeatureNorm::PeakRelative) {
  return FeatureLayout{feature_levels(dims.width, dims.height), mode, norm};
}

// Inclusive-rectangle sums over a map in O(1) after an O(cells) build.
class SummedArea {
 public:
  explicit SummedArea(const ScoreMap& map) : w_(map.width()), h_(map.height()) {
    table_.assign(static_cast<std::size_t>(w_ + 1) * (h_ + 1), 0.0);
    for (int i = 0; i < h_; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < w_; ++j) {
        row_sum += map.at(i, j);
        at(i + 1, j + 1) = at(i, j + 1) + row_sum;
      }
    }
  }

  // Sum over rows [r0, r1] x cols [c0, c1], clipped to the grid.
  double sum(int r0, int c0, int r1, int c1) const {
    r0 = std::max(r0, 0);
    c0 = std::max(c0, 0);
    r1 = std::min(r1, h_ - 1);
    c1 = std::min(c1, w_ - 1);
    if (r0 > r1 || c0 > c1) return 0.0;
    return at(r1 + 1, c1 + 1) - at(r0, c1 + 1) - at(r1 + 1, c0) + at(r0, c0);
  }

  double total() const { return at(h_, w_); }

 private:
  double& at(int i, int j) { return table_[static_cast<std::size_t>(i) * (w_ + 1) + j]; }
  double at(int i, int j) const { return table_[static_cast<std::size_t>(i) * (w_ + 1) + j]; }

  int w_, h_;
  std::vector<double> table_;
};

// Ring offsets clockwise from North.
inline constexpr std::array<std::array<int, 2>, 8> kRing{
    {{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}}};

// Multi-resolution state features. Level l tiles a robot-centred 3x3 block of square
// super-cells with side 3^l; the 8 outer super-cells each contribute one value (see
// FeatureNorm). A constant bias entry follows, then the one-hot heading in
// heading-constrained mode.
inline Eigen::VectorXd state_features(const ScoreMap& map, Cell position, const FeatureLayout& layout,
                                      Heading heading = Heading::N) {
  detail::expects(map.contains(position), "state_features: position outside the grid");
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(layout.state_dim());
  const SummedArea area(map);
  const double total = area.total();
  const double peak = map.max();
  int side = 1;
  for (int level = 0; level < layout.levels; ++level) {
    const int half = side / 2;
    const double denom = layout.norm == FeatureNorm::Share ? total : peak * side * side;
    if (denom > 0.0) {
      for (int k = 0; k < kRingCells; ++k) {
        const int r = position.row + kRing[k][0] * side;
        const int c = position.col + kRing[k][1] * side;
        const double share = area.sum(r - half, c - half, r + half, c + half) / denom;
        phi[level * kRingCells + k] = std::clamp(share, 0.0, 1.0);
      }
    }
    side *= 3;
  }
  const int bias = kRingCells * layout.levels;
  phi[bias] = 1.0;
  if (layout.mode == ActionMode::HeadingConstrained) phi[bias + 1 + static_cast<int>(heading)] = 1.0;
  return phi;
}

// phi_sa: phi_s copied into block `action`, zeros elsewhere.
inline Eigen::VectorXd action_features(const Eigen::VectorXd& phi_s, int action, const FeatureLayout& layout) {
  if (action < 0 || action >= layout.actions())
    throw std::out_of_range("action_features: action index " + std::to_string(action) + " out of range");
  if (phi_s.size() != layout.state_dim())
    throw std::invalid_argument("action_features: state feature length does not match the layout");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.total_dim());
  out.segment(static_cast<Eigen::Index>(action) * layout.state_dim(), layout.state_dim()) = phi_s;
  return out;
}

}  // namespace mrs
