#include <gtest/gtest.h>

#include <cmath>

#include "mrs/mdp.hpp"
#include "support.hpp"

using namespace mrs;

namespace {

RobotState at(int r, int c, Heading h = Heading::N) {
  RobotState s;
  s.position = {r, c};
  s.heading = h;
  return s;
}

using Actions = std::vector<Action>;

}  // namespace

TEST(FeasibleActions, CenterFourConnected) {
  EXPECT_EQ(feasible_actions(at(2, 2), {5, 5}, ActionMode::FourConnected),
            (Actions{Action::North, Action::East, Action::South, Action::West}));
}

TEST(FeasibleActions, CornerFourConnected) {
  EXPECT_EQ(feasible_actions(at(0, 0), {5, 5}, ActionMode::FourConnected), (Actions{Action::East, Action::South}));
  EXPECT_EQ(feasible_actions(at(4, 4), {5, 5}, ActionMode::FourConnected), (Actions{Action::North, Action::West}));
}

TEST(FeasibleActions, HeadingModeEnumeratesDestinations) {
  const GridDims g{5, 5};
  // facing east from the top-left corner: NE leaves the grid, E and SE stay inside
  EXPECT_EQ(feasible_actions(at(0, 0, Heading::E), g, ActionMode::HeadingConstrained),
            (Actions{Action::Straight, Action::Right45}));
  // facing north-east from the left edge: N, NE and E all lie inside
  EXPECT_EQ(feasible_actions(at(2, 0, Heading::NE), g, ActionMode::HeadingConstrained),
            (Actions{Action::Left45, Action::Straight, Action::Right45}));
  // facing west on the left edge: SW, W, NW all leave the grid
  EXPECT_EQ(feasible_actions(at(2, 0, Heading::W), g, ActionMode::HeadingConstrained),
            (Actions{Action::TurnRight90}));
  // facing south on the top edge: SE, S, SW all inside
  EXPECT_EQ(feasible_actions(at(0, 2, Heading::S), g, ActionMode::HeadingConstrained),
            (Actions{Action::Left45, Action::Straight, Action::Right45}));
}

TEST(FeasibleActions, OutwardCornerFallsBackToTurn) {
  // from (0,0) facing north the three forward cells NW, N, NE are all outside
  EXPECT_EQ(feasible_actions(at(0, 0, Heading::N), {5, 5}, ActionMode::HeadingConstrained),
            (Actions{Action::TurnRight90}));
}

TEST(FeasibleActions, MatchesBoundsCheckOfEveryDestination) {
  const GridDims g{4, 3};
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c)
      for (int h = 0; h < 8; ++h) {
        const RobotState s = at(r, c, static_cast<Heading>(h));
        for (ActionMode mode : {ActionMode::FourConnected, ActionMode::HeadingConstrained}) {
          Actions expected;
          for (Action a : policy_actions(mode))
            if (g.contains(resolve(s, a).destination)) expected.push_back(a);
          if (expected.empty()) expected.push_back(Action::TurnRight90);
          EXPECT_EQ(feasible_actions(s, g, mode), expected);
        }
      }
}

TEST(FeasibleActions, NeverEmptyOnSmallGrids) {
  const GridDims g{2, 1};
  EXPECT_EQ(feasible_actions(at(0, 0), g, ActionMode::FourConnected), (Actions{Action::East}));
}

TEST(FeasibleActions, OutOfBoundsIsContractViolation) {
  EXPECT_THROW(feasible_actions(at(5, 0), {5, 5}, ActionMode::FourConnected), ContractViolation);
  EXPECT_THROW(feasible_actions(at(0, -1), {5, 5}, ActionMode::FourConnected), ContractViolation);
}

TEST(Step, CollectsAndZeroes) {
  WorldState w{ScoreMap(3, 3), {at(1, 1)}, 0};
  w.truth.set({0, 1}, 0.7);
  EXPECT_EQ(step(w, 0, Action::North), 0.7);
  EXPECT_EQ(w.truth.at(0, 1), 0.0);
  EXPECT_EQ(w.robots[0].position, (Cell{0, 1}));
  EXPECT_EQ(w.robots[0].heading, Heading::N);
}

TEST(Step, SecondVisitEarnsNothing) {
  WorldState w{ScoreMap(3, 3, 1.0), {at(1, 1)}, 0};
  EXPECT_EQ(step(w, 0, Action::East), 1.0);
  EXPECT_EQ(step(w, 0, Action::West), 1.0);
  EXPECT_EQ(step(w, 0, Action::East), 0.0);
}

TEST(Step, OnlyDestinationChanges) {
  RngStream rng(4);
  WorldState w{test::random_map(5, 5, rng), {at(2, 2)}, 0};
  const ScoreMap before = w.truth;
  step(w, 0, Action::South);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c)
      if (!(r == 3 && c == 2)) {
        EXPECT_EQ(w.truth.at(r, c), before.at(r, c));
      }
}

TEST(Step, HeadingModeUpdatesHeading) {
  WorldState w{ScoreMap(5, 5, 1.0), {at(2, 2, Heading::N)}, 0};
  step(w, 0, Action::Right45, ActionMode::HeadingConstrained);
  EXPECT_EQ(w.robots[0].position, (Cell{1, 3}));
  EXPECT_EQ(w.robots[0].heading, Heading::NE);
  step(w, 0, Action::Left45, ActionMode::HeadingConstrained);
  EXPECT_EQ(w.robots[0].position, (Cell{0, 3}));
  EXPECT_EQ(w.robots[0].heading, Heading::N);
}

TEST(Step, FallbackTurnStaysInPlace) {
  WorldState w{ScoreMap(5, 5, 1.0), {at(0, 0, Heading::N)}, 0};
  EXPECT_EQ(step(w, 0, Action::TurnRight90, ActionMode::HeadingConstrained), 0.0);
  EXPECT_EQ(w.robots[0].position, (Cell{0, 0}));
  EXPECT_EQ(w.robots[0].heading, Heading::E);
}

TEST(Step, InfeasibleIsContractViolation) {
  WorldState w{ScoreMap(3, 3, 1.0), {at(0, 0)}, 0};
  EXPECT_THROW(step(w, 0, Action::North), ContractViolation);
  EXPECT_THROW(step(w, 0, Action::Straight), ContractViolation);  // wrong action space
  WorldState h{ScoreMap(5, 5, 1.0), {at(2, 2, Heading::N)}, 0};
  EXPECT_THROW(step(h, 0, Action::TurnRight90, ActionMode::HeadingConstrained), ContractViolation);
  EXPECT_THROW(step(h, 7, Action::Left45, ActionMode::HeadingConstrained), ContractViolation);
}

TEST(Step, ConservationOverRandomWalks) {
  RngStream rng(99);
  for (int rep = 0; rep < 100; ++rep) {
    const int w = 1 + static_cast<int>(rng.below(7)), h = 2 + static_cast<int>(rng.below(6));
    const ActionMode mode = rng.below(2) ? ActionMode::FourConnected : ActionMode::HeadingConstrained;
    const ScoreMap initial = test::random_map(w, h, rng);
    RobotState start = at(static_cast<int>(rng.below(static_cast<std::uint64_t>(h))),
                          static_cast<int>(rng.below(static_cast<std::uint64_t>(w))),
                          static_cast<Heading>(rng.below(8)));
    WorldState world{initial, {start}, 0};
    std::vector<double> cell_collected(initial.scores().size(), 0.0);
    auto record = [&](Cell c, double r) {
      auto& slot = cell_collected[static_cast<std::size_t>(initial.dims().index(c))];
      if (r > 0.0) {
        EXPECT_EQ(slot, 0.0) << "cell collected twice";
      }
      slot += r;
    };
    record(start.position, scan(world.truth, start.position));
    double sum = cell_collected[static_cast<std::size_t>(initial.dims().index(start.position))];
    for (int t = 0; t < 30; ++t) {
      const auto feas = feasible_actions(world.robots[0], initial.dims(), mode);
      const Action a = feas[rng.below(feas.size())];
      const double r = step(world, 0, a, mode);
      EXPECT_TRUE(initial.contains(world.robots[0].position));
      record(world.robots[0].position, r);
      sum += r;
    }
    EXPECT_LE(sum, initial.total() + 1e-12);
    for (std::size_t k = 0; k < cell_collected.size(); ++k)
      EXPECT_EQ(initial.scores()[k], world.truth.scores()[k] + cell_collected[k]);
  }
}

TEST(DiscountedReturn, Examples) {
  const std::vector<double> ones{1, 1, 1};
  EXPECT_EQ(discounted_return(ones, 0.0), 1.0);
  EXPECT_EQ(discounted_return(ones, 1.0), 3.0);
  const std::vector<double> late{0, 0, 0, 0.7};
  EXPECT_NEAR(discounted_return(late, 0.9), 0.5103, 1e-12);
  EXPECT_THROW(discounted_return(ones, 1.5), std::invalid_argument);
  EXPECT_THROW(discounted_return(ones, -0.1), std::invalid_argument);
}

TEST(DiscountedReturn, MonotoneInGamma) {
  RngStream rng(8);
  std::vector<double> r(20);
  for (double& x : r) x = rng.uniform();
  double prev = -1.0;
  for (double g = 0.0; g <= 1.0; g += 0.05) {
    const double v = discounted_return(r, std::min(g, 1.0));
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(HyperbolicReturn, Examples) {
  EXPECT_EQ(hyperbolic_return(std::vector<double>{1.0}), 1.0);
  EXPECT_EQ(hyperbolic_return(std::vector<double>{0.0, 1.0}, 1.0), 0.5);
  EXPECT_NEAR(hyperbolic_return(std::vector<double>{1, 1, 1}, 1.0), 11.0 / 6.0, 1e-15);
  EXPECT_THROW(hyperbolic_return(std::vector<double>{1.0}, 0.0), std::invalid_argument);
}

TEST(ActionNames, RoundTrip) {
  EXPECT_EQ(to_string(Action::Left45), "L45");
  EXPECT_EQ(parse_action_mode("heading"), ActionMode::HeadingConstrained);
  EXPECT_EQ(parse_action_mode(to_string(ActionMode::FourConnected)), ActionMode::FourConnected);
  EXPECT_THROW(parse_action_mode("8conn"), std::invalid_argument);
}
