#include <gtest/gtest.h>

#include <set>

#include "reward_align/hungry_thirsty.hpp"

namespace ra = reward_align;
namespace ht = reward_align::ht;
using ra::Action;
using ra::State;

TEST(HungryThirsty, SixtyFourDistinctStatesInIndexOrder) {
  const auto states = ht::enumerate_states();
  ASSERT_EQ(states.size(), ht::kNumStates);
  std::set<State> seen(states.begin(), states.end());
  EXPECT_EQ(seen.size(), ht::kNumStates);
  for (std::size_t i = 0; i < states.size(); ++i) EXPECT_EQ(ht::state_index(states[i]), i);
}

TEST(HungryThirsty, DefaultConfigIsValid) {
  ht::EnvConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.thirst_prob, 0.10);
  EXPECT_EQ(c.max_steps, 200);
  EXPECT_TRUE(c.initial_hungry);
  EXPECT_FALSE(c.initial_thirsty);
}

TEST(HungryThirsty, ValidationRejectsBadLayouts) {
  ht::EnvConfig c;
  c.food = {1, 1};
  EXPECT_THROW(c.validate(), ra::InvalidArgument);
  c = {};
  c.water = c.food;
  EXPECT_THROW(c.validate(), ra::InvalidArgument);
  c = {};
  c.thirst_prob = 1.5;
  EXPECT_THROW(c.validate(), ra::InvalidArgument);
  c = {};
  c.max_steps = 0;
  EXPECT_THROW(c.validate(), ra::InvalidArgument);
  c = {};
  c.width = 5;
  EXPECT_THROW(c.validate(), ra::InvalidArgument);
}

TEST(HungryThirsty, RandomLayoutUsesDistinctCorners) {
  std::set<std::pair<int, int>> foods;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto c = ht::EnvConfig::random_layout(seed);
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.config_seed, seed);
    foods.insert({c.food.x, c.food.y});
    EXPECT_EQ(c.food, ht::EnvConfig::random_layout(seed).food);
  }
  EXPECT_EQ(foods.size(), 4u);
}

TEST(HungryThirsty, MovementStopsAtWalls) {
  const ht::EnvConfig c;
  const State corner{0, 0, true, false};
  EXPECT_EQ(ht::resolve_action(corner, Action::Left, c).next.x, 0);
  EXPECT_EQ(ht::resolve_action(corner, Action::Down, c).next.y, 0);
  EXPECT_EQ(ht::resolve_action(corner, Action::Up, c).next.y, 1);
  EXPECT_EQ(ht::resolve_action(corner, Action::Right, c).next.x, 1);
  const State far{3, 3, true, false};
  EXPECT_EQ(ht::resolve_action(far, Action::Right, c).next.x, 3);
  EXPECT_EQ(ht::resolve_action(far, Action::Up, c).next.y, 3);
}

TEST(HungryThirsty, EatingNeedsFoodCellAndNoThirst) {
  const ht::EnvConfig c;  // food (3,0), water (0,0)
  const auto ok = ht::resolve_action({3, 0, true, false}, Action::Eat, c);
  EXPECT_TRUE(ok.ate);
  EXPECT_FALSE(ok.next.hungry);
  EXPECT_FALSE(ht::resolve_action({3, 0, true, true}, Action::Eat, c).ate);
  EXPECT_FALSE(ht::resolve_action({2, 0, true, false}, Action::Eat, c).ate);
  // Being fed lasts one step: any non-eating action leaves the agent hungry.
  EXPECT_TRUE(ht::resolve_action({3, 0, false, false}, Action::Up, c).next.hungry);
}

TEST(HungryThirsty, DrinkingQuenchesOnlyAtWater) {
  const ht::EnvConfig c;
  EXPECT_FALSE(ht::resolve_action({0, 0, true, true}, Action::Drink, c).next.thirsty);
  EXPECT_TRUE(ht::resolve_action({1, 0, true, true}, Action::Drink, c).next.thirsty);
}

TEST(HungryThirsty, ThirstOnsetFrequency) {
  const ht::EnvConfig c;
  ra::Rng rng(42);
  int onset = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    if (ht::step({1, 1, true, false}, Action::Up, c, rng).next.thirsty) ++onset;
  }
  // Binomial(1e5, 0.1): sd ~ 95.
  EXPECT_NEAR(onset, 10000, 500);
}

TEST(HungryThirsty, ThirstPersistsWithoutDrinking) {
  const ht::EnvConfig c;
  ra::Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_TRUE(ht::step({1, 1, true, true}, Action::Left, c, rng).next.thirsty);
  }
}

TEST(HungryThirsty, RewardIndexedByPostStatus) {
  const ra::RewardParams p{1, 2, 3, 4};
  EXPECT_EQ(ht::reward_of({0, 0, true, true}, p), 1);
  EXPECT_EQ(ht::reward_of({0, 0, true, false}, p), 2);
  EXPECT_EQ(ht::reward_of({0, 0, false, true}, p), 3);
  EXPECT_EQ(ht::reward_of({0, 0, false, false}, p), 4);
}

TEST(HungryThirsty, InitialStateModes) {
  ht::EnvConfig c = ht::EnvConfig::fixed_start_study();
  ra::Rng rng(3);
  const auto s = ht::initial_state(c, rng);
  EXPECT_EQ(s, (State{0, 0, true, false}));
  c.start_mode = ht::StartMode::RandomPerEpisode;
  std::set<std::pair<int, int>> cells;
  for (int i = 0; i < 2000; ++i) {
    const auto r = ht::initial_state(c, rng);
    EXPECT_TRUE(r.hungry);
    EXPECT_FALSE(r.thirsty);
    cells.insert({r.x, r.y});
  }
  EXPECT_EQ(cells.size(), 16u);
}

TEST(HungryThirsty, RolloutIsDeterministicAndFullLength) {
  const auto c = ht::EnvConfig::random_layout(5);
  const ht::Policy random_policy = [](const State&, ra::Rng& rng) {
    return static_cast<Action>(rng.below(6));
  };
  const auto a = ht::rollout(random_policy, c, 17);
  const auto b = ht::rollout(random_policy, c, 17);
  EXPECT_EQ(a.trajectory.length(), 200u);
  EXPECT_EQ(a.trajectory.id(), c.id() + "/ep17");
  ASSERT_EQ(a.trajectory.length(), b.trajectory.length());
  for (std::size_t t = 0; t < a.trajectory.length(); ++t) {
    EXPECT_EQ(a.trajectory.steps()[t], b.trajectory.steps()[t]);
  }
  EXPECT_EQ(a.eval_return, ht::eval_return(a.trajectory));
  const auto other = ht::rollout(random_policy, c, 18);
  bool differs = false;
  for (std::size_t t = 0; t < a.trajectory.length(); ++t) {
    differs = differs || !(a.trajectory.steps()[t] == other.trajectory.steps()[t]);
  }
  EXPECT_TRUE(differs);
}

// Replaying recorded transitions through resolve_action reproduces every
// deterministic part of the dynamics.
TEST(HungryThirsty, RolloutTransitionsAreConsistentWithDynamics) {
  const auto c = ht::EnvConfig::random_layout(9);
  const ht::Policy random_policy = [](const State&, ra::Rng& rng) {
    return static_cast<Action>(rng.below(6));
  };
  for (std::uint64_t ep = 0; ep < 20; ++ep) {
    const auto r = ht::rollout(random_policy, c, ep);
    for (const auto& t : r.trajectory.steps()) {
      const auto res = ht::resolve_action(t.s, t.a, c);
      EXPECT_EQ(t.next.x, res.next.x);
      EXPECT_EQ(t.next.y, res.next.y);
      EXPECT_EQ(t.next.hungry, res.next.hungry);
      if (res.next.thirsty) EXPECT_TRUE(t.next.thirsty);
    }
  }
}

TEST(HungryThirsty, EvalMetricRewardMatchesEvalReturnUndiscounted) {
  const auto c = ht::EnvConfig::random_layout(2);
  // Head for water when thirsty, otherwise for food, and act on arrival.
  const ht::Policy greedy = [c](const State& s, ra::Rng&) {
    const auto target = s.thirsty ? c.water : c.food;
    if (s.x < target.x) return Action::Right;
    if (s.x > target.x) return Action::Left;
    if (s.y < target.y) return Action::Up;
    if (s.y > target.y) return Action::Down;
    return s.thirsty ? Action::Drink : Action::Eat;
  };
  const auto r = ht::rollout(greedy, c, 0);
  const auto metric = ra::RewardSpec::hungry_thirsty(ht::kEvalMetricReward, 0.0);
  double total = 0.0;
  for (const auto& t : r.trajectory.steps()) total += metric.reward(t);
  EXPECT_EQ(total, r.eval_return);
  EXPECT_GT(r.eval_return, 0);
}
