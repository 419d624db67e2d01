#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "reward_align/tabular_rl.hpp"

namespace ra = reward_align;
namespace ht = reward_align::ht;
namespace rl = reward_align::rl;
using ra::Action;
using ra::State;

namespace {

rl::TrainConfig small_config(rl::Algorithm algo = rl::Algorithm::QLearning) {
  rl::TrainConfig c;
  c.algorithm = algo;
  c.episodes = 30;
  c.seeds = 4;
  c.final_window = 10;
  c.learning_rate = 0.05;
  c.epsilon = 0.1;
  return c;
}

}  // namespace

TEST(TabularRl, AlgorithmNamesRoundTrip) {
  for (auto a : rl::kAllAlgorithms) EXPECT_EQ(rl::parse_algorithm(rl::algorithm_name(a)), a);
  EXPECT_FALSE(rl::parse_algorithm("dqn").has_value());
}

TEST(TabularRl, ConfigValidation) {
  auto c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.gamma = 1.0;
  EXPECT_THROW(c.validate(), ra::InvalidArgument);
  c = small_config();
  c.epsilon = -0.1;
  EXPECT_THROW(c.validate(), ra::InvalidArgument);
  c = small_config();
  c.episodes = 0;
  EXPECT_THROW(c.validate(), ra::InvalidArgument);
}

// Hand-computed updates: Q(s,a)=1, r=2, lr=0.5, gamma=0.9, next row
// {0,4,4,1,0,0}, epsilon 0.3.
TEST(TabularRl, TdUpdateTargets) {
  const State s{0, 0, true, false};
  const State n{1, 0, true, false};
  const ra::Transition t{s, Action::Right, n};
  auto fresh = [&] {
    rl::QTable q;
    q.at(s, Action::Right) = 1.0;
    q.at(n, Action::Down) = 4.0;
    q.at(n, Action::Left) = 4.0;
    q.at(n, Action::Right) = 1.0;
    return q;
  };
  {
    auto q = fresh();
    rl::td_update(q, rl::Algorithm::QLearning, t, 2.0, Action::Up, 0.5, 0.9, 0.3);
    EXPECT_DOUBLE_EQ(q.at(s, Action::Right), 1.0 + 0.5 * (2.0 + 0.9 * 4.0 - 1.0));
  }
  {
    auto q = fresh();
    rl::td_update(q, rl::Algorithm::Sarsa, t, 2.0, Action::Right, 0.5, 0.9, 0.3);
    EXPECT_DOUBLE_EQ(q.at(s, Action::Right), 1.0 + 0.5 * (2.0 + 0.9 * 1.0 - 1.0));
  }
  {
    auto q = fresh();
    // 0.3/6 * 9 + 0.7/2 * 8 = 0.45 + 2.8
    const double expect = 0.45 + 2.8;
    EXPECT_NEAR(rl::epsilon_greedy_expectation(q, n, 0.3), expect, 1e-12);
    rl::td_update(q, rl::Algorithm::ExpectedSarsa, t, 2.0, Action::Up, 0.5, 0.9, 0.3);
    EXPECT_NEAR(q.at(s, Action::Right), 1.0 + 0.5 * (2.0 + 0.9 * expect - 1.0), 1e-12);
  }
}

TEST(TabularRl, GreedyTieBreakIsUniform) {
  rl::QTable q;
  const State s{2, 2, true, false};
  q.at(s, Action::Up) = 1.0;
  q.at(s, Action::Eat) = 1.0;
  q.at(s, Action::Drink) = 1.0;
  ra::Rng rng(4);
  std::map<Action, int> counts;
  for (int i = 0; i < 30000; ++i) ++counts[rl::greedy_action(q, s, rng)];
  ASSERT_EQ(counts.size(), 3u);
  for (const auto& [a, c] : counts) EXPECT_NEAR(c, 10000, 400) << ra::action_name(a);
}

TEST(TabularRl, EpsilonGreedyExplorationRate) {
  rl::QTable q;
  const State s{1, 2, false, true};
  q.at(s, Action::Left) = 5.0;
  ra::Rng rng(5);
  int greedy = 0;
  const int n = 60000;
  for (int i = 0; i < n; ++i) greedy += rl::epsilon_greedy_action(q, s, 0.3, rng) == Action::Left;
  // P(Left) = 0.7 + 0.3/6 = 0.75.
  EXPECT_NEAR(static_cast<double>(greedy) / n, 0.75, 0.01);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(rl::epsilon_greedy_action(q, s, 0.0, rng), Action::Left);
}

TEST(TabularRl, SeedEnvironment) {
  auto c = small_config();
  ht::EnvConfig env;
  env.config_seed = 10;
  const auto e = rl::seed_environment(c, env, 3);
  EXPECT_EQ(e.config_seed, 13u);
  EXPECT_EQ(e.food, ht::EnvConfig::random_layout(13).food);
  c.randomize_layout = false;
  const auto f = rl::seed_environment(c, env, 3);
  EXPECT_EQ(f.config_seed, 13u);
  EXPECT_EQ(f.food, env.food);
  EXPECT_EQ(f.water, env.water);
}

TEST(TabularRl, TrainSeedIsDeterministicAndSummarized) {
  for (auto algo : rl::kAllAlgorithms) {
    const auto c = small_config(algo);
    const auto a = rl::train_seed(c, {}, 2);
    const auto b = rl::train_seed(c, {}, 2);
    EXPECT_EQ(a.curve, b.curve);
    EXPECT_EQ(a.q, b.q);
    ASSERT_EQ(a.curve.size(), 30u);
    double tail = 0.0, all = 0.0;
    for (std::size_t e = 0; e < a.curve.size(); ++e) {
      all += a.curve[e];
      if (e >= 20) tail += a.curve[e];
    }
    EXPECT_DOUBLE_EQ(a.final_return, tail / 10.0);
    EXPECT_DOUBLE_EQ(a.auc, all);
  }
}

TEST(TabularRl, CheckpointCanStopEarly) {
  auto c = small_config();
  std::vector<int> seen;
  rl::Checkpoint cp;
  cp.every = 7;
  cp.callback = [&](int done, const rl::QTable&, const ht::EnvConfig&) {
    seen.push_back(done);
    return done < 14;
  };
  const auto run = rl::train_seed(c, {}, 0, cp);
  EXPECT_EQ(seen, (std::vector<int>{7, 14}));
  EXPECT_EQ(run.curve.size(), 14u);
}

TEST(TabularRl, SummarizeUsesPopulationStd) {
  std::vector<rl::SeedRun> runs(2);
  runs[0].final_return = 1.0;
  runs[0].auc = 10.0;
  runs[1].final_return = 3.0;
  runs[1].auc = 30.0;
  const auto r = rl::summarize(small_config(), runs);
  EXPECT_DOUBLE_EQ(r.final_return_mean, 2.0);
  EXPECT_DOUBLE_EQ(r.final_return_std, 1.0);
  EXPECT_DOUBLE_EQ(r.auc_mean, 20.0);
  EXPECT_DOUBLE_EQ(r.auc_std, 10.0);
}

TEST(TabularRl, ParallelTrainMatchesReference) {
  for (auto algo : rl::kAllAlgorithms) {
    auto c = small_config(algo);
    const auto serial = rl::reference::train(c, {});
    for (int jobs : {1, 4}) {
      c.jobs = jobs;
      const auto par = rl::train(c, {});
      EXPECT_EQ(par.learning_curve, serial.learning_curve);
      EXPECT_EQ(par.final_return_mean, serial.final_return_mean);
      EXPECT_EQ(par.auc_std, serial.auc_std);
    }
  }
}

TEST(TabularRl, GridSearchOrderAndMeans) {
  auto c = small_config();
  c.seeds = 2;
  c.episodes = 10;
  const std::vector<double> lrs = {0.01, 0.1};
  const std::vector<double> eps = {0.05, 0.15};
  const std::vector<rl::Algorithm> algos = {rl::Algorithm::Sarsa, rl::Algorithm::QLearning};
  const auto g = rl::grid_search(c, algos, lrs, eps, {});
  ASSERT_EQ(g.cells.size(), 8u);
  EXPECT_EQ(g.cells[0].algorithm, rl::Algorithm::Sarsa);
  EXPECT_EQ(g.cells[1].epsilon, 0.15);
  EXPECT_EQ(g.cells[2].learning_rate, 0.1);
  EXPECT_EQ(g.cells[4].algorithm, rl::Algorithm::QLearning);
  double mean = 0.0;
  for (const auto& cell : g.cells) {
    auto single = c;
    single.algorithm = cell.algorithm;
    single.learning_rate = cell.learning_rate;
    single.epsilon = cell.epsilon;
    EXPECT_EQ(cell.result.learning_curve, rl::reference::train(single, {}).learning_curve);
    mean += cell.result.final_return_mean;
  }
  EXPECT_NEAR(g.final_return_mean, mean / 8.0, 1e-12);
}

// Learning should beat a random policy on the evaluation metric.
TEST(TabularRl, QLearningImprovesOverTraining) {
  rl::TrainConfig c;
  c.episodes = 600;
  c.seeds = 3;
  const auto r = rl::train(c, {});
  double early = 0.0, late = 0.0;
  for (const auto& curve : r.learning_curve) {
    for (int e = 0; e < 50; ++e) early += curve[static_cast<std::size_t>(e)];
    for (int e = 550; e < 600; ++e) late += curve[static_cast<std::size_t>(e)];
  }
  EXPECT_GT(late, 2.0 * early);
}

// Independent oracle: in-place Gauss-Seidel over an explicit transition list
// reaches the same fixed point as the library's synchronous sweeps.
TEST(ValueIteration, MatchesGaussSeidelOracle) {
  const auto env = ht::EnvConfig::random_layout(4);
  const ra::RewardParams reward{-0.05, -0.01, 1.0, 0.5};
  const double gamma = 0.95;
  const auto states = ht::enumerate_states(env);

  struct Outcome {
    std::size_t next;
    double prob;
    double r;
  };
  std::vector<std::array<std::vector<Outcome>, ra::kNumActions>> model(states.size());
  for (const auto& s : states) {
    for (std::size_t a = 0; a < ra::kNumActions; ++a) {
      const auto res = ht::resolve_action(s, static_cast<Action>(a), env);
      auto& out = model[ht::state_index(s, env)][a];
      auto add = [&](State n, double p) {
        out.push_back({ht::state_index(n, env), p, ht::reward_of(n, reward)});
      };
      if (res.next.thirsty) {
        add(res.next, 1.0);
      } else {
        State dry = res.next;
        dry.thirsty = true;
        add(dry, env.thirst_prob);
        add(res.next, 1.0 - env.thirst_prob);
      }
    }
  }
  std::vector<double> v(states.size(), 0.0);
  for (int sweep = 0; sweep < 5000; ++sweep) {
    double delta = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
      double best = -1e300;
      for (const auto& outs : model[k]) {
        double q = 0.0;
        for (const auto& o : outs) q += o.prob * (o.r + gamma * v[o.next]);
        best = std::max(best, q);
      }
      delta = std::max(delta, std::abs(best - v[k]));
      v[k] = best;
    }
    if (delta < 1e-13) break;
  }

  const auto vi = rl::value_iteration(env, reward, gamma, 1e-11);
  for (std::size_t k = 0; k < states.size(); ++k) EXPECT_NEAR(vi.values[k], v[k], 1e-8);
  for (std::size_t i = 1; i < vi.residuals.size(); ++i) {
    EXPECT_LE(vi.residuals[i], vi.residuals[i - 1] * gamma + 1e-12);
  }
  // Extracted actions attain the optimal backup.
  for (const auto& s : states) {
    const auto k = ht::state_index(s, env);
    const double q = rl::bellman_backup(env, reward, gamma, vi.values, s, vi.policy[k]);
    EXPECT_NEAR(q, vi.values[k], 1e-8);
  }
}

TEST(ValueIteration, TiesGoToFirstAction) {
  // A zero reward makes every action optimal.
  const auto vi = rl::value_iteration({}, {}, 0.9, 1e-9);
  for (auto a : vi.policy) EXPECT_EQ(a, Action::Up);
  EXPECT_THROW(rl::value_iteration({}, {}, 1.0, 1e-9), ra::InvalidArgument);
  EXPECT_THROW(rl::value_iteration({}, {}, 0.9, 0.0), ra::InvalidArgument);
}

TEST(ValueIteration, PlannerEvaluationIsJobIndependent) {
  const auto a = rl::evaluate_optimal_policy(3, 5, 0.99, 1e-8, 1);
  const auto b = rl::evaluate_optimal_policy(3, 5, 0.99, 1e-8, 3);
  EXPECT_EQ(a.per_seed_mean, b.per_seed_mean);
  EXPECT_EQ(a.mean, b.mean);
  ASSERT_EQ(a.per_seed_mean.size(), 3u);
  for (double m : a.per_seed_mean) EXPECT_GT(m, 40.0);
}
