#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "reward_align/hungry_thirsty.hpp"
#include "reward_align/preference.hpp"
#include "reward_align/rng.hpp"

namespace reward_align::rl {

enum class Algorithm { QLearning, Sarsa, ExpectedSarsa };

inline constexpr std::array<Algorithm, 3> kAllAlgorithms = {
    Algorithm::QLearning, Algorithm::Sarsa, Algorithm::ExpectedSarsa};

std::string_view algorithm_name(Algorithm a) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept;

/// Learning rates and exploration rates searched over by default.
inline constexpr std::array<double, 6> kLearningRateGrid = {1e-4, 1e-3, 1e-2, 5e-4, 5e-3, 5e-2};
inline constexpr std::array<double, 3> kEpsilonGrid = {0.05, 0.10, 0.15};

struct TrainConfig {
  Algorithm algorithm = Algorithm::QLearning;
  int episodes = 10000;
  int seeds = 10;
  double learning_rate = 0.05;
  double epsilon = 0.15;
  double gamma = 0.99;
  RewardParams reward_params = ht::kEvalMetricReward;
  /// Episodes averaged for the final return.
  int final_window = 100;
  double q_init = 0.0;
  /// Seed k trains on EnvConfig::random_layout(env.config_seed + k); when
  /// false every seed keeps the given layout with config_seed + k.
  bool randomize_layout = true;
  bool keep_curves = true;
  int jobs = 0;

  /// Throws InvalidArgument.
  void validate() const;
};

/// Q(s, a) over the 64 x 6 Hungry-Thirsty table.
class QTable {
 public:
  explicit QTable(double init = 0.0) { values_.fill(init); }

  double& at(const State& s, Action a) noexcept {
    return values_[ht::state_index(s) * kNumActions + action_index(a)];
  }
  double at(const State& s, Action a) const noexcept {
    return values_[ht::state_index(s) * kNumActions + action_index(a)];
  }
  std::span<const double, kNumActions> row(const State& s) const noexcept {
    return std::span<const double, kNumActions>(
        values_.data() + ht::state_index(s) * kNumActions, kNumActions);
  }
  double max_value(const State& s) const noexcept;

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::array<double, ht::kNumStates * kNumActions> values_{};
};

/// Uniform choice among the maximizing actions.
Action greedy_action(const QTable& q, const State& s, Rng& rng);
Action epsilon_greedy_action(const QTable& q, const State& s, double epsilon, Rng& rng);

/// sum_a pi(a|s) Q(s,a) for the epsilon-greedy policy with uniform argmax ties.
double epsilon_greedy_expectation(const QTable& q, const State& s, double epsilon) noexcept;

/// One temporal-difference update of Q(s, a).
/// QLearning bootstraps on max_a' Q(s', a'); Sarsa on Q(s', next_action);
/// ExpectedSarsa on the epsilon-greedy expectation at s'.
void td_update(QTable& q, Algorithm algorithm, const Transition& t, double reward,
               Action next_action, double learning_rate, double gamma, double epsilon);

struct SeedRun {
  std::vector<int> curve;  // eval return of each training episode
  double final_return = 0.0;
  double auc = 0.0;
  QTable q;
};

/// Called every `every` episodes with the episode count so far; returning
/// false stops training early.
struct Checkpoint {
  int every = 0;
  std::function<bool(int episodes_done, const QTable& q, const ht::EnvConfig& env)> callback;
};

/// Environment for seed index k as described on TrainConfig::randomize_layout.
ht::EnvConfig seed_environment(const TrainConfig& config, const ht::EnvConfig& env, int seed);

/// One training run; deterministic in (config, env, seed).
SeedRun train_seed(const TrainConfig& config, const ht::EnvConfig& env, int seed,
                   const Checkpoint& checkpoint = {});

struct TrainResult {
  TrainConfig config;
  double final_return_mean = 0.0;
  double final_return_std = 0.0;
  double auc_mean = 0.0;
  double auc_std = 0.0;
  /// learning_curve[seed][episode]; empty when keep_curves is false.
  std::vector<std::vector<int>> learning_curve;
};

/// Aggregates per-seed runs: means and population standard deviations.
TrainResult summarize(const TrainConfig& config, std::vector<SeedRun> runs);

/// Seeds train in parallel; merged by seed index.
TrainResult train(const TrainConfig& config, const ht::EnvConfig& env);

namespace reference {
TrainResult train(const TrainConfig& config, const ht::EnvConfig& env);
}

struct GridCell {
  Algorithm algorithm;
  double learning_rate;
  double epsilon;
  TrainResult result;
};

struct GridSearchResult {
  std::vector<GridCell> cells;  // algorithm-major, then learning rate, then epsilon
  /// Means over every cell.
  double final_return_mean = 0.0;
  double auc_mean = 0.0;
};

/// One TrainResult per (algorithm, learning rate, epsilon). All cells and
/// seeds are flattened into one parallel loop.
GridSearchResult grid_search(const TrainConfig& base, std::span<const Algorithm> algorithms,
                             std::span<const double> lr_grid, std::span<const double> eps_grid,
                             const ht::EnvConfig& env);

struct ValueIterationResult {
  std::array<double, ht::kNumStates> values{};
  ht::PolicyTable policy{};
  int sweeps = 0;
  /// Max |V_{k+1} - V_k| for each sweep.
  std::vector<double> residuals;
};

/// Synchronous Bellman backups with thirst onset expanded analytically, until
/// the max change drops below `tolerance`. Greedy ties go to the first action
/// in Up, Down, Left, Right, Eat, Drink order.
ValueIterationResult value_iteration(const ht::EnvConfig& env, const RewardParams& reward,
                                     double gamma, double tolerance, int max_sweeps = 1000000);

/// Q(s, a) under `values`; used for policy extraction and residual checks.
double bellman_backup(const ht::EnvConfig& env, const RewardParams& reward, double gamma,
                      std::span<const double, ht::kNumStates> values, const State& s, Action a);

struct PlannerEvaluation {
  std::vector<double> per_seed_mean;  // mean eval return per config seed
  double mean = 0.0;
};

/// For config seeds 0..n-1: random layout, value iteration under the
/// evaluation-metric reward, then `episodes` greedy rollouts with random
/// starts. Parallel over config seeds.
PlannerEvaluation evaluate_optimal_policy(int config_seeds, int episodes, double gamma = 0.99,
                                          double tolerance = 1e-8, int jobs = 0);

}  // namespace reward_align::rl
