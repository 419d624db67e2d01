#include "reward_align/tabular_rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reward_align/parallel.hpp"

namespace reward_align::rl {

namespace {

constexpr std::uint64_t kAgentStreamTag = 0x4147454E54ULL;  // "AGENT"

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd population_stats(std::span<const double> xs) {
  if (xs.empty()) return {};
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

// Indices of the maximal entries of a Q row; returns the count.
std::size_t argmax_set(std::span<const double, kNumActions> row,
                       std::array<std::size_t, kNumActions>& out) noexcept {
  const double best = *std::max_element(row.begin(), row.end());
  std::size_t n = 0;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    if (row[a] == best) out[n++] = a;
  }
  return n;
}

}  // namespace

std::string_view algorithm_name(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::QLearning: return "q_learning";
    case Algorithm::Sarsa: return "sarsa";
    case Algorithm::ExpectedSarsa: return "expected_sarsa";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept {
  for (auto a : kAllAlgorithms) {
    if (algorithm_name(a) == name) return a;
  }
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (episodes < 1) throw InvalidArgument("episodes must be >= 1");
  if (seeds < 1) throw InvalidArgument("seeds must be >= 1");
  if (!(learning_rate >= 0.0)) throw InvalidArgument("learning_rate must be >= 0");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("epsilon must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in [0, 1)");
  if (final_window < 1) throw InvalidArgument("final_window must be >= 1");
}

double QTable::max_value(const State& s) const noexcept {
  const auto r = row(s);
  return *std::max_element(r.begin(), r.end());
}

Action greedy_action(const QTable& q, const State& s, Rng& rng) {
  std::array<std::size_t, kNumActions> best{};
  const std::size_t n = argmax_set(q.row(s), best);
  const std::size_t pick = n == 1 ? best[0] : best[rng.below(n)];
  return kAllActions[pick];
}

Action epsilon_greedy_action(const QTable& q, const State& s, double epsilon, Rng& rng) {
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    return kAllActions[rng.below(kNumActions)];
  }
  return greedy_action(q, s, rng);
}

double epsilon_greedy_expectation(const QTable& q, const State& s, double epsilon) noexcept {
  const auto row = q.row(s);
  std::array<std::size_t, kNumActions> best{};
  const std::size_t n = argmax_set(row, best);
  const double explore = epsilon / static_cast<double>(kNumActions);
  double value = 0.0;
  for (std::size_t a = 0; a < kNumActions; ++a) value += explore * row[a];
  const double exploit = (1.0 - epsilon) / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) value += exploit * row[best[k]];
  return value;
}

void td_update(QTable& q, Algorithm algorithm, const Transition& t, double reward,
               Action next_action, double learning_rate, double gamma, double epsilon) {
  double bootstrap = 0.0;
  switch (algorithm) {
    case Algorithm::QLearning: bootstrap = q.max_value(t.next); break;
    case Algorithm::Sarsa: bootstrap = q.at(t.next, next_action); break;
    case Algorithm::ExpectedSarsa:
      bootstrap = epsilon_greedy_expectation(q, t.next, epsilon);
      break;
  }
  double& value = q.at(t.s, t.a);
  value += learning_rate * (reward + gamma * bootstrap - value);
}

ht::EnvConfig seed_environment(const TrainConfig& config, const ht::EnvConfig& env, int seed) {
  const std::uint64_t config_seed = env.config_seed + static_cast<std::uint64_t>(seed);
  if (config.randomize_layout) return ht::EnvConfig::random_layout(config_seed, env);
  ht::EnvConfig copy = env;
  copy.config_seed = config_seed;
  return copy;
}

SeedRun train_seed(const TrainConfig& config, const ht::EnvConfig& env, int seed,
                   const Checkpoint& checkpoint) {
  config.validate();
  const ht::EnvConfig cfg = seed_environment(config, env, seed);
  cfg.validate();
  Rng agent = Rng::stream(cfg.config_seed, kAgentStreamTag);

  SeedRun run;
  run.q = QTable(config.q_init);
  run.curve.reserve(static_cast<std::size_t>(config.episodes));
  QTable& q = run.q;
  const bool on_policy = config.algorithm == Algorithm::Sarsa;

  for (int episode = 0; episode < config.episodes; ++episode) {
    Rng env_rng = ht::episode_stream(cfg.config_seed, static_cast<std::uint64_t>(episode));
    State s = ht::initial_state(cfg, env_rng);
    Action a = epsilon_greedy_action(q, s, config.epsilon, agent);
    int fed = 0;
    for (int t = 0; t < cfg.max_steps; ++t) {
      const auto result = ht::step(s, a, cfg, env_rng);
      if (result.ate) ++fed;
      const double r = ht::reward_of(result.next, config.reward_params);
      const Transition tr{s, a, result.next};
      // Truncation is not termination: every update bootstraps on s'.
      Action next_action = a;
      if (on_policy) {
        next_action = epsilon_greedy_action(q, result.next, config.epsilon, agent);
        td_update(q, config.algorithm, tr, r, next_action, config.learning_rate, config.gamma,
                  config.epsilon);
      } else {
        td_update(q, config.algorithm, tr, r, next_action, config.learning_rate, config.gamma,
                  config.epsilon);
        next_action = epsilon_greedy_action(q, result.next, config.epsilon, agent);
      }
      s = result.next;
      a = next_action;
    }
    run.curve.push_back(fed);
    if (checkpoint.every > 0 && checkpoint.callback && (episode + 1) % checkpoint.every == 0) {
      if (!checkpoint.callback(episode + 1, q, cfg)) break;
    }
  }

  const std::size_t n = run.curve.size();
  const std::size_t window = std::min<std::size_t>(n, static_cast<std::size_t>(config.final_window));
  double tail = 0.0;
  for (std::size_t k = n - window; k < n; ++k) tail += run.curve[k];
  run.final_return = window > 0 ? tail / static_cast<double>(window) : 0.0;
  run.auc = std::accumulate(run.curve.begin(), run.curve.end(), 0.0);
  return run;
}

TrainResult summarize(const TrainConfig& config, std::vector<SeedRun> runs) {
  TrainResult result;
  result.config = config;
  std::vector<double> finals, aucs;
  for (auto& run : runs) {
    finals.push_back(run.final_return);
    aucs.push_back(run.auc);
    if (config.keep_curves) result.learning_curve.push_back(std::move(run.curve));
  }
  const auto f = population_stats(finals);
  const auto a = population_stats(aucs);
  result.final_return_mean = f.mean;
  result.final_return_std = f.std;
  result.auc_mean = a.mean;
  result.auc_std = a.std;
  return result;
}

TrainResult train(const TrainConfig& config, const ht::EnvConfig& env) {
  config.validate();
  std::vector<SeedRun> runs(static_cast<std::size_t>(config.seeds));
  FirstException error;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_jobs(config.jobs))
  for (int seed = 0; seed < config.seeds; ++seed) {
    error.run([&] { runs[static_cast<std::size_t>(seed)] = train_seed(config, env, seed); });
  }
  error.rethrow();
  return summarize(config, std::move(runs));
}

namespace reference {

TrainResult train(const TrainConfig& config, const ht::EnvConfig& env) {
  config.validate();
  std::vector<SeedRun> runs;
  for (int seed = 0; seed < config.seeds; ++seed) runs.push_back(train_seed(config, env, seed));
  return summarize(config, std::move(runs));
}

}  // namespace reference

GridSearchResult grid_search(const TrainConfig& base, std::span<const Algorithm> algorithms,
                             std::span<const double> lr_grid, std::span<const double> eps_grid,
                             const ht::EnvConfig& env) {
  if (algorithms.empty() || lr_grid.empty() || eps_grid.empty()) {
    throw InvalidArgument("grid_search needs non-empty grids");
  }
  base.validate();
  std::vector<TrainConfig> configs;
  for (auto algorithm : algorithms) {
    for (double lr : lr_grid) {
      for (double eps : eps_grid) {
        TrainConfig c = base;
        c.algorithm = algorithm;
        c.learning_rate = lr;
        c.epsilon = eps;
        c.validate();
        configs.push_back(c);
      }
    }
  }
  const auto seeds = static_cast<std::size_t>(base.seeds);
  const auto tasks = static_cast<std::int64_t>(configs.size() * seeds);
  std::vector<SeedRun> runs(static_cast<std::size_t>(tasks));
  FirstException error;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_jobs(base.jobs))
  for (std::int64_t k = 0; k < tasks; ++k) {
    error.run([&] {
      const auto cell = static_cast<std::size_t>(k) / seeds;
      const auto seed = static_cast<int>(static_cast<std::size_t>(k) % seeds);
      runs[static_cast<std::size_t>(k)] = train_seed(configs[cell], env, seed);
    });
  }
  error.rethrow();

  GridSearchResult out;
  for (std::size_t cell = 0; cell < configs.size(); ++cell) {
    std::vector<SeedRun> cell_runs(std::make_move_iterator(runs.begin() + cell * seeds),
                                   std::make_move_iterator(runs.begin() + (cell + 1) * seeds));
    const auto& c = configs[cell];
    out.cells.push_back({c.algorithm, c.learning_rate, c.epsilon, summarize(c, std::move(cell_runs))});
    out.final_return_mean += out.cells.back().result.final_return_mean;
    out.auc_mean += out.cells.back().result.auc_mean;
  }
  out.final_return_mean /= static_cast<double>(out.cells.size());
  out.auc_mean /= static_cast<double>(out.cells.size());
  return out;
}

double bellman_backup(const ht::EnvConfig& env, const RewardParams& reward, double gamma,
                      std::span<const double, ht::kNumStates> values, const State& s, Action a) {
  const auto res = ht::resolve_action(s, a, env);
  auto value_of = [&](const State& next) {
    return ht::reward_of(next, reward) + gamma * values[ht::state_index(next, env)];
  };
  if (res.next.thirsty) return value_of(res.next);
  State parched = res.next;
  parched.thirsty = true;
  return env.thirst_prob * value_of(parched) + (1.0 - env.thirst_prob) * value_of(res.next);
}

ValueIterationResult value_iteration(const ht::EnvConfig& env, const RewardParams& reward,
                                     double gamma, double tolerance, int max_sweeps) {
  if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be > 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in [0, 1)");
  env.validate();
  const auto states = ht::enumerate_states(env);
  ValueIterationResult out;
  std::array<double, ht::kNumStates> next{};
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double residual = 0.0;
    for (const auto& s : states) {
      double best = -INFINITY;
      for (auto a : kAllActions) {
        best = std::max(best, bellman_backup(env, reward, gamma, out.values, s, a));
      }
      const auto k = ht::state_index(s, env);
      residual = std::max(residual, std::abs(best - out.values[k]));
      next[k] = best;
    }
    out.values = next;
    out.residuals.push_back(residual);
    out.sweeps = sweep + 1;
    if (residual < tolerance) break;
  }
  for (const auto& s : states) {
    std::array<double, kNumActions> q{};
    for (std::size_t a = 0; a < kNumActions; ++a) {
      q[a] = bellman_backup(env, reward, gamma, out.values, s, kAllActions[a]);
    }
    const double best = *std::max_element(q.begin(), q.end());
    const double slack = 1e-10 * std::max(1.0, std::abs(best));
    std::size_t pick = 0;
    while (q[pick] < best - slack) ++pick;
    out.policy[ht::state_index(s, env)] = kAllActions[pick];
  }
  return out;
}

PlannerEvaluation evaluate_optimal_policy(int config_seeds, int episodes, double gamma,
                                          double tolerance, int jobs) {
  if (config_seeds < 1 || episodes < 1) {
    throw InvalidArgument("config_seeds and episodes must be >= 1");
  }
  PlannerEvaluation out;
  out.per_seed_mean.assign(static_cast<std::size_t>(config_seeds), 0.0);
  FirstException error;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_jobs(jobs))
  for (int seed = 0; seed < config_seeds; ++seed) {
    error.run([&] {
      const auto env = ht::EnvConfig::random_layout(static_cast<std::uint64_t>(seed));
      const auto plan = value_iteration(env, ht::kEvalMetricReward, gamma, tolerance);
      const auto policy = ht::table_policy(plan.policy, env);
      double total = 0.0;
      for (int e = 0; e < episodes; ++e) {
        total += ht::rollout(policy, env, static_cast<std::uint64_t>(e)).eval_return;
      }
      out.per_seed_mean[static_cast<std::size_t>(seed)] = total / episodes;
    });
  }
  error.rethrow();
  out.mean = std::accumulate(out.per_seed_mean.begin(), out.per_seed_mean.end(), 0.0) /
             static_cast<double>(config_seeds);
  return out;
}

}  // namespace reward_align::rl
