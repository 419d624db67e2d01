#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reward_align/hungry_thirsty.hpp"
#include "reward_align/preference.hpp"
#include "reward_align/rng.hpp"

namespace reward_align::fixtures {

/// The four-item driving example: success, idle and crash trajectories plus a
/// 90/10 success/crash mixture. Returns are 10, 0, -50 and 4; the human ranks
/// success > idle > success-crash > crash.
struct ToyDriving {
  TrajectoryStore store;
  DistributionSet dists;
  RewardSpec reward;
  PreferenceDataset human;
};

ToyDriving toy_driving();

/// Uniform-random-action rollout of `length` steps on the grid, with the
/// start drawn uniformly over all 64 states unless `start` is given.
Trajectory random_walk(Rng& rng, std::string id, int length, const ht::EnvConfig& env = {});
Trajectory random_walk_from(Rng& rng, std::string id, int length, const State& start,
                            const ht::EnvConfig& env = {});

/// Random parameter vector with entries uniform in [-10, 10).
RewardParams random_params(Rng& rng);

/// Random finite-support distribution over `ids` (1..max_support entries,
/// Dirichlet-like weights from uniform draws, normalized).
TrajectoryDistribution random_distribution(Rng& rng, std::string id,
                                           const std::vector<std::string>& ids,
                                           const TrajectoryStore& store, int max_support = 3);

}  // namespace reward_align::fixtures
