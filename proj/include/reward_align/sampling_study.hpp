#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "reward_align/hungry_thirsty.hpp"
#include "reward_align/preference.hpp"
#include "reward_align/tabular_rl.hpp"

namespace reward_align::study {

/// Half-open eval-return range [low, high).
struct ReturnRange {
  double low = 0.0;
  double high = std::numeric_limits<double>::infinity();

  bool contains(double v) const noexcept { return v >= low && v < high; }
};

struct BucketSpec {
  std::array<ReturnRange, 3> ranges = {
      ReturnRange{1.0, 30.0}, ReturnRange{30.0, 60.0},
      ReturnRange{60.0, std::numeric_limits<double>::infinity()}};
  int per_bucket = 4;

  /// Throws InvalidArgument unless the ranges are non-empty, disjoint and
  /// ordered, and per_bucket >= 1.
  void validate() const;
  /// Index of the bucket holding `eval_return`, if any.
  std::optional<int> bucket_of(double eval_return) const noexcept;
};

inline constexpr std::array<const char*, 3> kBucketNames = {"low", "medium", "high"};

/// Search budget for the bucket sampler.
struct SamplerOptions {
  int checkpoint_every = 100;
  int rollouts_per_checkpoint = 4;
  int episodes_per_run = 3000;
  /// Independent partially-trained agents tried before giving up.
  int max_runs = 32;
  rl::TrainConfig train{};  // algorithm, lr, epsilon, gamma; reward is forced to the eval metric
  int jobs = 0;
};

struct BucketedTrajectory {
  Trajectory trajectory;
  int bucket = 0;
  int eval_return = 0;
};

struct BucketSample {
  /// Bucket-major: per_bucket entries of bucket 0, then 1, then 2.
  std::vector<BucketedTrajectory> trajectories;
  int runs_used = 0;
  std::int64_t rollouts_examined = 0;
};

/// Q-learning agents train on the eval metric; every checkpoint_every
/// episodes, greedy rollouts are classified by eval return and kept until each
/// bucket holds per_bucket trajectories. Agent r trains with config seed
/// Rng::stream_key(rng_seed, r); buckets are filled in agent order, so the
/// result does not depend on `jobs`. Throws BucketUnsatisfiable when the
/// budget runs out.
BucketSample sample_bucketed_trajectories(const BucketSpec& spec, const ht::EnvConfig& env,
                                          std::uint64_t rng_seed,
                                          const SamplerOptions& options = {});

struct StudyOptions {
  std::vector<int> sizes = {10, 12, 25, 100, 500};
  int repeats = 50;
  std::uint64_t rng_seed = 0;
  double gamma = 0.99;
  /// Tie tolerance on reward-induced returns.
  double tie_tol = kDefaultTieTolerance;
  /// Tie tolerance when correlating two sigma vectors.
  double correlation_tie_tol = 1e-12;
  int jobs = 0;
};

struct SizeSummary {
  int size = 0;
  double mean_correlation = 0.0;
  double std_correlation = 0.0;  // population std over defined repeats
  int defined_repeats = 0;
  int undefined_repeats = 0;
};

struct StudyResult {
  std::vector<SizeSummary> sizes;
  int repeats = 0;
  std::size_t pool_size = 0;
  std::vector<double> full_pool_sigma;  // one per reward
};

/// Draws `size` items from `buckets` (bucket label per pool item), keeping
/// the pool's bucket proportions by largest remainder (ties to the lower
/// bucket). Returned indices are sorted.
std::vector<std::size_t> stratified_subset(const std::vector<int>& buckets, int size, Rng& rng);

/// Sigma of every reward against the eval-return proxy over the pool items
/// in `subset`: all unordered pairs, ties on the proxy at equal eval return.
std::vector<std::optional<double>> subset_sigmas(
    const std::vector<double>& eval_returns,
    const std::vector<std::vector<double>>& reward_returns,
    const std::vector<std::size_t>& subset, double tie_tol);

/// For each size and repeat, the per-reward sigma vector over a stratified
/// subset is Kendall-correlated with the full-pool vector. Repeats whose
/// correlation is undefined are counted and left out of the mean.
/// Throws InsufficientPool when a size exceeds the pool and InvalidArgument
/// for fewer than two rewards.
StudyResult subset_size_study(const std::vector<RewardParams>& rewards,
                              const std::vector<BucketedTrajectory>& pool,
                              const StudyOptions& options = {});

namespace reference {
StudyResult subset_size_study(const std::vector<RewardParams>& rewards,
                              const std::vector<BucketedTrajectory>& pool,
                              const StudyOptions& options = {});
}

}  // namespace reward_align::study
