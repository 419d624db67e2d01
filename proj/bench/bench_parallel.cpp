// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "reward_align/fixtures.hpp"
#include "reward_align/reward_catalog.hpp"
#include "reward_align/sampling_study.hpp"
#include "reward_align/shaping.hpp"
#include "reward_align/tabular_rl.hpp"
#include "reward_align/tac.hpp"

namespace ra = reward_align;
namespace ht = reward_align::ht;
namespace rl = reward_align::rl;
namespace st = reward_align::study;

namespace {

std::vector<double> scores(std::uint64_t seed, std::size_t n) {
  ra::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng.below(200));
  return v;
}

void BM_CountScorePairs_Serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = scores(1, n), b = scores(2, n);
  for (auto _ : state) benchmark::DoNotOptimize(ra::reference::count_score_pairs(a, b, 0, 0));
}

void BM_CountScorePairs_Parallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = scores(1, n), b = scores(2, n);
  for (auto _ : state) benchmark::DoNotOptimize(ra::count_score_pairs(a, b, 0, 0));
}

struct InvarianceInput {
  ra::TrajectoryStore store;
  ra::DistributionSet dists;
  ra::PreferenceDataset human;
  ra::RewardSpec base = ra::RewardSpec::hungry_thirsty(ht::kEvalMetricReward, 0.99);
};

const InvarianceInput& invariance_input() {
  static const InvarianceInput input = [] {
    InvarianceInput in;
    ra::Rng rng(3);
    std::vector<std::string> ids;
    std::vector<double> evals;
    for (int k = 0; k < 40; ++k) {
      auto t = ra::fixtures::random_walk_from(rng, "w" + std::to_string(k), 200, {0, 0, true, false});
      ids.push_back(t.id());
      evals.push_back(ht::eval_return(t));
      in.dists.add(ra::TrajectoryDistribution::point_mass(t));
      in.store.add(std::move(t));
    }
    in.human = ra::PreferenceDataset::human(ra::full_ranking_relations(ids, evals, 0.0));
    return in;
  }();
  return input;
}

void BM_Invariance_Serial(benchmark::State& state) {
  const auto& in = invariance_input();
  ra::InvarianceOptions opt;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ra::reference::verify_shaping_invariance(in.human, in.dists, in.store, in.base, opt));
  }
}

void BM_Invariance_Parallel(benchmark::State& state) {
  const auto& in = invariance_input();
  ra::InvarianceOptions opt;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ra::verify_shaping_invariance(in.human, in.dists, in.store, in.base, opt));
  }
}

rl::TrainConfig train_config() {
  rl::TrainConfig c;
  c.episodes = 300;
  c.seeds = 8;
  c.keep_curves = false;
  return c;
}

void BM_Train_Serial(benchmark::State& state) {
  const auto c = train_config();
  for (auto _ : state) benchmark::DoNotOptimize(rl::reference::train(c, {}));
}

void BM_Train_Parallel(benchmark::State& state) {
  const auto c = train_config();
  for (auto _ : state) benchmark::DoNotOptimize(rl::train(c, {}));
}

const std::vector<st::BucketedTrajectory>& study_pool() {
  static const auto pool = [] {
    st::BucketSpec spec;
    spec.per_bucket = 40;
    st::SamplerOptions opt;
    opt.max_runs = 128;
    return st::sample_bucketed_trajectories(spec, ht::EnvConfig::fixed_start_study(), 0, opt).trajectories;
  }();
  return pool;
}

st::StudyOptions study_options() {
  st::StudyOptions opt;
  opt.sizes = {10, 25, 100};
  opt.repeats = 20;
  return opt;
}

void BM_SubsetStudy_Serial(benchmark::State& state) {
  const auto& pool = study_pool();
  const auto rewards = ra::distinct_comparison_rewards();
  for (auto _ : state) {
    benchmark::DoNotOptimize(st::reference::subset_size_study(rewards, pool, study_options()));
  }
}

void BM_SubsetStudy_Parallel(benchmark::State& state) {
  const auto& pool = study_pool();
  const auto rewards = ra::distinct_comparison_rewards();
  for (auto _ : state) benchmark::DoNotOptimize(st::subset_size_study(rewards, pool, study_options()));
}

}  // namespace

BENCHMARK(BM_CountScorePairs_Serial)->Arg(1000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountScorePairs_Parallel)->Arg(1000)->Arg(8000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Invariance_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Invariance_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Train_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Train_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SubsetStudy_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SubsetStudy_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
