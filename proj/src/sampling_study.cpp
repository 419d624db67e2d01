#include "reward_align/sampling_study.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reward_align/parallel.hpp"
#include "reward_align/tac.hpp"

namespace reward_align::study {

namespace {

struct Candidate {
  Trajectory trajectory;
  int bucket;
  int eval_return;
};

// Every greedy checkpoint rollout of one agent that lands in some bucket.
std::vector<Candidate> agent_candidates(const BucketSpec& spec, const ht::EnvConfig& env,
                                        std::uint64_t rng_seed, int run,
                                        const SamplerOptions& options) {
  rl::TrainConfig cfg = options.train;
  cfg.algorithm = rl::Algorithm::QLearning;
  cfg.reward_params = ht::kEvalMetricReward;
  cfg.episodes = options.episodes_per_run;
  cfg.seeds = 1;
  cfg.randomize_layout = false;
  cfg.keep_curves = false;

  ht::EnvConfig base = env;
  base.config_seed = Rng::stream_key(rng_seed, static_cast<std::uint64_t>(run));

  std::vector<Candidate> out;
  rl::Checkpoint checkpoint;
  checkpoint.every = options.checkpoint_every;
  checkpoint.callback = [&](int done, const rl::QTable& q, const ht::EnvConfig& agent_env) {
    const ht::Policy greedy = [&q](const State& s, Rng& rng) { return rl::greedy_action(q, s, rng); };
    for (int k = 0; k < options.rollouts_per_checkpoint; ++k) {
      // Rollout seeds sit above the training episode range.
      const auto episode_seed = static_cast<std::uint64_t>(cfg.episodes) +
                                static_cast<std::uint64_t>(done) * 1000u + static_cast<std::uint64_t>(k);
      auto ro = ht::rollout(greedy, agent_env, episode_seed,
                            "run" + std::to_string(run) + "-ep" + std::to_string(done) + "-r" +
                                std::to_string(k));
      if (auto b = spec.bucket_of(ro.eval_return)) {
        out.push_back({std::move(ro.trajectory), *b, ro.eval_return});
      }
    }
    return true;
  };
  rl::train_seed(cfg, base, 0, checkpoint);
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd summarize_correlations(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  const double n = static_cast<double>(xs.size());
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / n);
  return out;
}

struct Prepared {
  std::vector<double> eval_returns;
  std::vector<std::vector<double>> reward_returns;  // [reward][item]
  std::vector<int> buckets;
  std::vector<double> full_sigma;
};

Prepared prepare_study(const std::vector<RewardParams>& rewards,
                       const std::vector<BucketedTrajectory>& pool, const StudyOptions& options) {
  if (rewards.size() < 2) throw InvalidArgument("the study needs at least two rewards");
  if (options.repeats < 1) throw InvalidArgument("repeats must be >= 1");
  if (options.sizes.empty()) throw InvalidArgument("no subset sizes given");
  for (int size : options.sizes) {
    if (size < 2) throw InvalidArgument("subset sizes must be >= 2");
    if (static_cast<std::size_t>(size) > pool.size()) {
      throw InsufficientPool("subset size " + std::to_string(size) + " exceeds pool of " +
                             std::to_string(pool.size()));
    }
  }
  Prepared p;
  for (const auto& item : pool) {
    p.eval_returns.push_back(static_cast<double>(ht::eval_return(item.trajectory)));
    p.buckets.push_back(item.bucket);
  }
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    const auto spec = RewardSpec::hungry_thirsty(rewards[k], options.gamma);
    std::vector<double> returns;
    returns.reserve(pool.size());
    for (const auto& item : pool) returns.push_back(compute_return(item.trajectory, spec));
    p.reward_returns.push_back(std::move(returns));
  }
  std::vector<std::size_t> all(pool.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (const auto& s : subset_sigmas(p.eval_returns, p.reward_returns, all, options.tie_tol)) {
    if (!s) throw InvalidData("sigma is undefined over the full pool");
    p.full_sigma.push_back(*s);
  }
  return p;
}

std::optional<double> repeat_correlation(const Prepared& p, const StudyOptions& options,
                                         std::size_t size_index, int repeat) {
  Rng rng = Rng::stream(options.rng_seed, size_index).fork(static_cast<std::uint64_t>(repeat));
  const auto subset = stratified_subset(p.buckets, options.sizes[size_index], rng);
  const auto sigmas = subset_sigmas(p.eval_returns, p.reward_returns, subset, options.tie_tol);
  std::vector<double> a, b;
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    // A reward whose subset sigma is undefined has no rank; drop it from both vectors.
    if (!sigmas[k]) continue;
    a.push_back(*sigmas[k]);
    b.push_back(p.full_sigma[k]);
  }
  if (a.size() < 2) return std::nullopt;
  return kendall_tau_b(a, b, options.correlation_tie_tol, 1);
}

StudyResult assemble(const Prepared& p, const StudyOptions& options, std::size_t pool_size,
                     const std::vector<std::optional<double>>& results) {
  StudyResult out;
  out.repeats = options.repeats;
  out.pool_size = pool_size;
  out.full_pool_sigma = p.full_sigma;
  const auto repeats = static_cast<std::size_t>(options.repeats);
  for (std::size_t si = 0; si < options.sizes.size(); ++si) {
    std::vector<double> defined;
    SizeSummary summary;
    summary.size = options.sizes[si];
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto& c = results[si * repeats + r];
      if (c) {
        defined.push_back(*c);
      } else {
        ++summary.undefined_repeats;
      }
    }
    const auto stats = summarize_correlations(defined);
    summary.mean_correlation = stats.mean;
    summary.std_correlation = stats.std;
    summary.defined_repeats = static_cast<int>(defined.size());
    out.sizes.push_back(summary);
  }
  return out;
}

}  // namespace

void BucketSpec::validate() const {
  if (per_bucket < 1) throw InvalidArgument("per_bucket must be >= 1");
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    if (!(ranges[k].low < ranges[k].high)) throw InvalidArgument("empty bucket range");
    if (k > 0 && ranges[k].low < ranges[k - 1].high) {
      throw InvalidArgument("bucket ranges must be disjoint and ordered");
    }
  }
}

std::optional<int> BucketSpec::bucket_of(double eval_return) const noexcept {
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    if (ranges[k].contains(eval_return)) return static_cast<int>(k);
  }
  return std::nullopt;
}

BucketSample sample_bucketed_trajectories(const BucketSpec& spec, const ht::EnvConfig& env,
                                          std::uint64_t rng_seed, const SamplerOptions& options) {
  spec.validate();
  env.validate();
  if (options.checkpoint_every < 1 || options.rollouts_per_checkpoint < 1 ||
      options.episodes_per_run < 1 || options.max_runs < 1) {
    throw InvalidArgument("sampler budget entries must be >= 1");
  }
  const auto need = static_cast<std::size_t>(spec.per_bucket);
  std::array<std::vector<BucketedTrajectory>, 3> filled;
  auto complete = [&] {
    return std::all_of(filled.begin(), filled.end(), [&](const auto& b) { return b.size() >= need; });
  };

  BucketSample out;
  const int batch = std::max(1, resolve_jobs(options.jobs));
  for (int first = 0; first < options.max_runs && !complete(); first += batch) {
    const int count = std::min(batch, options.max_runs - first);
    std::vector<std::vector<Candidate>> found(static_cast<std::size_t>(count));
    FirstException error;
#pragma omp parallel for schedule(dynamic) num_threads(batch)
    for (int k = 0; k < count; ++k) {
      error.run([&] {
        found[static_cast<std::size_t>(k)] = agent_candidates(spec, env, rng_seed, first + k, options);
      });
    }
    error.rethrow();
    for (auto& candidates : found) {
      if (complete()) break;
      ++out.runs_used;
      for (auto& c : candidates) {
        ++out.rollouts_examined;
        auto& bucket = filled[static_cast<std::size_t>(c.bucket)];
        if (bucket.size() < need) bucket.push_back({std::move(c.trajectory), c.bucket, c.eval_return});
      }
    }
  }
  for (std::size_t b = 0; b < filled.size(); ++b) {
    if (filled[b].size() < need) {
      throw BucketUnsatisfiable(std::string("bucket '") + kBucketNames[b] + "' holds " +
                                std::to_string(filled[b].size()) + " of " + std::to_string(need) +
                                " trajectories after " + std::to_string(options.max_runs) +
                                " agents x " + std::to_string(options.episodes_per_run) +
                                " episodes");
    }
  }
  for (auto& bucket : filled) {
    for (auto& t : bucket) out.trajectories.push_back(std::move(t));
  }
  return out;
}

std::vector<std::size_t> stratified_subset(const std::vector<int>& buckets, int size, Rng& rng) {
  if (size < 0 || static_cast<std::size_t>(size) > buckets.size()) {
    throw InsufficientPool("subset size " + std::to_string(size) + " exceeds pool of " +
                           std::to_string(buckets.size()));
  }
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    const auto b = static_cast<std::size_t>(buckets[i]);
    if (b >= members.size()) members.resize(b + 1);
    members[b].push_back(i);
  }
  const double n = static_cast<double>(buckets.size());
  std::vector<std::size_t> quota(members.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < members.size(); ++b) {
    const double exact = static_cast<double>(size) * static_cast<double>(members[b].size()) / n;
    quota[b] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[b];
    remainders.emplace_back(exact - static_cast<double>(quota[b]), b);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t k = 0; assigned < static_cast<std::size_t>(size); ++k) {
    ++quota[remainders[k].second];
    ++assigned;
  }
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < members.size(); ++b) {
    auto& m = members[b];
    // Partial Fisher-Yates: the first quota[b] slots become the draw.
    for (std::size_t k = 0; k < quota[b]; ++k) {
      const auto j = k + static_cast<std::size_t>(rng.below(m.size() - k));
      std::swap(m[k], m[j]);
      out.push_back(m[k]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::optional<double>> subset_sigmas(
    const std::vector<double>& eval_returns,
    const std::vector<std::vector<double>>& reward_returns,
    const std::vector<std::size_t>& subset, double tie_tol) {
  std::vector<double> proxy;
  proxy.reserve(subset.size());
  for (auto i : subset) proxy.push_back(eval_returns[i]);
  std::vector<std::optional<double>> out;
  std::vector<double> scores(subset.size());
  for (const auto& returns : reward_returns) {
    for (std::size_t k = 0; k < subset.size(); ++k) scores[k] = returns[subset[k]];
    out.push_back(tau_b(count_score_pairs(proxy, scores, 0.0, tie_tol, 1)));
  }
  return out;
}

StudyResult subset_size_study(const std::vector<RewardParams>& rewards,
                              const std::vector<BucketedTrajectory>& pool,
                              const StudyOptions& options) {
  const auto p = prepare_study(rewards, pool, options);
  const auto repeats = static_cast<std::size_t>(options.repeats);
  const auto tasks = static_cast<std::int64_t>(options.sizes.size() * repeats);
  std::vector<std::optional<double>> results(static_cast<std::size_t>(tasks));
  FirstException error;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_jobs(options.jobs))
  for (std::int64_t t = 0; t < tasks; ++t) {
    error.run([&] {
      const auto k = static_cast<std::size_t>(t);
      results[k] = repeat_correlation(p, options, k / repeats, static_cast<int>(k % repeats));
    });
  }
  error.rethrow();
  return assemble(p, options, pool.size(), results);
}

namespace reference {

StudyResult subset_size_study(const std::vector<RewardParams>& rewards,
                              const std::vector<BucketedTrajectory>& pool,
                              const StudyOptions& options) {
  const auto p = prepare_study(rewards, pool, options);
  std::vector<std::optional<double>> results;
  for (std::size_t si = 0; si < options.sizes.size(); ++si) {
    for (int r = 0; r < options.repeats; ++r) results.push_back(repeat_correlation(p, options, si, r));
  }
  return assemble(p, options, pool.size(), results);
}

}  // namespace reference

}  // namespace reward_align::study
