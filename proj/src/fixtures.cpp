#include "reward_align/fixtures.hpp"

#include <algorithm>

namespace reward_align::fixtures {

ToyDriving toy_driving() {
  // Opaque states: one shared start and one terminal state per outcome.
  const State start{0, 0, false, false};
  const State arrived{1, 0, false, false};
  const State parked{0, 0, true, false};
  const State crashed{2, 0, false, true};
  const Transition success{start, Action::Up, arrived};
  const Transition idle{start, Action::Eat, parked};
  const Transition crash{start, Action::Right, crashed};

  TrajectoryStore store;
  store.add(Trajectory("success", "toy-driving", {success}));
  store.add(Trajectory("idle", "toy-driving", {idle}));
  store.add(Trajectory("crash", "toy-driving", {crash}));

  DistributionSet dists;
  for (const char* id : {"success", "idle", "crash"}) {
    dists.add(TrajectoryDistribution::point_mass(store.get(id)));
  }
  dists.add(TrajectoryDistribution::mixture("success-crash", dists.get("success"),
                                            dists.get("crash"), 0.9, store));

  RewardSpec::Table table{{success, 10.0}, {idle, 0.0}, {crash, -50.0}};
  auto reward = RewardSpec::tabular(std::move(table), 0.99, "toy-driving");

  const std::vector<std::string> ranked = {"success", "idle", "success-crash", "crash"};
  std::vector<PairRelation> relations;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    for (std::size_t j = i + 1; j < ranked.size(); ++j) {
      relations.push_back({ranked[i], ranked[j], Relation::Succ});
    }
  }
  return {std::move(store), std::move(dists), std::move(reward),
          PreferenceDataset::human(std::move(relations))};
}

Trajectory random_walk_from(Rng& rng, std::string id, int length, const State& start,
                            const ht::EnvConfig& env) {
  if (length < 1) throw InvalidArgument("length must be >= 1");
  std::vector<Transition> steps;
  steps.reserve(static_cast<std::size_t>(length));
  State s = start;
  for (int t = 0; t < length; ++t) {
    const Action a = kAllActions[rng.below(kNumActions)];
    const auto next = ht::step(s, a, env, rng).next;
    steps.push_back({s, a, next});
    s = next;
  }
  return Trajectory(std::move(id), env.id(), std::move(steps));
}

Trajectory random_walk(Rng& rng, std::string id, int length, const ht::EnvConfig& env) {
  const auto states = ht::enumerate_states(env);
  const State start = states[rng.below(states.size())];
  return random_walk_from(rng, std::move(id), length, start, env);
}

RewardParams random_params(Rng& rng) {
  return {rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0),
          rng.uniform(-10.0, 10.0)};
}

TrajectoryDistribution random_distribution(Rng& rng, std::string id,
                                           const std::vector<std::string>& ids,
                                           const TrajectoryStore& store, int max_support) {
  if (ids.empty() || max_support < 1) throw InvalidArgument("nothing to draw from");
  std::vector<std::string> pool = ids;
  rng.shuffle(std::span<std::string>(pool));
  const auto cap = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(max_support));
  const auto n = 1 + static_cast<std::size_t>(rng.below(cap));
  std::vector<WeightedTrajectory> support;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 0.05 + rng.uniform();
    support.push_back({pool[k], w});
    total += w;
  }
  for (auto& w : support) w.probability /= total;
  return TrajectoryDistribution::with_derived_mu(std::move(id), std::move(support), store);
}

}  // namespace reward_align::fixtures
