#include "reward_align/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "reward_align/hungry_thirsty.hpp"
#include "reward_align/parallel.hpp"

namespace reward_align {

namespace {

std::vector<State> sorted_unique(std::vector<State> states) {
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());
  return states;
}

struct HarnessSetup {
  std::vector<State> domain;
  std::vector<State> zero_states;
  std::optional<double> base_sigma;
};

HarnessSetup prepare_harness(const PreferenceDataset& human, const DistributionSet& dists,
                             const TrajectoryStore& store, const RewardSpec& base,
                             const InvarianceOptions& options) {
  if (options.trials < 1) throw InvalidArgument("trials must be >= 1");
  std::vector<std::string> referenced;
  std::set<std::string> seen;
  for (const auto& r : human.relations()) {
    for (const auto* id : {&r.i, &r.j}) {
      if (seen.insert(*id).second) referenced.push_back(*id);
    }
  }
  HarnessSetup setup;
  std::vector<State> domain = reward_domain(base);
  for (const auto& id : referenced) {
    const auto& d = dists.get(id);
    if (!same_start_distribution(dists.get(referenced.front()), d)) {
      throw MixedStartDistributions("distributions '" + referenced.front() + "' and '" + id +
                                    "' have different start-state distributions");
    }
    for (const auto& w : d.support()) {
      const auto& traj = store.get(w.trajectory_id);
      domain.push_back(traj.start());
      domain.push_back(traj.final_state());
      if (options.zero_on_final_states) setup.zero_states.push_back(traj.final_state());
    }
  }
  setup.domain = sorted_unique(std::move(domain));
  setup.zero_states = sorted_unique(std::move(setup.zero_states));
  const auto base_data =
      build_reward_dataset(human, dists, store, base, base.id(), options.tie_tol);
  setup.base_sigma = tac(human, base_data).sigma;
  return setup;
}

struct TrialOutcome {
  bool equal = true;
  double abs_diff = 0.0;
};

TrialOutcome run_trial(const PreferenceDataset& human, const DistributionSet& dists,
                       const TrajectoryStore& store, const RewardSpec& base,
                       const InvarianceOptions& options, const HarnessSetup& setup, int trial) {
  auto phi = invariance_trial_potential(setup.domain, setup.zero_states, options, trial);
  const auto shaped = shape_reward(base, std::move(phi), options.mode);
  const auto data = build_reward_dataset(human, dists, store, shaped, base.id(), options.tie_tol);
  const auto sigma = tac(human, data).sigma;
  if (!sigma || !setup.base_sigma) return {sigma.has_value() == setup.base_sigma.has_value(), 0.0};
  const double diff = std::abs(*sigma - *setup.base_sigma);
  return {diff <= options.sigma_tol, diff};
}

InvarianceVerdict merge_outcomes(const std::vector<TrialOutcome>& outcomes,
                                 const InvarianceOptions& options, const HarnessSetup& setup) {
  InvarianceVerdict verdict;
  verdict.trials = options.trials;
  verdict.base_sigma = setup.base_sigma;
  for (int t = 0; t < options.trials; ++t) {
    const auto& o = outcomes[static_cast<std::size_t>(t)];
    verdict.max_abs_diff = std::max(verdict.max_abs_diff, o.abs_diff);
    if (!o.equal && verdict.pass) {
      verdict.pass = false;
      verdict.first_failure_trial = t;
      verdict.first_failure =
          invariance_trial_potential(setup.domain, setup.zero_states, options, t);
    }
  }
  return verdict;
}

}  // namespace

PotentialFn PotentialFn::constant(std::span<const State> states, double value) {
  Map m;
  for (const auto& s : states) m[s] = value;
  return PotentialFn(std::move(m));
}

PotentialFn PotentialFn::random_uniform(std::span<const State> states, double lo, double hi,
                                        Rng& rng) {
  Map m;
  for (const auto& s : states) m[s] = rng.uniform(lo, hi);
  return PotentialFn(std::move(m));
}

double PotentialFn::at(const State& s) const {
  auto it = values_.find(s);
  if (it == values_.end()) throw MissingPotential("no potential for " + to_string(s));
  return it->second;
}

std::vector<std::pair<State, double>> PotentialFn::entries() const {
  std::vector<std::pair<State, double>> out(values_.begin(), values_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::string_view horizon_mode_name(HorizonMode mode) noexcept {
  return mode == HorizonMode::LiteralFinite ? "literal_finite" : "infinite_horizon_exact";
}

std::optional<HorizonMode> parse_horizon_mode(std::string_view name) noexcept {
  if (name == "literal_finite") return HorizonMode::LiteralFinite;
  if (name == "infinite_horizon_exact") return HorizonMode::InfiniteHorizonExact;
  return std::nullopt;
}

std::vector<State> reward_domain(const RewardSpec& reward) {
  if (reward.kind() == RewardKind::HungryThirstyParams) return ht::enumerate_states();
  std::vector<State> states;
  states.reserve(reward.table().size() * 2);
  for (const auto& [t, value] : reward.table()) {
    states.push_back(t.s);
    states.push_back(t.next);
  }
  return sorted_unique(std::move(states));
}

ShapedRewardSpec::ShapedRewardSpec(RewardSpec base, PotentialFn phi, HorizonMode mode)
    : base_(std::move(base)), phi_(std::move(phi)), mode_(mode) {}

double ShapedRewardSpec::reward(const Transition& t) const {
  return base_.reward(t) + base_.gamma() * phi_.at(t.next) - phi_.at(t.s);
}

ShapedRewardSpec shape_reward(const RewardSpec& base, PotentialFn phi, HorizonMode mode) {
  for (const auto& s : reward_domain(base)) {
    if (!phi.contains(s)) {
      throw MissingPotential("potential does not cover " + to_string(s));
    }
  }
  return {base, std::move(phi), mode};
}

double shaped_return(const Trajectory& trajectory, const ShapedRewardSpec& shaped) {
  if (shaped.horizon_mode() == HorizonMode::InfiniteHorizonExact) {
    return compute_return(trajectory, shaped.base()) - shaped.phi().at(trajectory.start());
  }
  const double gamma = shaped.gamma();
  double discount = 1.0;
  double total = 0.0;
  for (const auto& t : trajectory.steps()) {
    total += discount * shaped.reward(t);
    discount *= gamma;
  }
  return total;
}

RewardSpec linear_transform(const RewardSpec& base, double alpha, double beta) {
  if (!(alpha > 0.0)) {
    throw NonpositiveAlpha("alpha must be > 0, got " + std::to_string(alpha));
  }
  if (base.kind() == RewardKind::HungryThirstyParams) {
    const auto& p = base.params();
    return RewardSpec::hungry_thirsty({alpha * p.hungry_thirsty + beta,
                                       alpha * p.hungry_quenched + beta,
                                       alpha * p.fed_thirsty + beta,
                                       alpha * p.fed_quenched + beta},
                                      base.gamma(), base.id());
  }
  RewardSpec::Table table;
  table.reserve(base.table().size());
  for (const auto& [t, value] : base.table()) table.emplace(t, alpha * value + beta);
  return RewardSpec::tabular(std::move(table), base.gamma(), base.id());
}

double default_counterexample_epsilon(double delta_g) noexcept {
  return std::max(1.0, std::abs(delta_g) * 0.1);
}

CounterexampleConstruction build_necessity_counterexample(
    const TrajectoryDistribution& eta_i, const TrajectoryDistribution& eta_j,
    const TrajectoryStore& store, const RewardSpec& base, std::optional<double> epsilon,
    std::span<const State> domain) {
  if (same_start_distribution(eta_i, eta_j)) {
    throw IdenticalStartDistributions("'" + eta_i.id() + "' and '" + eta_j.id() +
                                      "' share their start-state distribution");
  }
  const double ei = expected_return(eta_i, store, base);
  const double ej = expected_return(eta_j, store, base);
  const bool swapped = ei < ej;
  const auto& hi = swapped ? eta_j : eta_i;
  const auto& lo = swapped ? eta_i : eta_j;

  CounterexampleConstruction c;
  c.i_id = hi.id();
  c.j_id = lo.id();
  c.swapped = swapped;
  c.delta_g = swapped ? ej - ei : ei - ej;
  c.epsilon = epsilon.value_or(default_counterexample_epsilon(c.delta_g));
  if (!(c.epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");

  std::vector<State> support_states;
  for (const auto& m : hi.mu()) support_states.push_back(m.state);
  for (const auto& m : lo.mu()) support_states.push_back(m.state);
  support_states = sorted_unique(std::move(support_states));

  for (const auto& s : support_states) {
    const double gap = hi.start_probability(s) - lo.start_probability(s);
    if (gap > kProbabilityTolerance) {
      c.s_gt.push_back(s);
      c.mass_gap += gap;
    }
  }
  if (!(c.mass_gap > 0.0)) {
    throw IdenticalStartDistributions("no state is more probable under '" + hi.id() + "'");
  }

  std::vector<State> full(domain.begin(), domain.end());
  if (full.empty()) full = reward_domain(base);
  full.insert(full.end(), support_states.begin(), support_states.end());
  c.phi = PotentialFn::constant(sorted_unique(std::move(full)), 0.0);
  const double level = (c.delta_g + c.epsilon) / c.mass_gap;
  for (const auto& s : c.s_gt) c.phi.set(s, level);

  for (const auto& s : support_states) {
    c.delta_phi += (hi.start_probability(s) - lo.start_probability(s)) * c.phi.at(s);
  }
  return c;
}

PotentialFn invariance_trial_potential(std::span<const State> domain,
                                       std::span<const State> zero_states,
                                       const InvarianceOptions& options, int trial) {
  Rng rng = Rng::stream(options.seed, static_cast<std::uint64_t>(trial));
  auto phi = PotentialFn::random_uniform(domain, options.phi_low, options.phi_high, rng);
  for (const auto& s : zero_states) phi.set(s, 0.0);
  return phi;
}

InvarianceVerdict verify_shaping_invariance(const PreferenceDataset& human,
                                            const DistributionSet& dists,
                                            const TrajectoryStore& store,
                                            const RewardSpec& base,
                                            const InvarianceOptions& options) {
  const auto setup = prepare_harness(human, dists, store, base, options);
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(options.trials));
  FirstException error;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_jobs(options.jobs))
  for (int t = 0; t < options.trials; ++t) {
    error.run([&] {
      outcomes[static_cast<std::size_t>(t)] =
          run_trial(human, dists, store, base, options, setup, t);
    });
  }
  error.rethrow();
  return merge_outcomes(outcomes, options, setup);
}

namespace reference {

InvarianceVerdict verify_shaping_invariance(const PreferenceDataset& human,
                                            const DistributionSet& dists,
                                            const TrajectoryStore& store,
                                            const RewardSpec& base,
                                            const InvarianceOptions& options) {
  const auto setup = prepare_harness(human, dists, store, base, options);
  std::vector<TrialOutcome> outcomes;
  outcomes.reserve(static_cast<std::size_t>(options.trials));
  for (int t = 0; t < options.trials; ++t) {
    outcomes.push_back(run_trial(human, dists, store, base, options, setup, t));
  }
  return merge_outcomes(outcomes, options, setup);
}

}  // namespace reference

}  // namespace reward_align
