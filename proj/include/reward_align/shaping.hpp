#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reward_align/preference.hpp"
#include "reward_align/rng.hpp"
#include "reward_align/tac.hpp"

namespace reward_align {

/// State potential Phi: S -> R. Lookups of absent states raise MissingPotential.
class PotentialFn {
 public:
  using Map = std::unordered_map<State, double, StateHash>;

  PotentialFn() = default;
  explicit PotentialFn(Map values) : values_(std::move(values)) {}

  static PotentialFn constant(std::span<const State> states, double value);
  /// i.i.d. uniform [lo, hi) per state, drawn in the order of `states`.
  static PotentialFn random_uniform(std::span<const State> states, double lo, double hi,
                                    Rng& rng);

  double at(const State& s) const;
  bool contains(const State& s) const noexcept { return values_.contains(s); }
  void set(const State& s, double value) { values_[s] = value; }
  std::size_t size() const noexcept { return values_.size(); }
  /// Sorted by state.
  std::vector<std::pair<State, double>> entries() const;

 private:
  Map values_;
};

enum class HorizonMode {
  /// Sum of the shaped per-step rewards over the stored steps.
  LiteralFinite,
  /// Infinite-horizon value: G_r(tau) - Phi(s_0) (the gamma^T Phi(s_T) term
  /// vanishes as T grows).
  InfiniteHorizonExact,
};

std::string_view horizon_mode_name(HorizonMode mode) noexcept;
std::optional<HorizonMode> parse_horizon_mode(std::string_view name) noexcept;

/// States a reward is defined over: the full grid for parameterized rewards,
/// every state named in the table otherwise.
std::vector<State> reward_domain(const RewardSpec& reward);

/// r'(s,a,s') = r(s,a,s') + gamma Phi(s') - Phi(s), with gamma from the base.
class ShapedRewardSpec {
 public:
  ShapedRewardSpec(RewardSpec base, PotentialFn phi, HorizonMode mode);

  const RewardSpec& base() const noexcept { return base_; }
  const PotentialFn& phi() const noexcept { return phi_; }
  HorizonMode horizon_mode() const noexcept { return mode_; }
  double gamma() const noexcept { return base_.gamma(); }
  const std::string& id() const noexcept { return base_.id(); }

  /// Per-transition shaped reward.
  double reward(const Transition& t) const;

 private:
  RewardSpec base_;
  PotentialFn phi_;
  HorizonMode mode_;
};

/// Throws MissingPotential if `phi` misses a state of reward_domain(base).
ShapedRewardSpec shape_reward(const RewardSpec& base, PotentialFn phi,
                              HorizonMode mode = HorizonMode::InfiniteHorizonExact);

/// LiteralFinite: sum gamma^t r'_t. InfiniteHorizonExact: G_r - Phi(s_0).
double shaped_return(const Trajectory& trajectory, const ShapedRewardSpec& shaped);

inline double trajectory_return(const Trajectory& trajectory, const ShapedRewardSpec& shaped) {
  return shaped_return(trajectory, shaped);
}

/// r' = alpha r + beta. Throws NonpositiveAlpha unless alpha > 0.
RewardSpec linear_transform(const RewardSpec& base, double alpha, double beta);

struct CounterexampleConstruction {
  std::string i_id;  // the (weakly) preferred distribution after orientation
  std::string j_id;
  bool swapped = false;
  std::vector<State> s_gt;  // states where mu_i exceeds mu_j
  double mass_gap = 0.0;    // sum over s_gt of mu_i - mu_j
  double delta_g = 0.0;     // E_i - E_j under the base reward, >= 0
  double epsilon = 0.0;
  double delta_phi = 0.0;   // E_{mu_i}[Phi] - E_{mu_j}[Phi]
  PotentialFn phi;
};

/// Default epsilon: max(1, 0.1 |delta_g|).
double default_counterexample_epsilon(double delta_g) noexcept;

/// Potential that flips a weak preference between distributions with
/// different start-state distributions: Phi = (delta_g + eps) / mass_gap on
/// s_gt and 0 on the rest of `domain` (reward_domain(base) plus every start
/// state when empty). Roles are swapped internally when E_i < E_j.
/// Throws IdenticalStartDistributions when mu_i == mu_j.
CounterexampleConstruction build_necessity_counterexample(
    const TrajectoryDistribution& eta_i, const TrajectoryDistribution& eta_j,
    const TrajectoryStore& store, const RewardSpec& base,
    std::optional<double> epsilon = std::nullopt, std::span<const State> domain = {});

struct InvarianceOptions {
  int trials = 100;
  std::uint64_t seed = 0;
  HorizonMode mode = HorizonMode::InfiniteHorizonExact;
  /// Force Phi = 0 on every final state of the compared trajectories.
  bool zero_on_final_states = false;
  double phi_low = -10.0;
  double phi_high = 10.0;
  double tie_tol = kDefaultTieTolerance;
  double sigma_tol = 1e-12;
  int jobs = 0;
};

struct InvarianceVerdict {
  bool pass = true;
  int trials = 0;
  std::optional<double> base_sigma;
  /// Largest |sigma_shaped - sigma_base| over trials with defined sigmas.
  double max_abs_diff = 0.0;
  std::optional<int> first_failure_trial;
  std::optional<PotentialFn> first_failure;
};

/// Random potential for trial `trial`: Rng::stream(seed, trial) drawn over
/// `domain` in order, then zeroed on `zero_states`.
PotentialFn invariance_trial_potential(std::span<const State> domain,
                                       std::span<const State> zero_states,
                                       const InvarianceOptions& options, int trial);

/// Runs `options.trials` random potentials and compares TAC(human, base) with
/// TAC(human, shaped base). Trials fan out over OpenMP; the verdict is merged
/// by trial index. Throws MixedStartDistributions if the distributions named
/// by `human` do not share one start-state distribution.
InvarianceVerdict verify_shaping_invariance(const PreferenceDataset& human,
                                            const DistributionSet& dists,
                                            const TrajectoryStore& store,
                                            const RewardSpec& base,
                                            const InvarianceOptions& options = {});

namespace reference {
/// Sequential harness with the same contract, kept as the parallel oracle.
InvarianceVerdict verify_shaping_invariance(const PreferenceDataset& human,
                                            const DistributionSet& dists,
                                            const TrajectoryStore& store,
                                            const RewardSpec& base,
                                            const InvarianceOptions& options = {});
}  // namespace reference

}  // namespace reward_align
