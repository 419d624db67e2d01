#pragma once

#include <array>
#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reward_align/errors.hpp"

namespace reward_align {

inline constexpr double kDefaultTieTolerance = 1e-9;
inline constexpr double kProbabilityTolerance = 1e-12;

enum class Action : std::uint8_t { Up, Down, Left, Right, Eat, Drink };

inline constexpr std::size_t kNumActions = 6;
inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::Up, Action::Down, Action::Left,
    Action::Right, Action::Eat, Action::Drink};

std::string_view action_name(Action a) noexcept;
std::optional<Action> parse_action(std::string_view name) noexcept;
constexpr std::size_t action_index(Action a) noexcept {
  return static_cast<std::size_t>(a);
}

/// Environment state. For the Hungry-Thirsty grid this is the agent cell
/// plus the two status bits; other fixtures reuse it as an opaque key.
struct State {
  int x = 0;
  int y = 0;
  bool hungry = true;
  bool thirsty = false;

  friend auto operator<=>(const State&, const State&) = default;
};

struct StateHash {
  std::size_t operator()(const State& s) const noexcept {
    std::size_t h = static_cast<std::size_t>(s.x) * 0x9E3779B1u;
    h ^= static_cast<std::size_t>(s.y) * 0x85EBCA77u + (h << 6) + (h >> 2);
    return h ^ (static_cast<std::size_t>(s.hungry) << 1) ^
           static_cast<std::size_t>(s.thirsty);
  }
};

std::string to_string(const State& s);

struct Transition {
  State s;
  Action a = Action::Up;
  State next;

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct TransitionHash {
  std::size_t operator()(const Transition& t) const noexcept {
    const StateHash h;
    return h(t.s) * 31u + action_index(t.a) * 7919u + h(t.next) * 131u;
  }
};

/// A chained, non-empty sequence of transitions.
class Trajectory {
 public:
  /// Throws InvalidData if `steps` is empty or the chain is broken.
  Trajectory(std::string id, std::string config_id,
             std::vector<Transition> steps);

  const std::string& id() const noexcept { return id_; }
  const std::string& config_id() const noexcept { return config_id_; }
  std::span<const Transition> steps() const noexcept { return steps_; }
  std::size_t length() const noexcept { return steps_.size(); }
  const State& start() const noexcept { return steps_.front().s; }
  const State& final_state() const noexcept { return steps_.back().next; }

 private:
  std::string id_;
  std::string config_id_;
  std::vector<Transition> steps_;
};

class TrajectoryStore {
 public:
  /// Throws InvalidData on a duplicate id.
  void add(Trajectory trajectory);
  const Trajectory& get(const std::string& id) const;
  bool contains(const std::string& id) const noexcept;
  std::size_t size() const noexcept { return order_.size(); }
  /// Ids in insertion order.
  std::span<const std::string> ids() const noexcept { return order_; }

 private:
  std::unordered_map<std::string, Trajectory> items_;
  std::vector<std::string> order_;
};

struct WeightedTrajectory {
  std::string trajectory_id;
  double probability = 0.0;
};

struct StateMass {
  State state;
  double probability = 0.0;
};

/// Finite-support distribution over stored trajectories with its start-state
/// distribution mu kept explicitly (and validated against the support).
class TrajectoryDistribution {
 public:
  /// Validates probabilities, id resolution and that `mu` equals the support's
  /// start-state marginal within kProbabilityTolerance.
  static TrajectoryDistribution create(std::string id,
                                       std::vector<WeightedTrajectory> support,
                                       std::vector<StateMass> mu,
                                       const TrajectoryStore& store);
  /// Same as create(), with mu computed from the support.
  static TrajectoryDistribution with_derived_mu(
      std::string id, std::vector<WeightedTrajectory> support,
      const TrajectoryStore& store);
  /// Point mass on `trajectory`; the distribution id is the trajectory id.
  static TrajectoryDistribution point_mass(const Trajectory& trajectory);
  /// weight * a + (1 - weight) * b, supports merged by trajectory id.
  static TrajectoryDistribution mixture(std::string id,
                                        const TrajectoryDistribution& a,
                                        const TrajectoryDistribution& b,
                                        double weight,
                                        const TrajectoryStore& store);

  const std::string& id() const noexcept { return id_; }
  std::span<const WeightedTrajectory> support() const noexcept {
    return support_;
  }
  /// Sorted by state, one entry per state with positive mass.
  std::span<const StateMass> mu() const noexcept { return mu_; }
  double start_probability(const State& s) const noexcept;

 private:
  TrajectoryDistribution() = default;

  std::string id_;
  std::vector<WeightedTrajectory> support_;
  std::vector<StateMass> mu_;
};

/// True when two start-state distributions agree on every state within `tol`.
bool same_start_distribution(const TrajectoryDistribution& a,
                             const TrajectoryDistribution& b,
                             double tol = kProbabilityTolerance);

class DistributionSet {
 public:
  void add(TrajectoryDistribution dist);
  const TrajectoryDistribution& get(const std::string& id) const;
  bool contains(const std::string& id) const noexcept;
  std::size_t size() const noexcept { return order_.size(); }
  std::span<const std::string> ids() const noexcept { return order_; }

 private:
  std::unordered_map<std::string, TrajectoryDistribution> items_;
  std::vector<std::string> order_;
};

/// Hungry-Thirsty reward parameters, indexed by the post-transition status.
struct RewardParams {
  double hungry_thirsty = 0.0;   // a
  double hungry_quenched = 0.0;  // b
  double fed_thirsty = 0.0;      // c
  double fed_quenched = 0.0;     // d

  friend bool operator==(const RewardParams&, const RewardParams&) = default;
};

enum class RewardKind { HungryThirstyParams, Tabular };

/// A reward function paired with its discount. Immutable.
class RewardSpec {
 public:
  using Table = std::unordered_map<Transition, double, TransitionHash>;

  /// Throws InvalidArgument unless 0 <= gamma < 1.
  static RewardSpec hungry_thirsty(RewardParams params, double gamma,
                                   std::string id = {});
  static RewardSpec tabular(Table table, double gamma, std::string id = {});

  RewardKind kind() const noexcept { return kind_; }
  double gamma() const noexcept { return gamma_; }
  const std::string& id() const noexcept { return id_; }
  /// Throws InvalidArgument when kind() is not HungryThirstyParams.
  const RewardParams& params() const;
  /// Throws InvalidArgument when kind() is not Tabular.
  const Table& table() const;

  RewardSpec with_id(std::string id) const;

  /// Throws MissingRewardEntry for a tabular gap.
  double reward(const Transition& t) const;

 private:
  RewardSpec(RewardKind kind, double gamma, std::string id);

  RewardKind kind_;
  double gamma_;
  std::string id_;
  RewardParams params_{};
  Table table_;
};

/// Discounted return sum_t gamma^t r(s_t, a_t, s_{t+1}).
double compute_return(const Trajectory& trajectory, const RewardSpec& reward);

inline double trajectory_return(const Trajectory& trajectory,
                                const RewardSpec& reward) {
  return compute_return(trajectory, reward);
}

/// Anything that assigns a return to a trajectory (plain or shaped rewards).
template <typename R>
concept ReturnModel = requires(const R& model, const Trajectory& t) {
  { trajectory_return(t, model) } -> std::convertible_to<double>;
};

template <ReturnModel R>
double expected_return(const TrajectoryDistribution& dist,
                       const TrajectoryStore& store, const R& model) {
  if (dist.support().empty()) {
    throw EmptySupport("distribution '" + dist.id() + "' has empty support");
  }
  double total = 0.0;
  for (const auto& w : dist.support()) {
    total += w.probability * trajectory_return(store.get(w.trajectory_id), model);
  }
  return total;
}

enum class Relation : std::uint8_t { Succ, Prec, Indiff };

Relation flip(Relation r) noexcept;
char relation_symbol(Relation r) noexcept;
std::optional<Relation> parse_relation(std::string_view symbol) noexcept;

/// Succ when ei - ej > tie_tol, Prec when ej - ei > tie_tol, else Indiff.
Relation compare_values(double ei, double ej, double tie_tol);

template <ReturnModel R>
Relation induce_preference(const TrajectoryDistribution& eta_i,
                           const TrajectoryDistribution& eta_j,
                           const TrajectoryStore& store, const R& model,
                           double tie_tol = kDefaultTieTolerance) {
  if (!(tie_tol >= 0.0)) throw InvalidArgument("tie_tol must be >= 0");
  return compare_values(expected_return(eta_i, store, model),
                        expected_return(eta_j, store, model), tie_tol);
}

struct PairRelation {
  std::string i;
  std::string j;
  Relation rel = Relation::Indiff;

  friend bool operator==(const PairRelation&, const PairRelation&) = default;
};

/// Same relation with i < j lexicographically.
PairRelation normalized(const PairRelation& p);

struct PreferenceSource {
  enum class Kind { Human, Reward };
  Kind kind = Kind::Human;
  std::string reward_id;

  static PreferenceSource human() { return {}; }
  static PreferenceSource reward(std::string id) {
    return {Kind::Reward, std::move(id)};
  }
  /// "human" or "reward:<id>".
  std::string label() const;
  static PreferenceSource parse(std::string_view label);

  friend bool operator==(const PreferenceSource&,
                         const PreferenceSource&) = default;
};

/// Returns a witness cycle (first id repeated at the end) if the relations,
/// with Indiff treated as symmetric equality, are not transitive.
std::optional<std::vector<std::string>> find_preference_cycle(
    std::span<const PairRelation> relations);

/// Pairwise relations attributed to one source. Duplicate unordered pairs and
/// self-pairs are rejected; human datasets are audited for transitivity.
class PreferenceDataset {
 public:
  PreferenceDataset() = default;
  PreferenceDataset(PreferenceSource source, std::vector<PairRelation> relations);

  static PreferenceDataset human(std::vector<PairRelation> relations) {
    return {PreferenceSource::human(), std::move(relations)};
  }

  const PreferenceSource& source() const noexcept { return source_; }
  std::span<const PairRelation> relations() const noexcept { return relations_; }
  std::size_t size() const noexcept { return relations_.size(); }
  bool empty() const noexcept { return relations_.empty(); }

  /// The unordered pair set, each pair as (min id, max id).
  std::vector<std::pair<std::string, std::string>> pair_set() const;

 private:
  PreferenceSource source_;
  std::vector<PairRelation> relations_;
};

/// Relabels every pair of `human` under `model`, one relation per pair, in the
/// same order and orientation.
template <ReturnModel R>
PreferenceDataset build_reward_dataset(const PreferenceDataset& human,
                                       const DistributionSet& dists,
                                       const TrajectoryStore& store,
                                       const R& model, std::string source_id,
                                       double tie_tol = kDefaultTieTolerance) {
  if (!(tie_tol >= 0.0)) throw InvalidArgument("tie_tol must be >= 0");
  std::unordered_map<std::string, double> cache;
  auto value_of = [&](const std::string& id) {
    if (auto it = cache.find(id); it != cache.end()) return it->second;
    const double v = expected_return(dists.get(id), store, model);
    cache.emplace(id, v);
    return v;
  };
  std::vector<PairRelation> out;
  out.reserve(human.size());
  for (const auto& p : human.relations()) {
    out.push_back({p.i, p.j, compare_values(value_of(p.i), value_of(p.j), tie_tol)});
  }
  return {PreferenceSource::reward(std::move(source_id)), std::move(out)};
}

/// Every unordered pair of `values` ordered by value (i < j by index), used to
/// turn a scalar score per distribution into a full preference dataset.
std::vector<PairRelation> full_ranking_relations(
    std::span<const std::string> ids, std::span<const double> values,
    double tie_tol = kDefaultTieTolerance);

}  // namespace reward_align
