#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reward_align/preference.hpp"
#include "reward_align/rng.hpp"

namespace reward_align::ht {

inline constexpr int kGridWidth = 4;
inline constexpr int kGridHeight = 4;
inline constexpr std::size_t kNumStates = 64;

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

inline constexpr std::array<Cell, 4> kCorners = {
    Cell{0, 0}, Cell{0, 3}, Cell{3, 0}, Cell{3, 3}};

enum class StartMode { Fixed, RandomPerEpisode };

/// The "not hungry" indicator: the evaluation metric written as a reward.
inline constexpr RewardParams kEvalMetricReward{0.0, 0.0, 1.0, 1.0};

struct EnvConfig {
  int width = kGridWidth;
  int height = kGridHeight;
  Cell food{3, 0};
  Cell water{0, 0};
  StartMode start_mode = StartMode::RandomPerEpisode;
  Cell start{0, 0};
  double thirst_prob = 0.10;
  int max_steps = 200;
  std::uint64_t config_seed = 0;
  // Status at episode start. No eat precedes step 0, so the agent starts hungry.
  bool initial_hungry = true;
  bool initial_thirsty = false;

  /// Throws InvalidArgument on a malformed configuration.
  void validate() const;

  /// `base` with food and water drawn as two distinct corners from
  /// `config_seed`.
  static EnvConfig random_layout(std::uint64_t config_seed, const EnvConfig& base);
  static EnvConfig random_layout(std::uint64_t config_seed);

  /// Fixed start (0,0), food (3,0), water (0,0): the trajectory-sampling
  /// layout where every episode shares one start state.
  static EnvConfig fixed_start_study();

  /// Stable identifier used as Trajectory::config_id.
  std::string id() const;
};

/// All 64 states, in state_index order.
std::vector<State> enumerate_states(const EnvConfig& config = {});

/// Dense index in [0, width*height*4).
std::size_t state_index(const State& s, const EnvConfig& config = {}) noexcept;

bool in_grid(const State& s, const EnvConfig& config) noexcept;

/// Movement plus eat/drink resolution; thirst onset not yet applied.
struct Resolution {
  State next;
  bool ate = false;
};

Resolution resolve_action(const State& s, Action a, const EnvConfig& config) noexcept;

struct StepResult {
  State next;
  bool ate = false;
};

/// One environment step. Order: movement (off-grid is a no-op), eat/drink,
/// hungry' = !ate, then thirst onset with probability thirst_prob when the
/// agent is not thirsty.
StepResult step(const State& s, Action a, const EnvConfig& config, Rng& rng);

/// a/b/c/d by the (hungry, thirsty) status of the post-transition state.
double reward_of(const State& next, const RewardParams& params) noexcept;

/// Start state per config: fixed cell or uniform over the 16 cells.
State initial_state(const EnvConfig& config, Rng& rng);

/// Count of transitions that end not hungry.
int eval_return(const Trajectory& trajectory) noexcept;

using Policy = std::function<Action(const State&, Rng&)>;
using PolicyTable = std::array<Action, kNumStates>;

Policy table_policy(const PolicyTable& table, const EnvConfig& config = {});

struct Rollout {
  Trajectory trajectory;
  int eval_return = 0;
};

/// Environment stream: Rng::stream(config_seed, episode_seed). The policy
/// draws from the environment stream forked with tag 1.
Rng episode_stream(std::uint64_t config_seed, std::uint64_t episode_seed) noexcept;

/// Exactly max_steps transitions. The trajectory id defaults to
/// "<config id>/ep<episode_seed>".
Rollout rollout(const Policy& policy, const EnvConfig& config,
                std::uint64_t episode_seed, std::string trajectory_id = {});

}  // namespace reward_align::ht
