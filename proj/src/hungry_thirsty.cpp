#include "reward_align/hungry_thirsty.hpp"

#include <algorithm>
#include <sstream>

namespace reward_align::ht {

namespace {

bool is_corner(const Cell& c, const EnvConfig& config) {
  return (c.x == 0 || c.x == config.width - 1) && (c.y == 0 || c.y == config.height - 1);
}

}  // namespace

void EnvConfig::validate() const {
  if (width != kGridWidth || height != kGridHeight) {
    throw InvalidArgument("only the 4x4 grid is supported");
  }
  if (!is_corner(food, *this) || !is_corner(water, *this)) {
    throw InvalidArgument("food and water must sit on grid corners");
  }
  if (food == water) throw InvalidArgument("food and water must differ");
  if (!(thirst_prob >= 0.0 && thirst_prob <= 1.0)) {
    throw InvalidArgument("thirst_prob must lie in [0, 1]");
  }
  if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  if (start_mode == StartMode::Fixed &&
      (start.x < 0 || start.x >= width || start.y < 0 || start.y >= height)) {
    throw InvalidArgument("fixed start lies outside the grid");
  }
}

EnvConfig EnvConfig::random_layout(std::uint64_t config_seed, const EnvConfig& base) {
  EnvConfig c = base;
  c.config_seed = config_seed;
  Rng rng = Rng::stream(config_seed, 0x4C41594F5554ULL);  // "LAYOUT"
  const auto f = rng.below(kCorners.size());
  auto w = rng.below(kCorners.size() - 1);
  if (w >= f) ++w;
  c.food = kCorners[f];
  c.water = kCorners[w];
  return c;
}

EnvConfig EnvConfig::random_layout(std::uint64_t config_seed) {
  return random_layout(config_seed, EnvConfig{});
}

EnvConfig EnvConfig::fixed_start_study() {
  EnvConfig c;
  c.food = {3, 0};
  c.water = {0, 0};
  c.start_mode = StartMode::Fixed;
  c.start = {0, 0};
  return c;
}

std::string EnvConfig::id() const {
  std::ostringstream out;
  out << "ht-f" << food.x << food.y << "-w" << water.x << water.y;
  if (start_mode == StartMode::Fixed) {
    out << "-s" << start.x << start.y;
  } else {
    out << "-srand";
  }
  out << "-c" << config_seed;
  return out.str();
}

std::vector<State> enumerate_states(const EnvConfig& config) {
  std::vector<State> out(static_cast<std::size_t>(config.width * config.height * 4));
  for (int hungry = 0; hungry < 2; ++hungry) {
    for (int thirsty = 0; thirsty < 2; ++thirsty) {
      for (int y = 0; y < config.height; ++y) {
        for (int x = 0; x < config.width; ++x) {
          State s{x, y, hungry != 0, thirsty != 0};
          out[state_index(s, config)] = s;
        }
      }
    }
  }
  return out;
}

std::size_t state_index(const State& s, const EnvConfig& config) noexcept {
  const auto cells = static_cast<std::size_t>(config.width * config.height);
  const auto cell = static_cast<std::size_t>(s.y * config.width + s.x);
  const auto status = static_cast<std::size_t>((s.hungry ? 2 : 0) + (s.thirsty ? 1 : 0));
  return status * cells + cell;
}

bool in_grid(const State& s, const EnvConfig& config) noexcept {
  return s.x >= 0 && s.x < config.width && s.y >= 0 && s.y < config.height;
}

Resolution resolve_action(const State& s, Action a, const EnvConfig& config) noexcept {
  State next = s;
  int nx = s.x;
  int ny = s.y;
  switch (a) {
    case Action::Up: ++ny; break;
    case Action::Down: --ny; break;
    case Action::Left: --nx; break;
    case Action::Right: ++nx; break;
    default: break;
  }
  if (nx >= 0 && nx < config.width && ny >= 0 && ny < config.height) {
    next.x = nx;
    next.y = ny;
  }
  bool ate = false;
  const Cell here{next.x, next.y};
  if (a == Action::Eat && here == config.food && !s.thirsty) ate = true;
  if (a == Action::Drink && here == config.water) next.thirsty = false;
  next.hungry = !ate;
  return {next, ate};
}

StepResult step(const State& s, Action a, const EnvConfig& config, Rng& rng) {
  auto [next, ate] = resolve_action(s, a, config);
  if (!next.thirsty) next.thirsty = rng.bernoulli(config.thirst_prob);
  return {next, ate};
}

double reward_of(const State& next, const RewardParams& params) noexcept {
  if (next.hungry) return next.thirsty ? params.hungry_thirsty : params.hungry_quenched;
  return next.thirsty ? params.fed_thirsty : params.fed_quenched;
}

State initial_state(const EnvConfig& config, Rng& rng) {
  State s;
  s.hungry = config.initial_hungry;
  s.thirsty = config.initial_thirsty;
  if (config.start_mode == StartMode::Fixed) {
    s.x = config.start.x;
    s.y = config.start.y;
  } else {
    const auto cell = rng.below(static_cast<std::uint64_t>(config.width * config.height));
    s.x = static_cast<int>(cell % static_cast<std::uint64_t>(config.width));
    s.y = static_cast<int>(cell / static_cast<std::uint64_t>(config.width));
  }
  return s;
}

int eval_return(const Trajectory& trajectory) noexcept {
  const auto steps = trajectory.steps();
  return static_cast<int>(std::count_if(steps.begin(), steps.end(),
                                        [](const Transition& t) { return !t.next.hungry; }));
}

Policy table_policy(const PolicyTable& table, const EnvConfig& config) {
  return [table, config](const State& s, Rng&) { return table[state_index(s, config)]; };
}

Rng episode_stream(std::uint64_t config_seed, std::uint64_t episode_seed) noexcept {
  return Rng::stream(config_seed, episode_seed);
}

Rollout rollout(const Policy& policy, const EnvConfig& config, std::uint64_t episode_seed,
                std::string trajectory_id) {
  config.validate();
  Rng env_rng = episode_stream(config.config_seed, episode_seed);
  Rng policy_rng = env_rng.fork(1);
  if (trajectory_id.empty()) {
    trajectory_id = config.id() + "/ep" + std::to_string(episode_seed);
  }
  std::vector<Transition> steps;
  steps.reserve(static_cast<std::size_t>(config.max_steps));
  State s = initial_state(config, env_rng);
  int fed = 0;
  for (int t = 0; t < config.max_steps; ++t) {
    const Action a = policy(s, policy_rng);
    const auto result = step(s, a, config, env_rng);
    steps.push_back({s, a, result.next});
    if (result.ate) ++fed;
    s = result.next;
  }
  return {Trajectory(std::move(trajectory_id), config.id(), std::move(steps)), fed};
}

}  // namespace reward_align::ht
