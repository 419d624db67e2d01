#include "reward_align/json_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace reward_align::io {

namespace {

// nlohmann raises its own exceptions on a wrong type or missing key; surface
// them as InvalidData with some context.
template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InvalidData(std::string("malformed ") + what + ": " + e.what());
  }
}

json sigma_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

const char* start_mode_name(ht::StartMode m) {
  return m == ht::StartMode::Fixed ? "fixed" : "random";
}

json cell_json(const ht::Cell& c) { return json::array({c.x, c.y}); }

ht::Cell cell_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

const std::string& reward_id(const AnyReward& r) {
  return std::visit([](const auto& x) -> const std::string& { return x.id(); }, r);
}

json to_json(const State& s) {
  return {{"x", s.x}, {"y", s.y}, {"hungry", s.hungry}, {"thirsty", s.thirsty}};
}

State state_from_json(const json& j) {
  return guarded("state", [&] {
    return State{j.at("x").get<int>(), j.at("y").get<int>(), j.at("hungry").get<bool>(),
                 j.at("thirsty").get<bool>()};
  });
}

json to_json(const Trajectory& t) {
  json steps = json::array();
  for (const auto& step : t.steps()) {
    steps.push_back({{"s", to_json(step.s)},
                     {"a", std::string(action_name(step.a))},
                     {"s_next", to_json(step.next)}});
  }
  return {{"id", t.id()}, {"config_id", t.config_id()}, {"steps", std::move(steps)}};
}

Trajectory trajectory_from_json(const json& j) {
  return guarded("trajectory", [&] {
    std::vector<Transition> steps;
    for (const auto& step : j.at("steps")) {
      const auto name = step.at("a").get<std::string>();
      const auto a = parse_action(name);
      if (!a) throw InvalidData("unknown action '" + name + "'");
      steps.push_back({state_from_json(step.at("s")), *a, state_from_json(step.at("s_next"))});
    }
    return Trajectory(j.at("id").get<std::string>(), j.value("config_id", std::string{}),
                      std::move(steps));
  });
}

json to_json(const TrajectoryDistribution& d) {
  json support = json::array();
  for (const auto& w : d.support()) support.push_back(json::array({w.trajectory_id, w.probability}));
  json mu = json::array();
  for (const auto& m : d.mu()) mu.push_back(json::array({to_json(m.state), m.probability}));
  return {{"id", d.id()}, {"support", std::move(support)}, {"mu", std::move(mu)}};
}

TrajectoryDistribution distribution_from_json(const json& j, const TrajectoryStore& store) {
  return guarded("distribution", [&] {
    std::vector<WeightedTrajectory> support;
    for (const auto& w : j.at("support")) {
      support.push_back({w.at(0).get<std::string>(), w.at(1).get<double>()});
    }
    auto id = j.at("id").get<std::string>();
    if (!j.contains("mu")) {
      return TrajectoryDistribution::with_derived_mu(std::move(id), std::move(support), store);
    }
    std::vector<StateMass> mu;
    for (const auto& m : j.at("mu")) mu.push_back({state_from_json(m.at(0)), m.at(1).get<double>()});
    return TrajectoryDistribution::create(std::move(id), std::move(support), std::move(mu), store);
  });
}

json to_json(const PairRelation& p, const PreferenceSource& source) {
  return {{"i", p.i},
          {"j", p.j},
          {"rel", std::string(1, relation_symbol(p.rel))},
          {"source", source.label()}};
}

PairRelation relation_from_json(const json& j) {
  return guarded("relation", [&] {
    const auto symbol = j.at("rel").get<std::string>();
    const auto rel = parse_relation(symbol);
    if (!rel) throw InvalidData("unknown relation '" + symbol + "'");
    return PairRelation{j.at("i").get<std::string>(), j.at("j").get<std::string>(), *rel};
  });
}

json params_to_json(const RewardParams& p) {
  return json::array({p.hungry_thirsty, p.hungry_quenched, p.fed_thirsty, p.fed_quenched});
}

RewardParams params_from_json(const json& j) {
  return guarded("reward params", [&] {
    if (!j.is_array() || j.size() != 4) throw InvalidData("reward params need four numbers");
    return RewardParams{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                        j[3].get<double>()};
  });
}

json to_json(const RewardSpec& r) {
  json out = {{"id", r.id()}, {"gamma", r.gamma()}};
  if (r.kind() == RewardKind::HungryThirstyParams) {
    out["kind"] = "hungry_thirsty_params";
    out["params"] = params_to_json(r.params());
    return out;
  }
  out["kind"] = "tabular";
  std::vector<std::pair<Transition, double>> rows(r.table().begin(), r.table().end());
  std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
    if (x.first.s != y.first.s) return x.first.s < y.first.s;
    if (x.first.a != y.first.a) return x.first.a < y.first.a;
    return x.first.next < y.first.next;
  });
  json entries = json::array();
  for (const auto& [t, v] : rows) {
    entries.push_back({{"s", to_json(t.s)},
                       {"a", std::string(action_name(t.a))},
                       {"s_next", to_json(t.next)},
                       {"r", v}});
  }
  out["entries"] = std::move(entries);
  return out;
}

json to_json(const ShapedRewardSpec& r) {
  return {{"kind", "shaped"},
          {"id", r.id()},
          {"base", to_json(r.base())},
          {"mode", std::string(horizon_mode_name(r.horizon_mode()))},
          {"phi", to_json(r.phi()).at("phi")}};
}

json to_json(const AnyReward& r) {
  return std::visit([](const auto& x) { return to_json(x); }, r);
}

AnyReward reward_from_json(const json& j) {
  return guarded("reward", [&]() -> AnyReward {
    const auto kind = j.at("kind").get<std::string>();
    const auto id = j.value("id", std::string{});
    if (kind == "hungry_thirsty_params") {
      return RewardSpec::hungry_thirsty(params_from_json(j.at("params")),
                                        j.value("gamma", 0.99), id);
    }
    if (kind == "tabular") {
      RewardSpec::Table table;
      for (const auto& e : j.at("entries")) {
        const auto name = e.at("a").get<std::string>();
        const auto a = parse_action(name);
        if (!a) throw InvalidData("unknown action '" + name + "'");
        const Transition t{state_from_json(e.at("s")), *a, state_from_json(e.at("s_next"))};
        if (!table.emplace(t, e.at("r").get<double>()).second) {
          throw InvalidData("duplicate tabular reward entry");
        }
      }
      return RewardSpec::tabular(std::move(table), j.value("gamma", 0.99), id);
    }
    if (kind == "shaped") {
      auto base = reward_from_json(j.at("base"));
      if (!std::holds_alternative<RewardSpec>(base)) {
        throw InvalidData("shaped rewards cannot nest");
      }
      const auto mode_name = j.value("mode", std::string("infinite_horizon_exact"));
      const auto mode = parse_horizon_mode(mode_name);
      if (!mode) throw InvalidData("unknown horizon mode '" + mode_name + "'");
      auto spec = std::get<RewardSpec>(std::move(base));
      if (!id.empty()) spec = spec.with_id(id);
      return shape_reward(spec, potential_from_json(json{{"phi", j.at("phi")}}), *mode);
    }
    throw InvalidData("unknown reward kind '" + kind + "'");
  });
}

json to_json(const PotentialFn& phi) {
  json rows = json::array();
  for (const auto& [s, v] : phi.entries()) rows.push_back(json::array({to_json(s), v}));
  return {{"phi", std::move(rows)}};
}

PotentialFn potential_from_json(const json& j) {
  return guarded("potential", [&] {
    PotentialFn phi;
    for (const auto& row : j.at("phi")) {
      const double v = row.at(1).get<double>();
      if (!std::isfinite(v)) throw InvalidData("potential values must be finite");
      phi.set(state_from_json(row.at(0)), v);
    }
    return phi;
  });
}

json to_json(const TauCounts& c) {
  return {{"P", c.concordant},
          {"Q", c.discordant},
          {"X0", c.tied_b_only},
          {"Y0", c.tied_a_only},
          {"tied_both", c.tied_both}};
}

json to_json(const TacReport& r) {
  json per_pair = json::array();
  for (const auto& p : r.per_pair) {
    per_pair.push_back(
        {{"i", p.i}, {"j", p.j}, {"class", std::string(pair_class_name(p.classification))}});
  }
  json out = to_json(r.counts);
  out["sigma"] = sigma_json(r.sigma);
  out["undefined"] = r.sigma ? json(nullptr) : json(r.undefined_reason);
  out["source_a"] = r.source_a;
  out["source_b"] = r.source_b;
  out["per_pair"] = std::move(per_pair);
  return out;
}

json to_json(const InvarianceVerdict& v) {
  json out = {{"pass", v.pass},
              {"trials", v.trials},
              {"base_sigma", sigma_json(v.base_sigma)},
              {"max_abs_diff", v.max_abs_diff},
              {"first_failure", nullptr}};
  if (v.first_failure) {
    out["first_failure"] = {{"trial", *v.first_failure_trial},
                            {"phi", to_json(*v.first_failure).at("phi")}};
  }
  return out;
}

json to_json(const CounterexampleConstruction& c) {
  json s_gt = json::array();
  for (const auto& s : c.s_gt) s_gt.push_back(to_json(s));
  return {{"i", c.i_id},
          {"j", c.j_id},
          {"swapped", c.swapped},
          {"s_gt", std::move(s_gt)},
          {"mass_gap", c.mass_gap},
          {"delta_g", c.delta_g},
          {"epsilon", c.epsilon},
          {"delta_phi", c.delta_phi},
          {"phi", to_json(c.phi).at("phi")}};
}

json to_json(const ht::EnvConfig& c) {
  return {{"width", c.width},
          {"height", c.height},
          {"food", cell_json(c.food)},
          {"water", cell_json(c.water)},
          {"start_mode", start_mode_name(c.start_mode)},
          {"start", cell_json(c.start)},
          {"thirst_prob", c.thirst_prob},
          {"max_steps", c.max_steps},
          {"config_seed", c.config_seed},
          {"initial_hungry", c.initial_hungry},
          {"initial_thirsty", c.initial_thirsty}};
}

ht::EnvConfig env_from_json(const json& j) {
  return guarded("env config", [&] {
    ht::EnvConfig c;
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    if (j.contains("food")) c.food = cell_from(j.at("food"));
    if (j.contains("water")) c.water = cell_from(j.at("water"));
    if (j.contains("start_mode")) {
      const auto mode = j.at("start_mode").get<std::string>();
      if (mode != "fixed" && mode != "random") throw InvalidData("start_mode must be fixed or random");
      c.start_mode = mode == "fixed" ? ht::StartMode::Fixed : ht::StartMode::RandomPerEpisode;
    }
    if (j.contains("start")) c.start = cell_from(j.at("start"));
    c.thirst_prob = j.value("thirst_prob", c.thirst_prob);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.config_seed = j.value("config_seed", c.config_seed);
    c.initial_hungry = j.value("initial_hungry", c.initial_hungry);
    c.initial_thirsty = j.value("initial_thirsty", c.initial_thirsty);
    c.validate();
    return c;
  });
}

json to_json(const rl::TrainConfig& c) {
  return {{"algorithm", std::string(rl::algorithm_name(c.algorithm))},
          {"episodes", c.episodes},
          {"seeds", c.seeds},
          {"learning_rate", c.learning_rate},
          {"epsilon", c.epsilon},
          {"gamma", c.gamma},
          {"reward_params", params_to_json(c.reward_params)},
          {"final_window", c.final_window},
          {"q_init", c.q_init},
          {"randomize_layout", c.randomize_layout}};
}

json to_json(const rl::TrainResult& r) {
  json out = to_json(r.config);
  out["final_return_mean"] = r.final_return_mean;
  out["final_return_std"] = r.final_return_std;
  out["auc_mean"] = r.auc_mean;
  out["auc_std"] = r.auc_std;
  return out;
}

json to_json(const study::StudyResult& r) {
  json sizes = json::array();
  for (const auto& s : r.sizes) {
    sizes.push_back({{"size", s.size},
                     {"mean_correlation", s.mean_correlation},
                     {"std_correlation", s.std_correlation},
                     {"defined_repeats", s.defined_repeats},
                     {"undefined_repeats", s.undefined_repeats}});
  }
  return {{"repeats", r.repeats},
          {"pool_size", r.pool_size},
          {"full_pool_sigma", r.full_pool_sigma},
          {"sizes", std::move(sizes)}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidData(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<json> read_jsonl_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<json> rows;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw InvalidData(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

void write_jsonl_file(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& row : rows) out << row.dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void append_jsonl_line(const std::filesystem::path& path, const json& row) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  out << row.dump() << '\n';
  out.flush();
  if (!out) throw IoError("append failed for " + path.string());
}

TrajectoryStore load_trajectories(const std::filesystem::path& path) {
  TrajectoryStore store;
  for (const auto& row : read_jsonl_file(path)) store.add(trajectory_from_json(row));
  return store;
}

void save_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& items) {
  std::vector<json> rows;
  rows.reserve(items.size());
  for (const auto& t : items) rows.push_back(to_json(t));
  write_jsonl_file(path, rows);
}

DistributionSet point_masses(const TrajectoryStore& store) {
  DistributionSet out;
  for (const auto& id : store.ids()) out.add(TrajectoryDistribution::point_mass(store.get(id)));
  return out;
}

DistributionSet load_distributions(const std::filesystem::path& path,
                                   const TrajectoryStore& store) {
  if (path.empty() || !std::filesystem::exists(path)) return point_masses(store);
  const auto j = read_json_file(path);
  const json& items = j.is_object() ? j.at("distributions") : j;
  DistributionSet out;
  for (const auto& d : items) out.add(distribution_from_json(d, store));
  return out;
}

PreferenceDataset load_preferences(const std::filesystem::path& path) {
  const auto rows = read_jsonl_file(path);
  std::vector<PairRelation> relations;
  PreferenceSource source = PreferenceSource::human();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k == 0 && rows[k].contains("source")) {
      source = PreferenceSource::parse(rows[k]["source"].get<std::string>());
    }
    relations.push_back(relation_from_json(rows[k]));
  }
  return {source, std::move(relations)};
}

void save_preferences(const std::filesystem::path& path, const PreferenceDataset& data) {
  std::vector<json> rows;
  for (const auto& r : data.relations()) rows.push_back(to_json(r, data.source()));
  write_jsonl_file(path, rows);
}

AnyReward load_reward(const std::filesystem::path& path) {
  return reward_from_json(read_json_file(path));
}

void write_curves(const std::filesystem::path& path, const std::vector<std::vector<int>>& curves) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t episodes = curves.empty() ? 0 : curves.front().size();
  for (const auto& curve : curves) {
    if (curve.size() != episodes) throw InvalidArgument("learning curves differ in length");
    for (int v : curve) {
      const auto f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
  auto sidecar = path;
  sidecar += ".json";
  write_json_file(sidecar, {{"dtype", "float32"},
                            {"shape", json::array({curves.size(), episodes})},
                            {"order", "C"},
                            {"byte_order", "little"}});
}

}  // namespace reward_align::io
