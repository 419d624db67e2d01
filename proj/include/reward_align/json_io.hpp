#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "reward_align/hungry_thirsty.hpp"
#include "reward_align/preference.hpp"
#include "reward_align/sampling_study.hpp"
#include "reward_align/shaping.hpp"
#include "reward_align/tabular_rl.hpp"
#include "reward_align/tac.hpp"

namespace reward_align::io {

using json = nlohmann::json;

/// A reward loaded from disk: plain or potential-shaped.
using AnyReward = std::variant<RewardSpec, ShapedRewardSpec>;

const std::string& reward_id(const AnyReward& r);

json to_json(const State& s);
State state_from_json(const json& j);

json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const json& j);

/// {"id", "support": [[tid, p]], "mu": [[state, p]]}; mu is derived when absent.
json to_json(const TrajectoryDistribution& d);
TrajectoryDistribution distribution_from_json(const json& j, const TrajectoryStore& store);

/// {"i", "j", "rel": ">"|"<"|"~", "source"}.
json to_json(const PairRelation& p, const PreferenceSource& source);
PairRelation relation_from_json(const json& j);

json params_to_json(const RewardParams& p);
RewardParams params_from_json(const json& j);

/// kind: hungry_thirsty_params | tabular | shaped.
json to_json(const RewardSpec& r);
json to_json(const ShapedRewardSpec& r);
json to_json(const AnyReward& r);
AnyReward reward_from_json(const json& j);

/// {"phi": [[state, value]]}.
json to_json(const PotentialFn& phi);
PotentialFn potential_from_json(const json& j);

json to_json(const TauCounts& c);
/// sigma (null when undefined), undefined, P, Q, X0, Y0, tied_both, per_pair.
json to_json(const TacReport& r);
json to_json(const InvarianceVerdict& v);
json to_json(const CounterexampleConstruction& c);

json to_json(const ht::EnvConfig& c);
ht::EnvConfig env_from_json(const json& j);

json to_json(const rl::TrainConfig& c);
/// Summary row without the learning curve.
json to_json(const rl::TrainResult& r);
json to_json(const study::StudyResult& r);

// Files. Every reader raises IoError on unreadable files and InvalidData on
// malformed content, with the offending line where there is one.
json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);
std::vector<json> read_jsonl_file(const std::filesystem::path& path);
void write_jsonl_file(const std::filesystem::path& path, const std::vector<json>& rows);
void append_jsonl_line(const std::filesystem::path& path, const json& row);

/// JSONL of trajectories.
TrajectoryStore load_trajectories(const std::filesystem::path& path);
void save_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& items);

/// A JSON array of distributions, or a JSON object {"distributions": [...]}.
/// When the file is absent every trajectory becomes its own point mass.
DistributionSet load_distributions(const std::filesystem::path& path, const TrajectoryStore& store);
DistributionSet point_masses(const TrajectoryStore& store);

/// JSONL of relations. The dataset source comes from the first row
/// ("human" when empty).
PreferenceDataset load_preferences(const std::filesystem::path& path);
void save_preferences(const std::filesystem::path& path, const PreferenceDataset& data);

AnyReward load_reward(const std::filesystem::path& path);

/// Float32 learning curves, row-major [seed][episode], with a JSON sidecar
/// {"dtype": "float32", "shape": [seeds, episodes], "order": "C"}.
void write_curves(const std::filesystem::path& path, const std::vector<std::vector<int>>& curves);

}  // namespace reward_align::io
