#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "reward_align/json_io.hpp"

namespace reward_align::service {

using json = nlohmann::json;

/// A trajectory set as stored: trajectories plus their distributions (point
/// masses unless a distributions file sits next to the set).
struct TrajectorySet {
  std::string id;
  TrajectoryStore store;
  DistributionSet dists;
};

/// {"expected_returns": {id: v}, "order": [[ids]] best group first,
/// "rank": {id: 1 + number of strictly better items}} over every distribution.
json ranking_payload(const DistributionSet& dists, const TrajectoryStore& store,
                     const io::AnyReward& reward, double tie_tol = kDefaultTieTolerance);

/// Request-independent core of the preference service. All state lives under
/// `root`:
///   trajectory_sets/<id>.jsonl            trajectories
///   trajectory_sets/<id>.distributions.json  optional
///   rewards/<id>.json
///   sessions/<sid>/session.json           metadata snapshot
///   sessions/<sid>/preferences.jsonl      append-only relation log
/// Reads go to disk every time, so a restarted service sees identical state.
class SessionService {
 public:
  explicit SessionService(std::filesystem::path root, double tie_tol = kDefaultTieTolerance);

  const std::filesystem::path& root() const noexcept { return root_; }

  // Store management (used by the CLI and tests).
  void put_trajectory_set(const std::string& id, const std::vector<Trajectory>& trajectories);
  void put_reward(const std::string& id, const io::AnyReward& reward);
  TrajectorySet load_set(const std::string& id) const;
  io::AnyReward load_reward(const std::string& id) const;
  std::vector<std::string> list_rewards() const;

  json trajectories(const std::string& set_id) const;
  /// Expected returns, tie groups (best first) and competition rank positions.
  json rankings(const std::string& set_id, const std::string& reward_id) const;

  /// body: {"trajectory_set": id, "candidate_rewards": [ids]}.
  json create_session(const json& body);
  json session(const std::string& session_id) const;
  /// The human dataset entered so far.
  PreferenceDataset human_dataset(const std::string& session_id) const;
  json preferences(const std::string& session_id) const;

  /// body: {"i", "j", "rel", "client_id"?}. A repeated client_id returns the
  /// stored entry unchanged. Throws DuplicatePair or TransitivityViolation.
  json append_preference(const std::string& session_id, const json& body);

  TacReport tac(const std::string& session_id, const std::string& reward_id) const;

  /// Side-by-side rankings; TAC reports are included when `session_id` is set.
  json compare(const std::string& set_id, const std::string& reward_a,
               const std::string& reward_b, const std::string& session_id = {}) const;

 private:
  std::filesystem::path session_dir(const std::string& session_id) const;
  std::shared_ptr<std::mutex> session_lock(const std::string& session_id);

  std::filesystem::path root_;
  double tie_tol_;
  std::mutex locks_mutex_;
  std::unordered_map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::mutex create_mutex_;
};

/// HTTP status for a typed error.
int http_status(const Error& e) noexcept;

/// {"error": code, "message": ..., ["cycle": [...]]}.
json error_body(const Error& e);

/// The /api routes plus static files from `static_dir` (if non-empty) at /.
class HttpServer {
 public:
  HttpServer(SessionService& service, std::filesystem::path static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace reward_align::service
