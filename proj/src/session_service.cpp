#include "reward_align/session_service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>

#include <httplib.h>

namespace reward_align::service {

namespace fs = std::filesystem;

namespace {

void check_id(const std::string& id, const char* what) {
  const bool ok = !id.empty() && id.size() <= 128 && id.front() != '.' &&
                  std::all_of(id.begin(), id.end(), [](unsigned char c) {
                    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
                  });
  if (!ok) throw InvalidArgument(std::string("invalid ") + what + " id '" + id + "'");
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string iso_utc(std::int64_t ms) {
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms % 1000));
  return out;
}

std::vector<double> reward_values(const DistributionSet& dists, const TrajectoryStore& store,
                                  const io::AnyReward& reward) {
  return std::visit(
      [&](const auto& model) {
        std::vector<double> out;
        for (const auto& id : dists.ids()) out.push_back(expected_return(dists.get(id), store, model));
        return out;
      },
      reward);
}

double expected_eval_return(const TrajectorySet& set, const TrajectoryDistribution& d) {
  double total = 0.0;
  for (const auto& w : d.support()) {
    total += w.probability * ht::eval_return(set.store.get(w.trajectory_id));
  }
  return total;
}

}  // namespace

json ranking_payload(const DistributionSet& dists, const TrajectoryStore& store,
                     const io::AnyReward& reward, double tie_tol) {
  const auto values = reward_values(dists, store, reward);
  const auto ids = dists.ids();
  std::vector<std::size_t> order(ids.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  // A new tie group starts once an item is strictly worse than the group's first.
  json groups = json::array();
  std::size_t leader = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || compare_values(values[leader], values[order[k]], tie_tol) == Relation::Succ) {
      groups.push_back(json::array());
      leader = order[k];
    }
    groups.back().push_back(ids[order[k]]);
  }
  json expected = json::object();
  json rank = json::object();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    expected[ids[k]] = values[k];
    int better = 0;
    for (std::size_t m = 0; m < ids.size(); ++m) {
      if (compare_values(values[m], values[k], tie_tol) == Relation::Succ) ++better;
    }
    rank[ids[k]] = 1 + better;
  }
  return {{"expected_returns", std::move(expected)}, {"order", std::move(groups)},
          {"rank", std::move(rank)}};
}

SessionService::SessionService(fs::path root, double tie_tol)
    : root_(std::move(root)), tie_tol_(tie_tol) {
  fs::create_directories(root_ / "trajectory_sets");
  fs::create_directories(root_ / "rewards");
  fs::create_directories(root_ / "sessions");
}

void SessionService::put_trajectory_set(const std::string& id,
                                        const std::vector<Trajectory>& trajectories) {
  check_id(id, "trajectory set");
  io::save_trajectories(root_ / "trajectory_sets" / (id + ".jsonl"), trajectories);
}

void SessionService::put_reward(const std::string& id, const io::AnyReward& reward) {
  check_id(id, "reward");
  auto j = io::to_json(reward);
  j["id"] = id;
  io::write_json_file(root_ / "rewards" / (id + ".json"), j);
}

TrajectorySet SessionService::load_set(const std::string& id) const {
  check_id(id, "trajectory set");
  const auto path = root_ / "trajectory_sets" / (id + ".jsonl");
  if (!fs::exists(path)) throw NotFound("unknown trajectory set '" + id + "'");
  TrajectorySet set;
  set.id = id;
  set.store = io::load_trajectories(path);
  set.dists = io::load_distributions(root_ / "trajectory_sets" / (id + ".distributions.json"),
                                     set.store);
  return set;
}

io::AnyReward SessionService::load_reward(const std::string& id) const {
  check_id(id, "reward");
  const auto path = root_ / "rewards" / (id + ".json");
  if (!fs::exists(path)) throw NotFound("unknown reward '" + id + "'");
  auto reward = io::load_reward(path);
  if (auto* plain = std::get_if<RewardSpec>(&reward)) return plain->with_id(id);
  const auto& shaped = std::get<ShapedRewardSpec>(reward);
  return ShapedRewardSpec(shaped.base().with_id(id), shaped.phi(), shaped.horizon_mode());
}

std::vector<std::string> SessionService::list_rewards() const {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root_ / "rewards")) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

json SessionService::trajectories(const std::string& set_id) const {
  const auto set = load_set(set_id);
  json items = json::array();
  for (const auto& id : set.store.ids()) {
    const auto& t = set.store.get(id);
    auto j = io::to_json(t);
    j["eval_return"] = ht::eval_return(t);
    items.push_back(std::move(j));
  }
  json dists = json::array();
  for (const auto& id : set.dists.ids()) dists.push_back(io::to_json(set.dists.get(id)));
  return {{"set", set_id}, {"trajectories", std::move(items)}, {"distributions", std::move(dists)}};
}

json SessionService::rankings(const std::string& set_id, const std::string& reward_id) const {
  const auto set = load_set(set_id);
  auto out = ranking_payload(set.dists, set.store, load_reward(reward_id), tie_tol_);
  out["set"] = set_id;
  out["reward"] = reward_id;
  return out;
}

fs::path SessionService::session_dir(const std::string& session_id) const {
  check_id(session_id, "session");
  auto dir = root_ / "sessions" / session_id;
  if (!fs::exists(dir / "session.json")) throw NotFound("unknown session '" + session_id + "'");
  return dir;
}

std::shared_ptr<std::mutex> SessionService::session_lock(const std::string& session_id) {
  std::lock_guard guard(locks_mutex_);
  auto& slot = locks_[session_id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

json SessionService::create_session(const json& body) {
  const auto set_id = body.value("trajectory_set", std::string{});
  if (set_id.empty()) throw InvalidArgument("trajectory_set is required");
  load_set(set_id);
  std::vector<std::string> rewards;
  if (body.contains("candidate_rewards")) {
    if (!body["candidate_rewards"].is_array()) {
      throw InvalidData("candidate_rewards must be an array");
    }
    for (const auto& r : body["candidate_rewards"]) {
      if (!r.is_string()) throw InvalidData("candidate_rewards must hold strings");
      load_reward(r.get<std::string>());
      rewards.push_back(r.get<std::string>());
    }
  }
  std::lock_guard guard(create_mutex_);
  std::string id;
  for (int n = 1;; ++n) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "s%06d", n);
    if (!fs::exists(root_ / "sessions" / buf)) {
      id = buf;
      break;
    }
  }
  const auto dir = root_ / "sessions" / id;
  fs::create_directories(dir);
  std::ofstream(dir / "preferences.jsonl").flush();
  const json meta = {{"id", id},
                     {"created_at", iso_utc(now_ms())},
                     {"trajectory_set", set_id},
                     {"candidate_rewards", rewards}};
  io::write_json_file(dir / "session.json", meta);
  return session(id);
}

json SessionService::session(const std::string& session_id) const {
  const auto dir = session_dir(session_id);
  auto meta = io::read_json_file(dir / "session.json");
  const auto set = load_set(meta.at("trajectory_set").get<std::string>());
  const auto n = static_cast<std::int64_t>(set.dists.size());
  const auto entered = static_cast<std::int64_t>(io::read_jsonl_file(dir / "preferences.jsonl").size());
  meta["relation_count"] = entered;
  meta["pair_count"] = n * (n - 1) / 2;
  meta["status"] = entered >= n * (n - 1) / 2 ? "complete" : "collecting";
  return meta;
}

PreferenceDataset SessionService::human_dataset(const std::string& session_id) const {
  const auto rows = io::read_jsonl_file(session_dir(session_id) / "preferences.jsonl");
  std::vector<PairRelation> relations;
  for (const auto& row : rows) relations.push_back(io::relation_from_json(row));
  return PreferenceDataset::human(std::move(relations));
}

json SessionService::preferences(const std::string& session_id) const {
  const auto rows = io::read_jsonl_file(session_dir(session_id) / "preferences.jsonl");
  return {{"session", session_id}, {"relations", rows}};
}

json SessionService::append_preference(const std::string& session_id, const json& body) {
  const auto dir = session_dir(session_id);
  const auto lock = session_lock(session_id);
  std::lock_guard guard(*lock);

  const auto incoming = io::relation_from_json(body);
  const auto client_id = body.value("client_id", std::string{});
  const auto meta = io::read_json_file(dir / "session.json");
  const auto set = load_set(meta.at("trajectory_set").get<std::string>());
  for (const auto* id : {&incoming.i, &incoming.j}) {
    if (!set.dists.contains(*id)) {
      throw UnknownDistribution("'" + *id + "' is not in trajectory set '" + set.id + "'");
    }
  }

  const auto log = dir / "preferences.jsonl";
  const auto rows = io::read_jsonl_file(log);
  if (!client_id.empty()) {
    for (const auto& row : rows) {
      if (row.value("client_id", std::string{}) == client_id) return row;
    }
  }
  std::vector<PairRelation> relations;
  for (const auto& row : rows) relations.push_back(io::relation_from_json(row));
  relations.push_back(incoming);
  PreferenceDataset::human(relations);  // duplicate and transitivity audit

  std::int64_t stamp = now_ms();
  if (!rows.empty()) stamp = std::max(stamp, rows.back().value("timestamp_ms", std::int64_t{0}));
  json entry = io::to_json(incoming, PreferenceSource::human());
  entry["seq"] = static_cast<std::int64_t>(rows.size()) + 1;
  entry["timestamp_ms"] = stamp;
  entry["timestamp"] = iso_utc(stamp);
  if (!client_id.empty()) entry["client_id"] = client_id;
  io::append_jsonl_line(log, entry);
  return entry;
}

TacReport SessionService::tac(const std::string& session_id, const std::string& reward_id) const {
  const auto meta = io::read_json_file(session_dir(session_id) / "session.json");
  const auto set = load_set(meta.at("trajectory_set").get<std::string>());
  const auto reward = load_reward(reward_id);
  const auto human = human_dataset(session_id);
  const auto data = std::visit(
      [&](const auto& model) {
        return build_reward_dataset(human, set.dists, set.store, model, reward_id, tie_tol_);
      },
      reward);
  return reward_align::tac(human, data);
}

json SessionService::compare(const std::string& set_id, const std::string& reward_a,
                             const std::string& reward_b, const std::string& session_id) const {
  const auto set = load_set(set_id);
  auto ra = rankings(set_id, reward_a);
  auto rb = rankings(set_id, reward_b);

  std::optional<PreferenceDataset> human;
  if (!session_id.empty()) {
    const auto meta = io::read_json_file(session_dir(session_id) / "session.json");
    if (meta.at("trajectory_set").get<std::string>() != set_id) {
      throw InvalidArgument("session '" + session_id + "' uses a different trajectory set");
    }
    human = human_dataset(session_id);
  }

  json items = json::array();
  for (const auto& id : set.dists.ids()) {
    json item = {{"id", id},
                 {"eval_return", expected_eval_return(set, set.dists.get(id))},
                 {"rank_a", ra["rank"][id]},
                 {"rank_b", rb["rank"][id]}};
    if (human) {
      int above = 0;
      for (const auto& r : human->relations()) {
        if ((r.j == id && r.rel == Relation::Succ) || (r.i == id && r.rel == Relation::Prec)) {
          ++above;
        }
      }
      item["human_rank"] = 1 + above;
    }
    items.push_back(std::move(item));
  }
  json out = {{"set", set_id}, {"reward_a", std::move(ra)}, {"reward_b", std::move(rb)},
              {"items", std::move(items)}};
  if (human) {
    out["session"] = session_id;
    out["tac_a"] = io::to_json(tac(session_id, reward_a));
    out["tac_b"] = io::to_json(tac(session_id, reward_b));
  }
  return out;
}

int http_status(const Error& e) noexcept {
  const auto& code = e.code();
  if (code == "NotFound" || code == "UnknownTrajectory" || code == "UnknownDistribution") return 404;
  if (code == "DuplicatePair" || code == "TransitivityViolation") return 409;
  if (code == "DegenerateDenominator") return 422;
  if (code == "IoError") return 500;
  return 400;
}

json error_body(const Error& e) {
  json out = {{"error", e.code()}, {"message", e.what()}};
  if (const auto* tv = dynamic_cast<const TransitivityViolation*>(&e)) out["cycle"] = tv->cycle();
  return out;
}

struct HttpServer::Impl {
  SessionService& service;
  httplib::Server server;

  explicit Impl(SessionService& s) : service(s) {}
};

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

std::string required_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) {
    throw InvalidArgument(std::string("missing query parameter '") + name + "'");
  }
  return req.get_param_value(name);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw InvalidData("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw InvalidData(std::string("request body is not JSON: ") + e.what());
  }
}

// Runs a handler and converts typed failures into JSON error responses.
template <typename F>
httplib::Server::Handler wrap(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_json(res, error_body(e), http_status(e));
    } catch (const std::exception& e) {
      send_json(res, {{"error", "Internal"}, {"message", e.what()}}, 500);
    }
  };
}

}  // namespace

HttpServer::HttpServer(SessionService& service, fs::path static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;

  srv.Get("/api/trajectories", wrap([&svc](const auto& req, auto& res) {
            send_json(res, svc.trajectories(required_param(req, "set")));
          }));
  srv.Get("/api/rewards", wrap([&svc](const auto&, auto& res) {
            send_json(res, {{"rewards", svc.list_rewards()}});
          }));
  srv.Get("/api/rankings", wrap([&svc](const auto& req, auto& res) {
            send_json(res, svc.rankings(required_param(req, "set"), required_param(req, "reward")));
          }));
  srv.Post("/api/sessions", wrap([&svc](const auto& req, auto& res) {
             send_json(res, svc.create_session(parse_body(req)), 201);
           }));
  srv.Get(R"(/api/sessions/([^/]+))", wrap([&svc](const auto& req, auto& res) {
            send_json(res, svc.session(req.matches[1].str()));
          }));
  srv.Get(R"(/api/sessions/([^/]+)/preferences)", wrap([&svc](const auto& req, auto& res) {
            send_json(res, svc.preferences(req.matches[1].str()));
          }));
  srv.Post(R"(/api/sessions/([^/]+)/preferences)", wrap([&svc](const auto& req, auto& res) {
             send_json(res, svc.append_preference(req.matches[1].str(), parse_body(req)), 201);
           }));
  srv.Get(R"(/api/sessions/([^/]+)/tac)", wrap([&svc](const auto& req, auto& res) {
            const auto report = svc.tac(req.matches[1].str(), required_param(req, "reward"));
            auto body = io::to_json(report);
            if (report.defined()) {
              send_json(res, body);
            } else {
              body["error"] = "DegenerateDenominator";
              body["message"] = "sigma is undefined (" + report.undefined_reason + ")";
              send_json(res, body, 422);
            }
          }));
  srv.Get("/api/compare", wrap([&svc](const auto& req, auto& res) {
            const auto session = req.has_param("session") ? req.get_param_value("session") : "";
            send_json(res, svc.compare(required_param(req, "set"), required_param(req, "rewardA"),
                                       required_param(req, "rewardB"), session));
          }));
  if (!static_dir.empty() && fs::is_directory(static_dir)) {
    srv.set_mount_point("/", static_dir.string());
  }
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    const int bound = srv.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!srv.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace reward_align::service
