#include "reward_align/preference.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_set>

#include "reward_align/hungry_thirsty.hpp"

namespace reward_align {

namespace {

constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "Up", "Down", "Left", "Right", "Eat", "Drink"};

std::string pair_key(const std::string& a, const std::string& b) {
  const auto& lo = a < b ? a : b;
  const auto& hi = a < b ? b : a;
  std::string key;
  key.reserve(lo.size() + hi.size() + 1);
  key.append(lo).push_back('\x1f');
  key.append(hi);
  return key;
}

void validate_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw InvalidArgument("gamma must lie in [0, 1), got " + std::to_string(gamma));
  }
}

std::vector<StateMass> canonical_mu(std::vector<StateMass> mu) {
  std::sort(mu.begin(), mu.end(),
            [](const StateMass& a, const StateMass& b) { return a.state < b.state; });
  std::vector<StateMass> out;
  for (const auto& m : mu) {
    if (!out.empty() && out.back().state == m.state) {
      out.back().probability += m.probability;
    } else {
      out.push_back(m);
    }
  }
  return out;
}

std::vector<StateMass> support_marginal(std::span<const WeightedTrajectory> support,
                                        const TrajectoryStore& store) {
  std::vector<StateMass> mu;
  mu.reserve(support.size());
  for (const auto& w : support) {
    mu.push_back({store.get(w.trajectory_id).start(), w.probability});
  }
  auto out = canonical_mu(std::move(mu));
  std::erase_if(out, [](const StateMass& m) { return m.probability == 0.0; });
  return out;
}

void validate_support(const std::string& id,
                      std::span<const WeightedTrajectory> support,
                      const TrajectoryStore& store) {
  if (support.empty()) {
    throw EmptySupport("distribution '" + id + "' has empty support");
  }
  double total = 0.0;
  for (const auto& w : support) {
    if (!(w.probability >= 0.0 && w.probability <= 1.0)) {
      throw InvalidData("distribution '" + id + "': probability outside [0,1]");
    }
    if (!store.contains(w.trajectory_id)) {
      throw UnknownTrajectory("distribution '" + id +
                              "' references unknown trajectory '" +
                              w.trajectory_id + "'");
    }
    total += w.probability;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "distribution '" << id << "': support sums to " << total;
    throw InvalidData(msg.str());
  }
}

}  // namespace

std::string_view action_name(Action a) noexcept {
  return kActionNames[action_index(a)];
}

std::optional<Action> parse_action(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumActions; ++i) {
    if (kActionNames[i] == name) return kAllActions[i];
  }
  return std::nullopt;
}

std::string to_string(const State& s) {
  std::ostringstream out;
  out << '(' << s.x << ',' << s.y << ',' << (s.hungry ? "hungry" : "fed") << ','
      << (s.thirsty ? "thirsty" : "quenched") << ')';
  return out.str();
}

Trajectory::Trajectory(std::string id, std::string config_id,
                       std::vector<Transition> steps)
    : id_(std::move(id)), config_id_(std::move(config_id)), steps_(std::move(steps)) {
  if (steps_.empty()) {
    throw InvalidData("trajectory '" + id_ + "' has no transitions");
  }
  for (std::size_t t = 1; t < steps_.size(); ++t) {
    if (steps_[t].s != steps_[t - 1].next) {
      throw InvalidData("trajectory '" + id_ + "' breaks its chain at step " +
                        std::to_string(t));
    }
  }
}

void TrajectoryStore::add(Trajectory trajectory) {
  const std::string id = trajectory.id();
  if (items_.contains(id)) {
    throw InvalidData("duplicate trajectory id '" + id + "'");
  }
  items_.emplace(id, std::move(trajectory));
  order_.push_back(id);
}

const Trajectory& TrajectoryStore::get(const std::string& id) const {
  auto it = items_.find(id);
  if (it == items_.end()) throw UnknownTrajectory("unknown trajectory '" + id + "'");
  return it->second;
}

bool TrajectoryStore::contains(const std::string& id) const noexcept {
  return items_.contains(id);
}

TrajectoryDistribution TrajectoryDistribution::create(
    std::string id, std::vector<WeightedTrajectory> support,
    std::vector<StateMass> mu, const TrajectoryStore& store) {
  validate_support(id, support, store);
  const auto marginal = support_marginal(support, store);
  auto declared = canonical_mu(std::move(mu));
  // Every state in either list must agree within tolerance.
  auto mass_in = [](const std::vector<StateMass>& v, const State& s) {
    auto it = std::lower_bound(
        v.begin(), v.end(), s,
        [](const StateMass& m, const State& key) { return m.state < key; });
    return (it != v.end() && it->state == s) ? it->probability : 0.0;
  };
  for (const auto& m : declared) {
    if (!(m.probability >= 0.0)) {
      throw InvalidData("distribution '" + id + "': negative mu mass");
    }
    if (std::abs(m.probability - mass_in(marginal, m.state)) > kProbabilityTolerance) {
      throw InvalidData("distribution '" + id + "': mu disagrees with the support at " +
                        to_string(m.state));
    }
  }
  for (const auto& m : marginal) {
    if (std::abs(m.probability - mass_in(declared, m.state)) > kProbabilityTolerance) {
      throw InvalidData("distribution '" + id + "': mu is missing start state " +
                        to_string(m.state));
    }
  }
  std::erase_if(declared, [](const StateMass& m) { return m.probability == 0.0; });

  TrajectoryDistribution d;
  d.id_ = std::move(id);
  d.support_ = std::move(support);
  d.mu_ = std::move(declared);
  return d;
}

TrajectoryDistribution TrajectoryDistribution::with_derived_mu(
    std::string id, std::vector<WeightedTrajectory> support,
    const TrajectoryStore& store) {
  validate_support(id, support, store);
  TrajectoryDistribution d;
  d.mu_ = support_marginal(support, store);
  d.id_ = std::move(id);
  d.support_ = std::move(support);
  return d;
}

TrajectoryDistribution TrajectoryDistribution::point_mass(const Trajectory& trajectory) {
  TrajectoryDistribution d;
  d.id_ = trajectory.id();
  d.support_ = {{trajectory.id(), 1.0}};
  d.mu_ = {{trajectory.start(), 1.0}};
  return d;
}

TrajectoryDistribution TrajectoryDistribution::mixture(
    std::string id, const TrajectoryDistribution& a, const TrajectoryDistribution& b,
    double weight, const TrajectoryStore& store) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw InvalidArgument("mixture weight must lie in [0, 1]");
  }
  std::vector<WeightedTrajectory> merged;
  auto add = [&](const WeightedTrajectory& w, double scale) {
    for (auto& m : merged) {
      if (m.trajectory_id == w.trajectory_id) {
        m.probability += scale * w.probability;
        return;
      }
    }
    merged.push_back({w.trajectory_id, scale * w.probability});
  };
  for (const auto& w : a.support()) add(w, weight);
  for (const auto& w : b.support()) add(w, 1.0 - weight);
  return with_derived_mu(std::move(id), std::move(merged), store);
}

double TrajectoryDistribution::start_probability(const State& s) const noexcept {
  for (const auto& m : mu_) {
    if (m.state == s) return m.probability;
  }
  return 0.0;
}

bool same_start_distribution(const TrajectoryDistribution& a,
                             const TrajectoryDistribution& b, double tol) {
  for (const auto& m : a.mu()) {
    if (std::abs(m.probability - b.start_probability(m.state)) > tol) return false;
  }
  for (const auto& m : b.mu()) {
    if (std::abs(m.probability - a.start_probability(m.state)) > tol) return false;
  }
  return true;
}

void DistributionSet::add(TrajectoryDistribution dist) {
  const std::string id = dist.id();
  if (items_.contains(id)) throw InvalidData("duplicate distribution id '" + id + "'");
  items_.emplace(id, std::move(dist));
  order_.push_back(id);
}

const TrajectoryDistribution& DistributionSet::get(const std::string& id) const {
  auto it = items_.find(id);
  if (it == items_.end()) {
    throw UnknownDistribution("unknown distribution '" + id + "'");
  }
  return it->second;
}

bool DistributionSet::contains(const std::string& id) const noexcept {
  return items_.contains(id);
}

RewardSpec::RewardSpec(RewardKind kind, double gamma, std::string id)
    : kind_(kind), gamma_(gamma), id_(std::move(id)) {
  validate_gamma(gamma_);
}

RewardSpec RewardSpec::hungry_thirsty(RewardParams params, double gamma, std::string id) {
  RewardSpec r(RewardKind::HungryThirstyParams, gamma, std::move(id));
  r.params_ = params;
  return r;
}

RewardSpec RewardSpec::tabular(Table table, double gamma, std::string id) {
  RewardSpec r(RewardKind::Tabular, gamma, std::move(id));
  r.table_ = std::move(table);
  return r;
}

const RewardParams& RewardSpec::params() const {
  if (kind_ != RewardKind::HungryThirstyParams) {
    throw InvalidArgument("reward '" + id_ + "' is not parameterized");
  }
  return params_;
}

const RewardSpec::Table& RewardSpec::table() const {
  if (kind_ != RewardKind::Tabular) {
    throw InvalidArgument("reward '" + id_ + "' is not tabular");
  }
  return table_;
}

RewardSpec RewardSpec::with_id(std::string id) const {
  RewardSpec copy = *this;
  copy.id_ = std::move(id);
  return copy;
}

double RewardSpec::reward(const Transition& t) const {
  if (kind_ == RewardKind::HungryThirstyParams) return ht::reward_of(t.next, params_);
  auto it = table_.find(t);
  if (it == table_.end()) {
    throw MissingRewardEntry("no reward for (" + to_string(t.s) + ", " +
                             std::string(action_name(t.a)) + ", " +
                             to_string(t.next) + ")");
  }
  return it->second;
}

double compute_return(const Trajectory& trajectory, const RewardSpec& reward) {
  const double gamma = reward.gamma();
  double discount = 1.0;
  double total = 0.0;
  for (const auto& t : trajectory.steps()) {
    total += discount * reward.reward(t);
    discount *= gamma;
  }
  return total;
}

Relation flip(Relation r) noexcept {
  switch (r) {
    case Relation::Succ: return Relation::Prec;
    case Relation::Prec: return Relation::Succ;
    case Relation::Indiff: return Relation::Indiff;
  }
  return r;
}

char relation_symbol(Relation r) noexcept {
  switch (r) {
    case Relation::Succ: return '>';
    case Relation::Prec: return '<';
    case Relation::Indiff: return '~';
  }
  return '?';
}

std::optional<Relation> parse_relation(std::string_view symbol) noexcept {
  if (symbol == ">") return Relation::Succ;
  if (symbol == "<") return Relation::Prec;
  if (symbol == "~") return Relation::Indiff;
  return std::nullopt;
}

Relation compare_values(double ei, double ej, double tie_tol) {
  if (ei - ej > tie_tol) return Relation::Succ;
  if (ej - ei > tie_tol) return Relation::Prec;
  return Relation::Indiff;
}

PairRelation normalized(const PairRelation& p) {
  if (p.i <= p.j) return p;
  return {p.j, p.i, flip(p.rel)};
}

std::string PreferenceSource::label() const {
  return kind == Kind::Human ? std::string("human") : "reward:" + reward_id;
}

PreferenceSource PreferenceSource::parse(std::string_view label) {
  if (label == "human" || label.empty()) return human();
  constexpr std::string_view prefix = "reward:";
  if (label.starts_with(prefix)) return reward(std::string(label.substr(prefix.size())));
  if (label == "reward") return reward({});
  throw InvalidData("unknown preference source '" + std::string(label) + "'");
}

std::optional<std::vector<std::string>> find_preference_cycle(
    std::span<const PairRelation> relations) {
  // Graph over ids: better -> worse for strict relations, both ways for Indiff.
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> names;
  auto node = [&](const std::string& id) {
    auto [it, inserted] = index.try_emplace(id, names.size());
    if (inserted) names.push_back(id);
    return it->second;
  };
  struct Edge {
    std::size_t to;
    bool strict;
  };
  std::vector<std::vector<Edge>> adj;
  std::vector<std::pair<std::size_t, std::size_t>> strict_edges;
  for (const auto& r : relations) {
    const std::size_t a = node(r.i);
    const std::size_t b = node(r.j);
    adj.resize(names.size());
    switch (r.rel) {
      case Relation::Succ:
        adj[a].push_back({b, true});
        strict_edges.emplace_back(a, b);
        break;
      case Relation::Prec:
        adj[b].push_back({a, true});
        strict_edges.emplace_back(b, a);
        break;
      case Relation::Indiff:
        adj[a].push_back({b, false});
        adj[b].push_back({a, false});
        break;
    }
  }
  const std::size_t n = names.size();
  adj.resize(n);

  // Tarjan SCC, iterative.
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> idx(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t counter = 0, ncomp = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (idx[root] != kUnset) continue;
    std::vector<std::pair<std::size_t, std::size_t>> call{{root, 0}};
    idx[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, next_edge] = call.back();
      if (next_edge < adj[v].size()) {
        const std::size_t w = adj[v][next_edge++].to;
        if (idx[w] == kUnset) {
          idx[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], idx[w]);
        }
        continue;
      }
      if (low[v] == idx[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      const std::size_t finished = v;
      call.pop_back();
      if (!call.empty()) {
        low[call.back().first] = std::min(low[call.back().first], low[finished]);
      }
    }
  }

  for (const auto& [a, b] : strict_edges) {
    if (comp[a] != comp[b]) continue;
    // BFS b -> a inside the component closes the cycle a -> b -> ... -> a.
    std::vector<std::size_t> parent(n, kUnset);
    std::deque<std::size_t> queue{b};
    parent[b] = b;
    while (!queue.empty() && parent[a] == kUnset) {
      const std::size_t v = queue.front();
      queue.pop_front();
      for (const auto& e : adj[v]) {
        if (comp[e.to] == comp[a] && parent[e.to] == kUnset) {
          parent[e.to] = v;
          queue.push_back(e.to);
        }
      }
    }
    std::vector<std::string> path;
    for (std::size_t v = a; v != b; v = parent[v]) path.push_back(names[v]);
    path.push_back(names[b]);
    std::reverse(path.begin(), path.end());
    std::vector<std::string> cycle{names[a]};
    cycle.insert(cycle.end(), path.begin(), path.end());
    return cycle;
  }
  return std::nullopt;
}

PreferenceDataset::PreferenceDataset(PreferenceSource source,
                                     std::vector<PairRelation> relations)
    : source_(std::move(source)), relations_(std::move(relations)) {
  std::unordered_set<std::string> seen;
  seen.reserve(relations_.size() * 2);
  for (const auto& r : relations_) {
    if (r.i == r.j) throw InvalidData("self-comparison of '" + r.i + "'");
    if (!seen.insert(pair_key(r.i, r.j)).second) {
      throw DuplicatePair("pair {" + r.i + ", " + r.j + "} appears twice");
    }
  }
  if (source_.kind == PreferenceSource::Kind::Human) {
    if (auto cycle = find_preference_cycle(relations_)) {
      std::string text;
      for (const auto& id : *cycle) text += (text.empty() ? "" : " -> ") + id;
      throw TransitivityViolation("preference cycle: " + text, std::move(*cycle));
    }
  }
}

std::vector<std::pair<std::string, std::string>> PreferenceDataset::pair_set() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(relations_.size());
  for (const auto& r : relations_) {
    out.emplace_back(std::min(r.i, r.j), std::max(r.i, r.j));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PairRelation> full_ranking_relations(std::span<const std::string> ids,
                                                 std::span<const double> values,
                                                 double tie_tol) {
  if (ids.size() != values.size()) {
    throw InvalidArgument("ids and values differ in length");
  }
  std::vector<PairRelation> out;
  out.reserve(ids.size() * (ids.size() - (ids.empty() ? 0 : 1)) / 2);
  for (std::size_t a = 0; a < ids.size(); ++a) {
    for (std::size_t b = a + 1; b < ids.size(); ++b) {
      out.push_back({ids[a], ids[b], compare_values(values[a], values[b], tie_tol)});
    }
  }
  return out;
}

}  // namespace reward_align
