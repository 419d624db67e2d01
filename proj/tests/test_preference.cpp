#include <gtest/gtest.h>

#include <map>

#include "reward_align/fixtures.hpp"
#include "reward_align/preference.hpp"

namespace ra = reward_align;
using ra::Action;
using ra::PairRelation;
using ra::Relation;
using ra::State;
using ra::Transition;

namespace {

ra::Trajectory line(const std::string& id, int length, State start = {}) {
  std::vector<Transition> steps;
  State s = start;
  for (int t = 0; t < length; ++t) {
    State next = s;
    next.x = (s.x + 1) % 4;
    next.hungry = t % 2 == 0;
    steps.push_back({s, Action::Right, next});
    s = next;
  }
  return {id, "test", std::move(steps)};
}

// Independent consistency oracle: some weak order (integer levels) satisfies
// every relation. Exhaustive over levels^n for small n.
bool consistent_by_enumeration(const std::vector<std::string>& ids,
                               const std::vector<PairRelation>& relations) {
  const std::size_t n = ids.size();
  std::map<std::string, std::size_t> at;
  for (std::size_t k = 0; k < n; ++k) at[ids[k]] = k;
  std::vector<int> level(n, 0);
  while (true) {
    bool ok = true;
    for (const auto& r : relations) {
      const int a = level[at[r.i]];
      const int b = level[at[r.j]];
      if ((r.rel == Relation::Succ && !(a > b)) || (r.rel == Relation::Prec && !(a < b)) ||
          (r.rel == Relation::Indiff && a != b)) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
    std::size_t k = 0;
    while (k < n && ++level[k] == static_cast<int>(n)) level[k++] = 0;
    if (k == n) return false;
  }
}

// Does relation `r` let us step from `from` to `to` along "at least as good"?
std::optional<bool> step_kind(const std::vector<PairRelation>& relations, const std::string& from,
                              const std::string& to) {
  for (const auto& r : relations) {
    if (r.i == from && r.j == to) {
      if (r.rel == Relation::Succ) return true;
      if (r.rel == Relation::Indiff) return false;
    }
    if (r.i == to && r.j == from) {
      if (r.rel == Relation::Prec) return true;
      if (r.rel == Relation::Indiff) return false;
    }
  }
  return std::nullopt;
}

}  // namespace

TEST(Trajectory, RejectsEmptyAndBrokenChains) {
  EXPECT_THROW(ra::Trajectory("t", "c", {}), ra::InvalidData);
  const State a{0, 0}, b{1, 0}, c{2, 0};
  EXPECT_THROW(ra::Trajectory("t", "c", {{a, Action::Right, b}, {c, Action::Right, a}}), ra::InvalidData);
  EXPECT_NO_THROW(ra::Trajectory("t", "c", {{a, Action::Right, b}, {b, Action::Right, c}}));
}

TEST(TrajectoryStore, RejectsDuplicateIdsAndUnknownLookups) {
  ra::TrajectoryStore store;
  store.add(line("a", 2));
  EXPECT_THROW(store.add(line("a", 3)), ra::InvalidData);
  EXPECT_THROW(store.get("missing"), ra::UnknownTrajectory);
  EXPECT_EQ(store.size(), 1u);
}

TEST(TrajectoryDistribution, ValidatesSupportAndMu) {
  ra::TrajectoryStore store;
  store.add(line("a", 2, State{0, 0}));
  store.add(line("b", 2, State{1, 1}));
  EXPECT_THROW(ra::TrajectoryDistribution::create("d", {}, {}, store), ra::EmptySupport);
  EXPECT_THROW(ra::TrajectoryDistribution::create("d", {{"a", 0.5}, {"b", 0.4}},
                                                  {{State{0, 0}, 0.5}, {State{1, 1}, 0.4}}, store),
               ra::InvalidData);
  EXPECT_THROW(ra::TrajectoryDistribution::create("d", {{"zz", 1.0}}, {{State{0, 0}, 1.0}}, store),
               ra::UnknownTrajectory);
  // Declared mu must match the support's start marginal.
  EXPECT_THROW(ra::TrajectoryDistribution::create("d", {{"a", 0.5}, {"b", 0.5}},
                                                  {{State{0, 0}, 1.0}}, store),
               ra::InvalidData);
  const auto d = ra::TrajectoryDistribution::create("d", {{"a", 0.25}, {"b", 0.75}},
                                                    {{State{1, 1}, 0.75}, {State{0, 0}, 0.25}}, store);
  EXPECT_DOUBLE_EQ(d.start_probability(State{0, 0}), 0.25);
  EXPECT_DOUBLE_EQ(d.start_probability(State{1, 1}), 0.75);
  EXPECT_DOUBLE_EQ(d.start_probability(State{3, 3}), 0.0);
  ASSERT_EQ(d.mu().size(), 2u);
  EXPECT_LT(d.mu()[0].state, d.mu()[1].state);
}

TEST(TrajectoryDistribution, MixtureMergesSupportAndMu) {
  ra::TrajectoryStore store;
  store.add(line("a", 2, State{0, 0}));
  store.add(line("b", 2, State{1, 1}));
  const auto pa = ra::TrajectoryDistribution::point_mass(store.get("a"));
  const auto pb = ra::TrajectoryDistribution::point_mass(store.get("b"));
  EXPECT_EQ(pa.id(), "a");
  const auto m = ra::TrajectoryDistribution::mixture("m", pa, pb, 0.9, store);
  EXPECT_DOUBLE_EQ(m.start_probability(State{0, 0}), 0.9);
  EXPECT_NEAR(m.start_probability(State{1, 1}), 0.1, 1e-15);
  EXPECT_FALSE(ra::same_start_distribution(pa, m));
  EXPECT_TRUE(ra::same_start_distribution(m, m));
}

TEST(Returns, DiscountedSumMatchesHandComputation) {
  const State s0{0, 0}, s1{1, 0}, s2{2, 0};
  ra::RewardSpec::Table table{{{s0, Action::Right, s1}, 1.0}, {{s1, Action::Right, s2}, 3.0}};
  const auto r = ra::RewardSpec::tabular(table, 0.5, "r");
  const ra::Trajectory t("t", "c", {{s0, Action::Right, s1}, {s1, Action::Right, s2}});
  EXPECT_DOUBLE_EQ(ra::compute_return(t, r), 1.0 + 0.5 * 3.0);
  const ra::Trajectory gap("g", "c", {{s0, Action::Left, s0}});
  EXPECT_THROW(ra::compute_return(gap, r), ra::MissingRewardEntry);
}

TEST(RewardSpec, GammaMustLieInUnitInterval) {
  EXPECT_THROW(ra::RewardSpec::hungry_thirsty({}, 1.0), ra::InvalidArgument);
  EXPECT_THROW(ra::RewardSpec::hungry_thirsty({}, -0.1), ra::InvalidArgument);
  EXPECT_NO_THROW(ra::RewardSpec::hungry_thirsty({}, 0.0));
  const auto r = ra::RewardSpec::hungry_thirsty({}, 0.5);
  EXPECT_THROW(r.table(), ra::InvalidArgument);
}

TEST(ParameterizedReward, IndexedByNextStatus) {
  const auto r = ra::RewardSpec::hungry_thirsty({-1.0, -2.0, 3.0, 4.0}, 0.9);
  const State s{0, 0, true, false};
  EXPECT_EQ(r.reward({s, Action::Up, State{0, 1, true, true}}), -1.0);
  EXPECT_EQ(r.reward({s, Action::Up, State{0, 1, true, false}}), -2.0);
  EXPECT_EQ(r.reward({s, Action::Up, State{0, 1, false, true}}), 3.0);
  EXPECT_EQ(r.reward({s, Action::Up, State{0, 1, false, false}}), 4.0);
}

TEST(CompareValues, TieToleranceIsInclusive) {
  EXPECT_EQ(ra::compare_values(1.0, 1.0 + 1e-10, 1e-9), Relation::Indiff);
  EXPECT_EQ(ra::compare_values(1.0 + 2e-9, 1.0, 1e-9), Relation::Succ);
  EXPECT_EQ(ra::compare_values(1.0, 1.0 + 2e-9, 1e-9), Relation::Prec);
  EXPECT_EQ(ra::compare_values(1.0, 2.0, 0.0), Relation::Prec);
}

TEST(InducePreference, ToyFixtureOrdering) {
  const auto f = ra::fixtures::toy_driving();
  auto rel = [&](const char* a, const char* b) {
    return ra::induce_preference(f.dists.get(a), f.dists.get(b), f.store, f.reward);
  };
  EXPECT_NEAR(ra::expected_return(f.dists.get("success-crash"), f.store, f.reward), 4.0, 1e-12);
  EXPECT_EQ(rel("success", "success-crash"), Relation::Succ);
  EXPECT_EQ(rel("success-crash", "idle"), Relation::Succ);
  EXPECT_EQ(rel("idle", "crash"), Relation::Succ);
  EXPECT_EQ(rel("crash", "success"), Relation::Prec);
  EXPECT_THROW(ra::induce_preference(f.dists.get("idle"), f.dists.get("crash"), f.store, f.reward, -1.0),
               ra::InvalidArgument);
}

TEST(PreferenceDataset, RejectsSelfAndDuplicatePairs) {
  EXPECT_THROW(ra::PreferenceDataset::human({{"a", "a", Relation::Indiff}}), ra::InvalidData);
  EXPECT_THROW(ra::PreferenceDataset::human({{"a", "b", Relation::Succ}, {"b", "a", Relation::Prec}}),
               ra::DuplicatePair);
}

TEST(PreferenceDataset, ThreeCycleCarriesWitness) {
  try {
    ra::PreferenceDataset::human(
        {{"a", "b", Relation::Succ}, {"b", "c", Relation::Succ}, {"c", "a", Relation::Succ}});
    FAIL() << "cycle not detected";
  } catch (const ra::TransitivityViolation& e) {
    const auto& cycle = e.cycle();
    ASSERT_GE(cycle.size(), 4u);
    EXPECT_EQ(cycle.front(), cycle.back());
  }
}

TEST(PreferenceDataset, IndifferenceChainsContradictingStrictEdge) {
  EXPECT_THROW(ra::PreferenceDataset::human({{"a", "b", Relation::Indiff},
                                              {"b", "c", Relation::Indiff},
                                              {"a", "c", Relation::Succ}}),
               ra::TransitivityViolation);
  EXPECT_NO_THROW(ra::PreferenceDataset::human({{"a", "b", Relation::Indiff},
                                                 {"b", "c", Relation::Indiff},
                                                 {"a", "c", Relation::Indiff}}));
}

TEST(PreferenceDataset, RewardDatasetsSkipTheAudit) {
  EXPECT_NO_THROW(ra::PreferenceDataset(ra::PreferenceSource::reward("r"),
                                        {{"a", "b", Relation::Succ},
                                         {"b", "c", Relation::Succ},
                                         {"c", "a", Relation::Succ}}));
}

// Property: the audit flags exactly the relation sets no weak order satisfies.
TEST(PreferenceCycleProperty, AgreesWithExhaustiveOracle) {
  ra::Rng rng = ra::Rng::stream(11, 0);
  const std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
  int flagged = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto n = 3 + static_cast<std::size_t>(rng.below(3));
    std::vector<PairRelation> relations;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (rng.uniform() < 0.3) continue;
        const auto rel = static_cast<Relation>(rng.below(3));
        relations.push_back({ids[i], ids[j], rel});
      }
    }
    const std::vector<std::string> used(ids.begin(), ids.begin() + static_cast<long>(n));
    const bool consistent = consistent_by_enumeration(used, relations);
    const auto cycle = ra::find_preference_cycle(relations);
    ASSERT_EQ(consistent, !cycle.has_value()) << "trial " << trial;
    if (!cycle) continue;
    ++flagged;
    // The witness walks along "at least as good" steps with a strict one in it.
    ASSERT_EQ(cycle->front(), cycle->back());
    bool any_strict = false;
    for (std::size_t k = 0; k + 1 < cycle->size(); ++k) {
      const auto kind = step_kind(relations, (*cycle)[k], (*cycle)[k + 1]);
      ASSERT_TRUE(kind.has_value()) << (*cycle)[k] << " -> " << (*cycle)[k + 1];
      any_strict = any_strict || *kind;
    }
    EXPECT_TRUE(any_strict);
  }
  EXPECT_GT(flagged, 20);
}

TEST(BuildRewardDataset, KeepsOrderAndOrientation) {
  const auto f = ra::fixtures::toy_driving();
  const auto data = ra::build_reward_dataset(f.human, f.dists, f.store, f.reward, "toy");
  ASSERT_EQ(data.size(), f.human.size());
  EXPECT_EQ(data.source(), ra::PreferenceSource::reward("toy"));
  for (std::size_t k = 0; k < data.size(); ++k) {
    EXPECT_EQ(data.relations()[k].i, f.human.relations()[k].i);
    EXPECT_EQ(data.relations()[k].j, f.human.relations()[k].j);
  }
  // idle vs success-crash is the one pair the reward reverses.
  EXPECT_EQ(data.relations()[3].i, "idle");
  EXPECT_EQ(data.relations()[3].rel, Relation::Prec);
}

TEST(PreferenceSource, LabelRoundTrip) {
  EXPECT_EQ(ra::PreferenceSource::human().label(), "human");
  EXPECT_EQ(ra::PreferenceSource::reward("r1").label(), "reward:r1");
  EXPECT_EQ(ra::PreferenceSource::parse("reward:r1"), ra::PreferenceSource::reward("r1"));
  EXPECT_THROW(ra::PreferenceSource::parse("alien"), ra::InvalidData);
}

TEST(Relation, SymbolsAndFlip) {
  for (auto r : {Relation::Succ, Relation::Prec, Relation::Indiff}) {
    EXPECT_EQ(ra::parse_relation(std::string(1, ra::relation_symbol(r))), r);
    EXPECT_EQ(ra::flip(ra::flip(r)), r);
  }
  EXPECT_EQ(ra::flip(Relation::Succ), Relation::Prec);
  EXPECT_EQ(ra::normalized({"b", "a", Relation::Succ}), (PairRelation{"a", "b", Relation::Prec}));
}

TEST(FullRankingRelations, AllPairsInIndexOrder) {
  const std::vector<std::string> ids = {"x", "y", "z"};
  const std::vector<double> v = {1.0, 3.0, 1.0};
  const auto rel = ra::full_ranking_relations(ids, v);
  ASSERT_EQ(rel.size(), 3u);
  EXPECT_EQ(rel[0], (PairRelation{"x", "y", Relation::Prec}));
  EXPECT_EQ(rel[1], (PairRelation{"x", "z", Relation::Indiff}));
  EXPECT_EQ(rel[2], (PairRelation{"y", "z", Relation::Succ}));
}
