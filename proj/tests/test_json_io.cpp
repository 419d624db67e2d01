#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "reward_align/fixtures.hpp"
#include "reward_align/json_io.hpp"

namespace ra = reward_align;
namespace io = reward_align::io;
namespace fs = std::filesystem;
using io::json;

namespace {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("ra-json-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST(JsonIo, TrajectoryRoundTrip) {
  ra::Rng rng(1);
  const auto t = ra::fixtures::random_walk(rng, "walk", 25);
  const auto back = io::trajectory_from_json(io::to_json(t));
  EXPECT_EQ(back.id(), t.id());
  EXPECT_EQ(back.config_id(), t.config_id());
  ASSERT_EQ(back.length(), t.length());
  for (std::size_t k = 0; k < t.length(); ++k) EXPECT_EQ(back.steps()[k], t.steps()[k]);
}

TEST(JsonIo, TrajectoryRejectsBrokenInput) {
  EXPECT_THROW(io::trajectory_from_json(json{{"id", "x"}}), ra::InvalidData);
  const json bad_action = json::parse(R"({"id":"x","config_id":"c","steps":[
      {"s":{"x":0,"y":0,"hungry":true,"thirsty":false},"a":"Fly",
       "s_next":{"x":0,"y":0,"hungry":true,"thirsty":false}}]})");
  EXPECT_THROW(io::trajectory_from_json(bad_action), ra::InvalidData);
}

TEST(JsonIo, DistributionRoundTripWithAndWithoutMu) {
  const auto toy = ra::fixtures::toy_driving();
  const auto& d = toy.dists.get("success-crash");
  auto j = io::to_json(d);
  const auto back = io::distribution_from_json(j, toy.store);
  ASSERT_EQ(back.support().size(), d.support().size());
  for (std::size_t k = 0; k < d.support().size(); ++k) {
    EXPECT_EQ(back.support()[k].trajectory_id, d.support()[k].trajectory_id);
    EXPECT_EQ(back.support()[k].probability, d.support()[k].probability);
  }
  j.erase("mu");
  const auto derived = io::distribution_from_json(j, toy.store);
  EXPECT_TRUE(ra::same_start_distribution(derived, d));
}

TEST(JsonIo, RelationSymbols) {
  const ra::PairRelation p{"a", "b", ra::Relation::Prec};
  const auto j = io::to_json(p, ra::PreferenceSource::reward("r1"));
  EXPECT_EQ(j["rel"], "<");
  EXPECT_EQ(j["source"], "reward:r1");
  EXPECT_EQ(io::relation_from_json(j), p);
  EXPECT_THROW(io::relation_from_json(json{{"i", "a"}, {"j", "b"}, {"rel", "?"}}), ra::InvalidData);
}

TEST(JsonIo, RewardKindsRoundTrip) {
  const auto params = ra::RewardSpec::hungry_thirsty({-1, 0.5, 2, 3}, 0.9, "p");
  const auto p_back = std::get<ra::RewardSpec>(io::reward_from_json(io::to_json(params)));
  EXPECT_EQ(p_back.params(), params.params());
  EXPECT_EQ(p_back.gamma(), 0.9);
  EXPECT_EQ(p_back.id(), "p");

  const auto toy = ra::fixtures::toy_driving();
  const auto t_back = std::get<ra::RewardSpec>(io::reward_from_json(io::to_json(toy.reward)));
  EXPECT_EQ(t_back.table(), toy.reward.table());

  const auto domain = ra::reward_domain(toy.reward);
  ra::Rng rng(2);
  const auto shaped = ra::shape_reward(toy.reward, ra::PotentialFn::random_uniform(domain, -1, 1, rng),
                                       ra::HorizonMode::LiteralFinite);
  const io::AnyReward any = shaped;
  const auto s_back = std::get<ra::ShapedRewardSpec>(io::reward_from_json(io::to_json(any)));
  EXPECT_EQ(s_back.horizon_mode(), ra::HorizonMode::LiteralFinite);
  EXPECT_EQ(s_back.phi().entries(), shaped.phi().entries());
  EXPECT_EQ(io::reward_id(any), toy.reward.id());

  EXPECT_THROW(io::reward_from_json(json{{"kind", "neural"}, {"gamma", 0.9}}), ra::InvalidData);
}

TEST(JsonIo, EnvConfigRoundTrip) {
  auto c = ra::ht::EnvConfig::random_layout(17);
  c.start_mode = ra::ht::StartMode::Fixed;
  c.start = {2, 1};
  const auto back = io::env_from_json(io::to_json(c));
  EXPECT_EQ(back.id(), c.id());
  EXPECT_EQ(back.thirst_prob, c.thirst_prob);
  EXPECT_EQ(back.max_steps, c.max_steps);
}

TEST(JsonIo, UndefinedTacSerializesAsNull) {
  ra::TacReport r;
  r.undefined_reason = "no pairs";
  const auto j = io::to_json(r);
  EXPECT_TRUE(j["sigma"].is_null());
  EXPECT_EQ(j["undefined"], "no pairs");
  EXPECT_EQ(j["P"], 0);
}

TEST(JsonIo, FilesRoundTrip) {
  TempDir dir;
  const auto toy = ra::fixtures::toy_driving();
  std::vector<ra::Trajectory> items;
  for (const auto& id : toy.store.ids()) items.push_back(toy.store.get(id));
  io::save_trajectories(dir.path() / "t.jsonl", items);
  const auto store = io::load_trajectories(dir.path() / "t.jsonl");
  EXPECT_EQ(store.size(), items.size());

  const auto masses = io::load_distributions(dir.path() / "absent.json", store);
  EXPECT_EQ(masses.size(), store.size());

  io::save_preferences(dir.path() / "h.jsonl", toy.human);
  const auto human = io::load_preferences(dir.path() / "h.jsonl");
  ASSERT_EQ(human.size(), toy.human.size());
  EXPECT_EQ(human.source(), ra::PreferenceSource::human());
  for (std::size_t k = 0; k < human.size(); ++k) EXPECT_EQ(human.relations()[k], toy.human.relations()[k]);
}

TEST(JsonIo, ShippedFixtureLoads) {
  const fs::path dir = fs::path(REWARD_ALIGN_SOURCE_DIR) / "data/fixtures/toy_driving";
  const auto store = io::load_trajectories(dir / "trajectories.jsonl");
  const auto dists = io::load_distributions(dir / "distributions.json", store);
  const auto human = io::load_preferences(dir / "human.jsonl");
  const auto reward = std::get<ra::RewardSpec>(io::load_reward(dir / "reward.json"));
  const auto data = ra::build_reward_dataset(human, dists, store, reward, "toy");
  EXPECT_NEAR(ra::tac(human, data).sigma_or_throw(), 4.0 / 6.0, 1e-12);
}

TEST(JsonIo, MalformedJsonlReportsTheLine) {
  TempDir dir;
  write_text(dir.path() / "bad.jsonl", "{\"a\":1}\n{nope\n");
  try {
    io::read_jsonl_file(dir.path() / "bad.jsonl");
    FAIL() << "no error";
  } catch (const ra::InvalidData& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(io::read_json_file(dir.path() / "missing.json"), ra::IoError);
}

TEST(JsonIo, AppendJsonlAddsOneLinePerRow) {
  TempDir dir;
  const auto p = dir.path() / "log.jsonl";
  io::append_jsonl_line(p, json{{"k", 1}});
  io::append_jsonl_line(p, json{{"k", 2}});
  const auto rows = io::read_jsonl_file(p);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1]["k"], 2);
}

TEST(JsonIo, CurvesAreFloat32WithSidecar) {
  TempDir dir;
  const auto p = dir.path() / "curves.bin";
  io::write_curves(p, {{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(fs::file_size(p), 6 * sizeof(float));
  std::ifstream in(p, std::ios::binary);
  std::array<float, 6> v{};
  in.read(reinterpret_cast<char*>(v.data()), sizeof v);
  EXPECT_EQ(v[4], 5.0f);
  const auto side = io::read_json_file(p.string() + ".json");
  EXPECT_EQ(side["dtype"], "float32");
  EXPECT_EQ(side["shape"], json::array({2, 3}));
}
