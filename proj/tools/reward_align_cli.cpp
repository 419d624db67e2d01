// reward-align: headless driver for every pipeline stage.
//
// stdout carries only the result payload; resolved configs and logs go to
// stderr (or next to --out). Exit codes: 0 ok / verified, 1 verification
// failed, 2 usage error, 3 runtime error.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "reward_align/fixtures.hpp"
#include "reward_align/json_io.hpp"
#include "reward_align/parallel.hpp"
#include "reward_align/reward_catalog.hpp"
#include "reward_align/sampling_study.hpp"
#include "reward_align/session_service.hpp"
#include "reward_align/shaping.hpp"
#include "reward_align/tabular_rl.hpp"
#include "reward_align/tac.hpp"

namespace ra = reward_align;
using json = nlohmann::json;

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

void print_error(const std::string& code, const std::string& message, const json& extra = {}) {
  json out = {{"error", code}, {"message", message}};
  if (extra.is_object()) out.update(extra);
  std::cerr << out.dump() << '\n';
}

// Payload to --out when given, stdout otherwise. The resolved config goes to
// <out>.config.json, or to stderr when writing to stdout.
void emit(const json& payload, const std::string& out, const json& config, bool jsonl = false) {
  if (out.empty()) {
    if (jsonl && payload.is_array()) {
      for (const auto& row : payload) std::cout << row.dump() << '\n';
    } else {
      std::cout << payload.dump(2) << '\n';
    }
    std::cerr << "config: " << config.dump() << '\n';
    return;
  }
  if (jsonl && payload.is_array()) {
    ra::io::write_jsonl_file(out, {payload.begin(), payload.end()});
  } else {
    ra::io::write_json_file(out, payload);
  }
  ra::io::write_json_file(out + ".config.json", config);
}

ra::RewardParams params_from(const std::vector<double>& v) {
  if (v.size() != 4) throw ra::InvalidArgument("reward params need exactly four numbers a,b,c,d");
  return {v[0], v[1], v[2], v[3]};
}

ra::DistributionSet load_dists(const std::string& path, const ra::TrajectoryStore& store) {
  if (!path.empty() && !std::filesystem::exists(path)) {
    throw ra::IoError("cannot read " + path);
  }
  return ra::io::load_distributions(path, store);
}

// Human proxy: every pair ranked by expected eval return, ties at equal values.
ra::PreferenceDataset eval_proxy(const ra::DistributionSet& dists, const ra::TrajectoryStore& store) {
  std::vector<std::string> ids(dists.ids().begin(), dists.ids().end());
  std::vector<double> values;
  for (const auto& id : ids) {
    double v = 0.0;
    for (const auto& w : dists.get(id).support()) {
      v += w.probability * ra::ht::eval_return(store.get(w.trajectory_id));
    }
    values.push_back(v);
  }
  return ra::PreferenceDataset::human(ra::full_ranking_relations(ids, values, 0.0));
}

template <typename Model>
ra::PreferenceDataset reward_dataset(const ra::PreferenceDataset& human, const ra::DistributionSet& dists,
                                     const ra::TrajectoryStore& store, const Model& model,
                                     double tie_tol) {
  return ra::build_reward_dataset(human, dists, store, model, model.id(), tie_tol);
}

ra::RewardSpec plain_reward(const std::string& path) {
  if (path.empty()) return ra::RewardSpec::hungry_thirsty(ra::ht::kEvalMetricReward, 0.99, "eval-metric");
  auto loaded = ra::io::load_reward(path);
  if (!std::holds_alternative<ra::RewardSpec>(loaded)) {
    throw ra::InvalidArgument(path + " holds a shaped reward; pass the base reward");
  }
  return std::get<ra::RewardSpec>(std::move(loaded));
}

std::vector<ra::rl::Algorithm> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<ra::rl::Algorithm> out;
  for (const auto& n : names) {
    const auto a = ra::rl::parse_algorithm(n);
    if (!a) throw ra::InvalidArgument("unknown algorithm '" + n + "'");
    out.push_back(*a);
  }
  return out;
}

std::string study_table(const ra::study::StudyResult& r) {
  std::ostringstream out;
  out << std::setw(8) << "size" << std::setw(12) << "mean" << std::setw(12) << "std"
      << std::setw(11) << "undefined" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& s : r.sizes) {
    out << std::setw(8) << s.size << std::setw(12) << s.mean_correlation << std::setw(12)
        << s.std_correlation << std::setw(11) << s.undefined_repeats << '\n';
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward alignment toolkit: TAC, reward transforms, Hungry-Thirsty training"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs", jobs, "Cap on parallel workers (0 = OpenMP default)")->check(CLI::NonNegativeNumber);

  // train
  auto* train = app.add_subcommand("train", "Grid search of tabular agents");
  std::vector<std::string> algorithms = {"q_learning", "sarsa", "expected_sarsa"};
  std::vector<double> lr_grid = {0.05};
  std::vector<double> eps_grid = {0.15};
  std::vector<double> train_reward;
  ra::rl::TrainConfig train_cfg;
  std::uint64_t train_config_seed = 0;
  bool fixed_layout = false;
  std::string train_out, curves_out;
  train->add_option("--algorithms", algorithms)->delimiter(',');
  train->add_option("--lr", lr_grid, "Learning-rate grid")->delimiter(',');
  train->add_option("--eps", eps_grid, "Epsilon grid")->delimiter(',');
  train->add_option("--reward", train_reward, "Training reward a,b,c,d (default: eval metric)")
      ->delimiter(',')->expected(4);
  train->add_option("--episodes", train_cfg.episodes)->check(CLI::PositiveNumber);
  train->add_option("--seeds", train_cfg.seeds)->check(CLI::PositiveNumber);
  train->add_option("--gamma", train_cfg.gamma);
  train->add_option("--final-window", train_cfg.final_window)->check(CLI::PositiveNumber);
  train->add_option("--config-seed", train_config_seed, "Base config seed; seed k uses base + k");
  train->add_flag("--fixed-layout", fixed_layout, "Keep food (3,0) and water (0,0) for every seed");
  train->add_option("--out", train_out, "Results JSONL (one row per grid cell)");
  train->add_option("--curves", curves_out, "Float32 learning curves of the first cell");

  // plan
  auto* plan = app.add_subcommand("plan", "Value iteration on one layout");
  std::uint64_t plan_seed = 0;
  double plan_gamma = 0.99, plan_tol = 1e-8;
  std::vector<double> plan_reward;
  int plan_episodes = 0;
  std::string plan_out;
  plan->add_option("--config-seed", plan_seed, "Layout seed");
  plan->add_option("--gamma", plan_gamma);
  plan->add_option("--tol", plan_tol)->check(CLI::PositiveNumber);
  plan->add_option("--reward", plan_reward)->delimiter(',')->expected(4);
  plan->add_option("--evaluate", plan_episodes, "Greedy rollouts to average")->check(CLI::NonNegativeNumber);
  plan->add_option("--out", plan_out);

  // sample
  auto* sample = app.add_subcommand("sample", "Bucketed trajectories from partially trained agents");
  ra::study::BucketSpec bucket_spec;
  ra::study::SamplerOptions sampler;
  std::uint64_t sample_seed = 0;
  std::string sample_out;
  sample->add_option("--per-bucket", bucket_spec.per_bucket)->check(CLI::PositiveNumber);
  sample->add_option("--seed", sample_seed);
  sample->add_option("--max-runs", sampler.max_runs)->check(CLI::PositiveNumber);
  sample->add_option("--episodes-per-run", sampler.episodes_per_run)->check(CLI::PositiveNumber);
  sample->add_option("--checkpoint-every", sampler.checkpoint_every)->check(CLI::PositiveNumber);
  sample->add_option("--out", sample_out, "Trajectory JSONL");

  // rank
  auto* rank = app.add_subcommand("rank", "Expected returns and induced ordering");
  std::string rank_traj, rank_dists, rank_reward;
  double tie_tol = ra::kDefaultTieTolerance;
  rank->add_option("--trajectories", rank_traj)->required();
  rank->add_option("--distributions", rank_dists);
  rank->add_option("--reward", rank_reward)->required();
  rank->add_option("--tie-tol", tie_tol);

  // tac
  auto* tac = app.add_subcommand("tac", "Trajectory Alignment Coefficient report");
  std::string tac_human, tac_reward, tac_traj, tac_dists, tac_against;
  tac->add_option("--human", tac_human, "Human preference JSONL")->required();
  tac->add_option("--reward", tac_reward, "Reward file");
  tac->add_option("--trajectories", tac_traj);
  tac->add_option("--distributions", tac_dists);
  tac->add_option("--against", tac_against, "Second preference JSONL instead of a reward");
  tac->add_option("--tie-tol", tie_tol);

  // transform
  auto* transform = app.add_subcommand("transform", "Shape or linearly rescale a reward");
  std::string tf_reward, tf_shape, tf_mode = "infinite_horizon_exact", tf_out;
  std::vector<double> tf_linear;
  transform->add_option("--reward", tf_reward)->required();
  auto* shape_opt = transform->add_option("--shape", tf_shape, "Potential JSON {\"phi\": ...}");
  auto* linear_opt = transform->add_option("--linear", tf_linear, "alpha,beta")->delimiter(',')->expected(2);
  shape_opt->excludes(linear_opt);
  transform->add_option("--mode", tf_mode)->check(CLI::IsMember({"literal_finite", "infinite_horizon_exact"}));
  transform->add_option("--out", tf_out);

  // verify
  auto* verify = app.add_subcommand("verify", "Property checks with a pass/fail exit code");
  verify->require_subcommand(1);
  auto* invariance = verify->add_subcommand("invariance", "TAC under random potential shaping");
  std::string inv_traj, inv_dists, inv_human, inv_reward;
  ra::InvarianceOptions inv_opts;
  std::string inv_mode = "infinite_horizon_exact";
  invariance->add_option("--trajectories", inv_traj)->required();
  invariance->add_option("--distributions", inv_dists);
  invariance->add_option("--human", inv_human, "Default: ranking by eval return");
  invariance->add_option("--reward", inv_reward, "Default: eval-metric reward");
  invariance->add_option("--trials", inv_opts.trials)->check(CLI::PositiveNumber);
  invariance->add_option("--seed", inv_opts.seed);
  invariance->add_option("--mode", inv_mode)->check(CLI::IsMember({"literal_finite", "infinite_horizon_exact"}));
  invariance->add_flag("--zero-final", inv_opts.zero_on_final_states, "Force Phi = 0 on final states");

  auto* counter = verify->add_subcommand("counterexample", "Build and check the preference-flipping potential");
  std::string ce_traj, ce_dists, ce_reward, ce_i, ce_j;
  double ce_eps = 0.0;
  counter->add_option("--trajectories", ce_traj)->required();
  counter->add_option("--distributions", ce_dists);
  counter->add_option("--reward", ce_reward, "Default: eval-metric reward");
  counter->add_option("--i", ce_i)->required();
  counter->add_option("--j", ce_j)->required();
  auto* eps_opt = counter->add_option("--epsilon", ce_eps)->check(CLI::PositiveNumber);

  // study
  auto* study = app.add_subcommand("study", "Sampling studies");
  study->require_subcommand(1);
  auto* subset = study->add_subcommand("subset-size", "Correlation of TAC vectors across subset sizes");
  std::string pool_path, rewards_path, study_format = "table", study_out;
  int pool_per_bucket = 100;
  ra::study::StudyOptions study_opts;
  study_opts.sizes = {10, 12, 25, 100};
  study_opts.repeats = 20;
  std::uint64_t pool_seed = 0;
  subset->add_option("--pool", pool_path, "Trajectory JSONL (default: sample a fresh pool)");
  subset->add_option("--pool-per-bucket", pool_per_bucket)->check(CLI::PositiveNumber);
  subset->add_option("--pool-seed", pool_seed);
  subset->add_option("--rewards", rewards_path, "JSON array of [a,b,c,d] (default: the reference pairs)");
  subset->add_option("--sizes", study_opts.sizes)->delimiter(',');
  subset->add_option("--repeats", study_opts.repeats)->check(CLI::PositiveNumber);
  subset->add_option("--seed", study_opts.rng_seed);
  subset->add_option("--format", study_format)->check(CLI::IsMember({"table", "json"}));
  subset->add_option("--out", study_out);

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP/JSON preference service");
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string store_dir = std::getenv("REWARD_ALIGN_STORE") ? std::getenv("REWARD_ALIGN_STORE") : "store";
  std::string static_dir;
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--host", host);
  serve->add_option("--store", store_dir, "Store directory (env REWARD_ALIGN_STORE)");
  serve->add_option("--static", static_dir, "Built UI bundle served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return kExitUsage;
  }

  try {
    ra::set_default_jobs(jobs);
    const json common = {{"jobs", jobs}};

    if (*train) {
      train_cfg.reward_params = train_reward.empty() ? ra::ht::kEvalMetricReward : params_from(train_reward);
      train_cfg.randomize_layout = !fixed_layout;
      train_cfg.keep_curves = !curves_out.empty();
      ra::ht::EnvConfig env;
      env.config_seed = train_config_seed;
      const auto algs = parse_algorithms(algorithms);
      const auto grid = ra::rl::grid_search(train_cfg, algs, lr_grid, eps_grid, env);
      json rows = json::array();
      for (const auto& cell : grid.cells) rows.push_back(ra::io::to_json(cell.result));
      json config = ra::io::to_json(train_cfg);
      config["algorithms"] = algorithms;
      config["lr_grid"] = lr_grid;
      config["eps_grid"] = eps_grid;
      config["env"] = ra::io::to_json(env);
      config["final_return_mean_all_cells"] = grid.final_return_mean;
      config["auc_mean_all_cells"] = grid.auc_mean;
      config.update(common);
      emit(rows, train_out, config, true);
      if (!train_out.empty()) {
        ra::io::write_json_file(train_out + ".summary.json",
                                {{"cells", grid.cells.size()},
                                 {"final_return_mean", grid.final_return_mean},
                                 {"auc_mean", grid.auc_mean}});
      }
      if (!curves_out.empty()) ra::io::write_curves(curves_out, grid.cells.front().result.learning_curve);
      return 0;
    }

    if (*plan) {
      const auto reward = plan_reward.empty() ? ra::ht::kEvalMetricReward : params_from(plan_reward);
      const auto env = ra::ht::EnvConfig::random_layout(plan_seed);
      const auto vi = ra::rl::value_iteration(env, reward, plan_gamma, plan_tol);
      json values = json::array();
      json policy = json::array();
      for (const auto& s : ra::ht::enumerate_states(env)) {
        const auto k = ra::ht::state_index(s, env);
        values.push_back({{"state", ra::io::to_json(s)}, {"value", vi.values[k]}});
        policy.push_back({{"state", ra::io::to_json(s)}, {"action", std::string(ra::action_name(vi.policy[k]))}});
      }
      json payload = {{"env", ra::io::to_json(env)},
                      {"sweeps", vi.sweeps},
                      {"final_residual", vi.residuals.empty() ? 0.0 : vi.residuals.back()},
                      {"values", std::move(values)},
                      {"policy", std::move(policy)}};
      if (plan_episodes > 0) {
        const auto pol = ra::ht::table_policy(vi.policy, env);
        double total = 0.0;
        for (int e = 0; e < plan_episodes; ++e) {
          total += ra::ht::rollout(pol, env, static_cast<std::uint64_t>(e)).eval_return;
        }
        payload["mean_eval_return"] = total / plan_episodes;
      }
      json config = {{"config_seed", plan_seed}, {"gamma", plan_gamma}, {"tol", plan_tol},
                     {"reward_params", ra::io::params_to_json(reward)}, {"evaluate", plan_episodes}};
      config.update(common);
      emit(payload, plan_out, config);
      return 0;
    }

    if (*sample) {
      sampler.jobs = jobs;
      const auto env = ra::ht::EnvConfig::fixed_start_study();
      const auto result = ra::study::sample_bucketed_trajectories(bucket_spec, env, sample_seed, sampler);
      json rows = json::array();
      for (const auto& t : result.trajectories) {
        auto row = ra::io::to_json(t.trajectory);
        row["bucket"] = ra::study::kBucketNames[static_cast<std::size_t>(t.bucket)];
        row["eval_return"] = t.eval_return;
        rows.push_back(std::move(row));
      }
      json config = {{"per_bucket", bucket_spec.per_bucket}, {"seed", sample_seed},
                     {"max_runs", sampler.max_runs}, {"episodes_per_run", sampler.episodes_per_run},
                     {"checkpoint_every", sampler.checkpoint_every},
                     {"rollouts_per_checkpoint", sampler.rollouts_per_checkpoint},
                     {"env", ra::io::to_json(env)}, {"runs_used", result.runs_used}};
      config.update(common);
      emit(rows, sample_out, config, true);
      return 0;
    }

    if (*rank) {
      const auto store = ra::io::load_trajectories(rank_traj);
      const auto dists = load_dists(rank_dists, store);
      const auto reward = ra::io::load_reward(rank_reward);
      auto payload = ra::service::ranking_payload(dists, store, reward, tie_tol);
      payload["reward"] = ra::io::reward_id(reward);
      std::cout << payload.dump(2) << '\n';
      return 0;
    }

    if (*tac) {
      const auto human = ra::io::load_preferences(tac_human);
      ra::TacReport report;
      if (!tac_against.empty()) {
        report = ra::tac(human, ra::io::load_preferences(tac_against));
      } else {
        if (tac_reward.empty() || tac_traj.empty()) {
          throw ra::InvalidArgument("tac needs --reward and --trajectories, or --against");
        }
        const auto store = ra::io::load_trajectories(tac_traj);
        const auto dists = load_dists(tac_dists, store);
        const auto reward = ra::io::load_reward(tac_reward);
        const auto data = std::visit(
            [&](const auto& model) { return reward_dataset(human, dists, store, model, tie_tol); }, reward);
        report = ra::tac(human, data);
      }
      std::cout << ra::io::to_json(report).dump(2) << '\n';
      return 0;
    }

    if (*transform) {
      const auto base = plain_reward(tf_reward);
      json payload;
      if (!tf_shape.empty()) {
        auto phi = ra::io::potential_from_json(ra::io::read_json_file(tf_shape));
        payload = ra::io::to_json(ra::shape_reward(base, std::move(phi), *ra::parse_horizon_mode(tf_mode)));
      } else if (!tf_linear.empty()) {
        payload = ra::io::to_json(ra::linear_transform(base, tf_linear[0], tf_linear[1]));
      } else {
        throw ra::InvalidArgument("transform needs --shape or --linear");
      }
      json config = {{"reward", tf_reward}, {"shape", tf_shape}, {"mode", tf_mode}, {"linear", tf_linear}};
      emit(payload, tf_out, config);
      return 0;
    }

    if (*invariance) {
      const auto store = ra::io::load_trajectories(inv_traj);
      const auto dists = load_dists(inv_dists, store);
      const auto human = inv_human.empty() ? eval_proxy(dists, store) : ra::io::load_preferences(inv_human);
      const auto base = plain_reward(inv_reward);
      inv_opts.mode = *ra::parse_horizon_mode(inv_mode);
      inv_opts.jobs = jobs;
      const auto verdict = ra::verify_shaping_invariance(human, dists, store, base, inv_opts);
      std::cout << ra::io::to_json(verdict).dump(2) << '\n';
      return verdict.pass ? 0 : kExitVerifyFailed;
    }

    if (*counter) {
      const auto store = ra::io::load_trajectories(ce_traj);
      const auto dists = load_dists(ce_dists, store);
      const auto base = plain_reward(ce_reward);
      const auto& di = dists.get(ce_i);
      const auto& dj = dists.get(ce_j);
      std::optional<double> eps;
      if (eps_opt->count() > 0) eps = ce_eps;
      const auto c = ra::build_necessity_counterexample(di, dj, store, base, eps);
      const auto shaped = ra::shape_reward(base, c.phi, ra::HorizonMode::InfiniteHorizonExact);
      const auto& hi = dists.get(c.i_id);
      const auto& lo = dists.get(c.j_id);
      const auto before = ra::induce_preference(hi, lo, store, base, 0.0);
      const auto after = ra::induce_preference(hi, lo, store, shaped, 0.0);
      const bool identity = std::abs(c.delta_phi - (c.delta_g + c.epsilon)) <= 1e-9;
      const bool flipped = after == ra::Relation::Prec;
      auto payload = ra::io::to_json(c);
      payload["before"] = std::string(1, ra::relation_symbol(before));
      payload["after"] = std::string(1, ra::relation_symbol(after));
      payload["identity_holds"] = identity;
      payload["flipped"] = flipped;
      payload["pass"] = identity && flipped;
      std::cout << payload.dump(2) << '\n';
      return identity && flipped ? 0 : kExitVerifyFailed;
    }

    if (*subset) {
      std::vector<ra::study::BucketedTrajectory> pool;
      ra::study::BucketSpec spec;
      if (!pool_path.empty()) {
        for (const auto& row : ra::io::read_jsonl_file(pool_path)) {
          auto t = ra::io::trajectory_from_json(row);
          const int er = ra::ht::eval_return(t);
          const auto b = spec.bucket_of(er);
          if (!b) throw ra::InvalidData("trajectory '" + t.id() + "' falls outside every bucket");
          pool.push_back({std::move(t), *b, er});
        }
      } else {
        spec.per_bucket = pool_per_bucket;
        ra::study::SamplerOptions opts;
        opts.max_runs = 256;
        opts.jobs = jobs;
        pool = ra::study::sample_bucketed_trajectories(spec, ra::ht::EnvConfig::fixed_start_study(),
                                                       pool_seed, opts).trajectories;
      }
      std::vector<ra::RewardParams> rewards;
      if (rewards_path.empty()) {
        rewards = ra::distinct_comparison_rewards();
      } else {
        for (const auto& p : ra::io::read_json_file(rewards_path)) rewards.push_back(ra::io::params_from_json(p));
      }
      study_opts.jobs = jobs;
      const auto result = ra::study::subset_size_study(rewards, pool, study_opts);
      json config = {{"pool", pool_path}, {"pool_size", pool.size()}, {"pool_seed", pool_seed},
                     {"sizes", study_opts.sizes}, {"repeats", study_opts.repeats},
                     {"seed", study_opts.rng_seed}, {"rewards", rewards.size()}};
      config.update(common);
      if (study_format == "table" && study_out.empty()) {
        std::cout << study_table(result);
        std::cerr << "config: " << config.dump() << '\n';
      } else {
        emit(ra::io::to_json(result), study_out, config);
      }
      return 0;
    }

    if (*serve) {
      ra::service::SessionService service(store_dir);
      ra::service::HttpServer server(service, static_dir);
      const int bound = server.bind(host, port);
      std::cerr << json{{"listening", host + ":" + std::to_string(bound)}, {"store", store_dir}}.dump() << '\n';
      server.listen();
      return 0;
    }
  } catch (const ra::TransitivityViolation& e) {
    print_error(e.code(), e.what(), {{"cycle", e.cycle()}});
    return kExitRuntime;
  } catch (const ra::Error& e) {
    print_error(e.code(), e.what());
    return e.code() == "InvalidArgument" ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return kExitRuntime;
  }
  return 0;
}
