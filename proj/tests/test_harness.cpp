#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "metapg/checkpoint.hpp"
#include "metapg/harness.hpp"
#include "metapg/rollout.hpp"
#include "support.hpp"

using namespace metapg;
using config::ExperimentConfig;
using harness::RunArtifacts;

namespace {

// Small, fast experiment: 50-step pendulum episodes and tiny networks.
ExperimentConfig tiny_config(const std::string& algorithm) {
  ExperimentConfig cfg;
  cfg.env = "pendulum";
  cfg.algorithm = algorithm;
  cfg.env_overrides["max_episode_steps"] = 50.0;
  cfg.hidden = {4, 4};
  cfg.batch_size = 16;
  cfg.buffer_capacity = 5000;
  cfg.epoch_cycles = 2;
  cfg.rollout_steps = 60;
  cfg.evaluation_steps = 100;
  cfg.exploration_rollout_steps = 40;
  cfg.train_steps = 5;
  cfg.lookahead_train_steps = 5;
  cfg.exploration_train_steps = 1;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("zero cycles produce only the initial evaluation record") {
  ExperimentConfig cfg = tiny_config("meta_independent");
  cfg.epoch_cycles = 0;
  const RunArtifacts art = harness::run_experiment(cfg, 5, "");
  REQUIRE(art.records.size() == 1);
  CHECK(art.cycles_run == 0);
  CHECK(art.env_steps == 100);  // the one evaluation rollout
  CHECK(art.records[0].cycle == 0);
  CHECK(art.records[0].env_steps == 100);
  CHECK(std::isnan(art.records[0].r_pi_prime));
  CHECK(std::isnan(art.records[0].meta_reward));
  CHECK(art.records[0].r_pi == art.records[0].eval_return);
}

TEST_CASE("baseline runs account every environment step") {
  const RunArtifacts art = harness::run_experiment(tiny_config("ddpg_gaussian"), 6, "");
  // init eval 100, then 2 cycles of (explore 60 + eval 100).
  CHECK(art.env_steps == 420);
  CHECK(art.cycles_run == 2);
  REQUIRE(art.records.size() == 3);
  CHECK(art.records[0].env_steps == 100);
  CHECK(art.records[1].env_steps == 260);
  CHECK(art.records[2].env_steps == 420);

  // Baseline rows carry no teacher or meta columns.
  for (const auto& r : art.records) {
    CHECK(std::isnan(r.r_pi));
    CHECK(std::isnan(r.r_pi_prime));
    CHECK(std::isnan(r.meta_reward));
    CHECK(std::isnan(r.teacher_grad_norm));
    CHECK(std::isnan(r.teacher_mean_log_std));
    CHECK(std::isfinite(r.eval_return));
  }
  CHECK(std::isnan(art.records[0].critic_loss));
  CHECK(std::isfinite(art.records[1].critic_loss));
}

TEST_CASE("meta runs account every environment step") {
  const RunArtifacts art = harness::run_experiment(tiny_config("meta_independent"), 7, "");
  // init eval 100, then 2 cycles of (teacher batch 40 + lookahead eval 100).
  CHECK(art.env_steps == 380);
  CHECK(art.cycles_run == 2);
  REQUIRE(art.records.size() == 3);
  CHECK(art.records[1].env_steps == 240);
  CHECK(art.records[2].env_steps == 380);

  for (std::size_t i = 1; i < art.records.size(); ++i) {
    const auto& r = art.records[i];
    CHECK(std::isfinite(r.r_pi));
    CHECK(std::isfinite(r.r_pi_prime));
    CHECK(r.meta_reward == r.r_pi_prime - r.r_pi);
    CHECK(std::isfinite(r.teacher_grad_norm));
    CHECK(std::isfinite(r.teacher_mean_log_std));
    CHECK(std::isfinite(r.critic_loss));
  }
}

TEST_CASE("a fresh post-update evaluation adds its steps and rebases r_pi") {
  ExperimentConfig cfg = tiny_config("meta_adaptive_variance");
  cfg.fresh_eval_after_buffer_update = true;
  const RunArtifacts art = harness::run_experiment(cfg, 8, "");
  // init eval 100, then 2 cycles of (40 + 100 + fresh eval 100).
  CHECK(art.env_steps == 580);
  REQUIRE(art.records.size() == 3);
}

TEST_CASE("the next cycle's baseline return is the previous eval_return") {
  for (const bool fresh : {false, true}) {
    ExperimentConfig cfg = tiny_config("meta_independent");
    cfg.epoch_cycles = 3;
    cfg.fresh_eval_after_buffer_update = fresh;
    const RunArtifacts art = harness::run_experiment(cfg, 9, "");
    REQUIRE(art.records.size() == 4);
    for (std::size_t i = 0; i + 1 < art.records.size(); ++i)
      CHECK(art.records[i + 1].r_pi == art.records[i].eval_return);
  }
}

TEST_CASE("the step cap stops the run between cycles") {
  ExperimentConfig cfg = tiny_config("ddpg_ou");
  cfg.epoch_cycles = 50;
  cfg.total_steps = 150;  // init eval leaves 100 < 150, so exactly one cycle runs
  const RunArtifacts art = harness::run_experiment(cfg, 10, "");
  CHECK(art.cycles_run == 1);
  CHECK(art.env_steps == 260);
  CHECK(art.records.size() == 2);
}

TEST_CASE("reruns with one master seed reproduce the log exactly") {
  for (const std::string algo :
       {"ddpg_gaussian", "ddpg_ou", "meta_independent", "meta_adaptive_variance"}) {
    const ExperimentConfig cfg = tiny_config(algo);
    const RunArtifacts a = harness::run_experiment(cfg, 11, "");
    const RunArtifacts b = harness::run_experiment(cfg, 11, "");
    INFO("algorithm ", algo);
    CHECK(metrics::same_ignoring_wall_clock(a.records, b.records));

    const RunArtifacts c = harness::run_experiment(cfg, 12, "");
    CHECK_FALSE(metrics::same_ignoring_wall_clock(a.records, c.records));
  }
}

TEST_CASE("run directories hold the full artifact set") {
  ExperimentConfig cfg = tiny_config("meta_independent");
  cfg.epoch_cycles = 1;
  cfg.log_visitation = true;
  const std::string dir = testsupport::scratch_dir("harness_artifacts");
  const RunArtifacts art = harness::run_experiment(cfg, 21, dir);
  CHECK(art.out_dir == dir);

  const std::string effective = slurp(dir + "/config.effective");
  CHECK(effective.find("algorithm = meta_independent") != std::string::npos);
  CHECK(effective.find("env.max_episode_steps = 50") != std::string::npos);
  CHECK(effective.find("seed_used = 21\n") != std::string::npos);

  const auto rows = metrics::read_csv(dir + "/metrics.csv");
  CHECK(metrics::same_ignoring_wall_clock(rows, art.records));

  std::ifstream jsonl(dir + "/metrics.jsonl");
  int lines = 0;
  std::string line;
  while (std::getline(jsonl, line)) ++lines;
  CHECK(lines == static_cast<int>(art.records.size()));

  const checkpoint::Checkpoint cp = checkpoint::load(dir + "/checkpoint.final");
  CHECK(cp.algorithm == "meta_independent");
  CHECK(cp.env_name == "pendulum");
  CHECK(cp.env_overrides.at("max_episode_steps") == 50.0);
  CHECK(cp.has_teacher);
  CHECK(cp.has_r_pi);
  CHECK(cp.master_seed == 21);
  CHECK(cp.env_steps == art.env_steps);
  CHECK(cp.cycle == art.cycles_run);

  const std::string visitation = slurp(dir + "/visitation.csv");
  CHECK(visitation.rfind("cycle,step,obs0,obs1,obs2\n", 0) == 0);
  // One row per exploration step: header + 40.
  CHECK(std::count(visitation.begin(), visitation.end(), '\n') == 41);
}

TEST_CASE("baseline checkpoints omit the teacher") {
  ExperimentConfig cfg = tiny_config("ddpg_gaussian");
  cfg.epoch_cycles = 1;
  const std::string dir = testsupport::scratch_dir("harness_baseline_ckpt");
  harness::run_experiment(cfg, 22, dir);
  const checkpoint::Checkpoint cp = checkpoint::load(dir + "/checkpoint.final");
  CHECK_FALSE(cp.has_teacher);
  CHECK_FALSE(cp.has_r_pi);
}

TEST_CASE("unknown algorithms are rejected before any work happens") {
  ExperimentConfig cfg = tiny_config("ddpg_gaussian");
  cfg.algorithm = "sac";
  CHECK_THROWS_AS(harness::run_experiment(cfg, 1, ""), std::invalid_argument);
}

TEST_CASE("evaluate_actor reports per-episode statistics deterministically") {
  auto env = env::make_env("pendulum", {{"max_episode_steps", 40.0}});
  Rng init = seed_stream(23, "harness_unit");
  policy::DeterministicActor actor = policy::make_actor(
      env->spec().obs_dim, env->spec().action_dim, {4}, env->spec().action_low,
      env->spec().action_high, init);

  Rng r1 = seed_stream(24, "harness_unit");
  const harness::EvalStats s1 = harness::evaluate_actor(actor, *env, 6, r1);
  CHECK(s1.n_episodes == 6);
  CHECK(std::isfinite(s1.mean));
  CHECK(s1.stddev >= 0.0);

  auto env2 = env::make_env("pendulum", {{"max_episode_steps", 40.0}});
  Rng r2 = seed_stream(24, "harness_unit");
  const harness::EvalStats s2 = harness::evaluate_actor(actor, *env2, 6, r2);
  CHECK(s1.mean == s2.mean);
  CHECK(s1.stddev == s2.stddev);

  // The mean matches a hand rollout under the same stream.
  auto env3 = env::make_env("pendulum", {{"max_episode_steps", 40.0}});
  Rng r3 = seed_stream(24, "harness_unit");
  rollout::Request req;
  req.env = env3.get();
  req.actor = &actor;
  req.n_episodes = 6;
  const auto trajs = rollout::collect(req, r3);
  double sum = 0.0;
  for (const auto& t : trajs) sum += t.reward_sum();
  CHECK(s1.mean == sum / 6.0);

  Rng r4 = seed_stream(25, "harness_unit");
  CHECK_THROWS_AS(harness::evaluate_actor(actor, *env, 0, r4), std::invalid_argument);
}

}  // TEST_SUITE
