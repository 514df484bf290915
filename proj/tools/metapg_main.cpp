// Command-line front end: train / eval / compare / selftest.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metapg/checkpoint.hpp"
#include "metapg/config.hpp"
#include "metapg/envs.hpp"
#include "metapg/harness.hpp"
#include "metapg/metrics.hpp"
#include "metapg/selftest.hpp"

namespace {

int cmd_train(const std::string& config_path, const std::string& env_name,
              const std::string& algo, long long seed_flag, const std::string& out_dir,
              const std::vector<std::string>& sets) {
  metapg::config::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = metapg::config::parse_file(config_path);
  if (!env_name.empty()) cfg.env = env_name;
  if (!algo.empty()) cfg.algorithm = algo;
  if (seed_flag >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed_flag)};
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    metapg::config::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  if (out_dir.empty())
    std::fprintf(stderr, "note: no --out directory, metrics stay in memory only\n");

  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    const std::uint64_t seed = cfg.seeds[i];
    std::string dir = out_dir;
    if (!out_dir.empty() && cfg.seeds.size() > 1)
      dir = out_dir + "/seed_" + std::to_string(seed);
    std::printf("run %zu/%zu: env=%s algo=%s seed=%" PRIu64 "%s%s\n", i + 1, cfg.seeds.size(),
                cfg.env.c_str(), cfg.algorithm.c_str(), seed, dir.empty() ? "" : " out=",
                dir.c_str());
    const auto result = metapg::harness::run_experiment(cfg, seed, dir);
    const double last_eval =
        result.records.empty() ? std::nan("") : result.records.back().eval_return;
    std::printf("  cycles=%d env_steps=%" PRIu64 " final_eval_return=%.4f\n", result.cycles_run,
                result.env_steps, last_eval);
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, int episodes, long long seed) {
  auto cp = metapg::checkpoint::load(checkpoint_path);
  auto env = metapg::env::make_env(cp.env_name, cp.env_overrides);
  metapg::Rng rng = metapg::seed_stream(static_cast<std::uint64_t>(seed), "eval");
  const auto stats = metapg::harness::evaluate_actor(cp.learner.actor, *env, episodes, rng);
  std::printf("checkpoint: %s\nenv: %s  algorithm: %s  trained env_steps: %" PRIu64 "\n",
              checkpoint_path.c_str(), cp.env_name.c_str(), cp.algorithm.c_str(), cp.env_steps);
  std::printf("mean return over %d episodes: %.4f (std %.4f)\n", stats.n_episodes, stats.mean,
              stats.stddev);
  return 0;
}

int cmd_compare(const std::vector<std::string>& logs, const std::string& out_csv) {
  std::vector<std::vector<metapg::metrics::Record>> runs;
  std::size_t rows = SIZE_MAX;
  for (const auto& path : logs) {
    runs.push_back(metapg::metrics::read_csv(path));
    rows = std::min(rows, runs.back().size());
  }
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (runs[i].size() != rows)
      std::fprintf(stderr, "warning: %s has %zu records, truncating comparison to %zu\n",
                   logs[i].c_str(), runs[i].size(), rows);

  std::ofstream out;
  if (!out_csv.empty()) {
    out.open(out_csv);
    if (!out) throw std::runtime_error("cannot open " + out_csv);
    out << "cycle,env_steps_mean,eval_return_mean,eval_return_std\n";
  }
  std::printf("%8s %14s %18s %18s\n", "cycle", "env_steps_mean", "eval_return_mean",
              "eval_return_std");
  const double n = static_cast<double>(runs.size());
  for (std::size_t r = 0; r < rows; ++r) {
    double steps = 0.0, sum = 0.0, sumsq = 0.0;
    for (const auto& run : runs) {
      steps += static_cast<double>(run[r].env_steps);
      sum += run[r].eval_return;
      sumsq += run[r].eval_return * run[r].eval_return;
    }
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sumsq - n * mean * mean) / (n - 1)) : 0.0;
    std::printf("%8d %14.1f %18.4f %18.4f\n", runs[0][r].cycle, steps / n, mean, std::sqrt(var));
    if (out)
      out << runs[0][r].cycle << "," << steps / n << "," << mean << "," << std::sqrt(var)
          << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DDPG with a meta-learned exploration policy"};
  app.require_subcommand(1);

  std::string config_path, env_name, algo, out_dir;
  long long seed = -1;
  std::vector<std::string> sets;
  auto* train = app.add_subcommand("train", "Run a training experiment");
  train->add_option("--config", config_path, "Config file (key = value lines)");
  train->add_option("--env", env_name, "Environment name");
  train->add_option("--algo", algo, "Algorithm name");
  train->add_option("--seed", seed, "Master seed (overrides config seeds)");
  train->add_option("--out", out_dir, "Output directory for run artifacts");
  train->add_option("--set", sets, "Override any config key, key=value")->take_all();

  std::string checkpoint_path;
  int episodes = 10;
  long long eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval->add_option("--episodes", episodes, "Number of evaluation episodes");
  eval->add_option("--seed", eval_seed, "Evaluation seed");

  std::vector<std::string> logs;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Aggregate metrics logs across seeds");
  compare->add_option("logs", logs, "metrics.csv files")->required();
  compare->add_option("--out", compare_out, "Write the aggregated curve as CSV");

  long long selftest_seed = 12345;
  auto* selftest = app.add_subcommand("selftest", "Gradient and estimator checks");
  selftest->add_option("--seed", selftest_seed, "Seed for the check suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, env_name, algo, seed, out_dir, sets);
    if (eval->parsed()) return cmd_eval(checkpoint_path, episodes, eval_seed);
    if (compare->parsed()) return cmd_compare(logs, compare_out);
    if (selftest->parsed()) {
      const bool ok = metapg::selftest::report(
          metapg::selftest::run_all(static_cast<std::uint64_t>(selftest_seed)));
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
