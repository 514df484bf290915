#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metapg/config.hpp"
#include "metapg/envs.hpp"
#include "metapg/metrics.hpp"
#include "metapg/policies.hpp"
#include "metapg/rng.hpp"

namespace metapg::harness {

struct RunArtifacts {
  std::vector<metrics::Record> records;
  std::uint64_t env_steps = 0;
  int cycles_run = 0;
  std::string out_dir;  // empty when nothing was written to disk
};

/// Runs one (config, seed) experiment: the meta-trained teacher loop for
/// meta_* algorithms, the additive-noise loop for ddpg_*. When out_dir is
/// non-empty it is created and receives config.effective, metrics.csv,
/// metrics.jsonl, checkpoint.final (and visitation.csv when enabled).
///
/// The master seed fans out to named substreams (policy_init, rollout,
/// buffer, meta) so that every source of randomness is isolated and a rerun
/// with the same seed reproduces the metrics log bit for bit (wall-clock
/// column aside). Any error mid-run is rethrown with the cycle index
/// prefixed; metrics rows written so far remain on disk.
RunArtifacts run_experiment(const config::ExperimentConfig& cfg, std::uint64_t seed,
                            const std::string& out_dir);

struct EvalStats {
  double mean = 0.0;
  double stddev = 0.0;
  int n_episodes = 0;
};

/// Mean and sample standard deviation of per-episode returns over n_episodes
/// deterministic episodes.
EvalStats evaluate_actor(const policy::DeterministicActor& actor, env::Env& env, int n_episodes,
                         Rng& rng);

}  // namespace metapg::harness
