#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace metapg::config {

/// Full experiment configuration. Every field has a working default and a
/// flat `key = value` spelling used by config files, `--set` overrides, and
/// the effective-config echo written next to run artifacts.
struct ExperimentConfig {
  std::string env = "pendulum";
  // meta_independent | meta_adaptive_variance | ddpg_gaussian | ddpg_ou
  std::string algorithm = "meta_independent";
  std::vector<std::uint64_t> seeds{1};

  // Run length: cycles stop at epoch_cycles, or earlier once the cumulative
  // environment-step counter reaches total_steps (0 = no step cap).
  int epoch_cycles = 20;
  std::uint64_t total_steps = 0;

  int rollout_steps = 200;              // baseline exploration budget per cycle
  int train_steps = 50;                 // student updates per cycle
  int exploration_rollout_steps = 100;  // teacher data D0 per cycle
  int evaluation_steps = 200;           // evaluation rollout budget
  int exploration_train_steps = 1;      // teacher updates per cycle
  int lookahead_train_steps = 50;       // updates of the throwaway student on D0

  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double meta_lr = 1e-4;
  double gamma = 0.99;
  double tau = 0.001;
  int batch_size = 64;
  std::uint64_t buffer_capacity = 1'000'000;
  std::vector<int> hidden{64, 64};

  // Evaluation / meta-reward shaping knobs (all off by default).
  double eval_gamma = 1.0;
  bool fresh_eval_after_buffer_update = false;
  bool meta_reward_baseline = false;
  bool meta_reward_normalize = false;
  double subsample_rate = 1.0;
  double meta_grad_clip = 0.0;  // global-norm clip on the meta-gradient, 0 = off

  // Baseline noise scales, as fractions of the per-dimension action half span.
  double noise_sigma = 0.2;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;

  // Teacher parameterization.
  double log_std_lo = -5.0;
  double log_std_hi = 2.0;
  double init_log_std_scale = 0.2;

  bool log_visitation = false;  // dump exploration's visited observations

  std::map<std::string, double> env_overrides;  // config keys "env.<name>"

  void validate() const;  // throws std::invalid_argument on bad values
};

/// Parses `key = value` lines ('#' starts a comment, blank lines ignored).
ExperimentConfig parse_file(const std::string& path);

/// Applies one key/value pair (same keys as the file format).
/// Unknown keys throw. "preset" applies a named preset (see apply_preset).
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Named bundles of overrides. "long_horizon": exploration_rollout_steps 1000,
/// evaluation_steps 2000, train_steps 500, exploration_train_steps 100.
void apply_preset(ExperimentConfig& cfg, const std::string& name);

/// Every effective key (defaults included) in file syntax, stable order, so a
/// run is reproducible from its artifacts alone.
std::string to_file_string(const ExperimentConfig& cfg);

bool is_meta_algorithm(const std::string& algorithm);

}  // namespace metapg::config
