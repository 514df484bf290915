#pragma once

#include <vector>

#include "metapg/ddpg.hpp"
#include "metapg/envs.hpp"
#include "metapg/policies.hpp"
#include "metapg/rng.hpp"

namespace metapg::rollout {

/// What to run in the environment. Exactly one of n_steps / n_episodes is
/// positive. The behavior is the actor alone unless a teacher or additive
/// noise source is attached:
///   - teacher set            -> sample the Gaussian teacher
///   - ou_noise set           -> actor output + OU noise (reset each episode)
///   - gaussian_sigma > 0     -> actor output + N(0, gaussian_sigma^2) per dim
///   - none of the above      -> deterministic actor (evaluation)
/// Stochastic behaviors record the pre-clip action when record_pre_clip is
/// set; the teacher's likelihood gradients require those samples.
struct Request {
  env::Env* env = nullptr;
  const policy::DeterministicActor* actor = nullptr;
  const policy::GaussianPolicy* teacher = nullptr;
  policy::OuNoise* ou_noise = nullptr;
  double gaussian_sigma = 0.0;
  int n_steps = 0;
  int n_episodes = 0;
  bool record_pre_clip = true;
};

/// Executes the request, resetting the environment at the start and after
/// every finished episode. In step-budget mode the trailing unfinished
/// episode is returned with complete == false (its transitions are still
/// valid replay data). A zero budget returns an empty set.
std::vector<ddpg::Trajectory> collect(const Request& req, Rng& rng);

/// Sum of steps across trajectories.
std::size_t total_steps(const std::vector<ddpg::Trajectory>& trajectories);

}  // namespace metapg::rollout
