#pragma once

#include <string>
#include <vector>

#include "metapg/ddpg.hpp"
#include "metapg/policies.hpp"
#include "metapg/rng.hpp"

namespace metapg::meta {

/// Mean per-episode return of a trajectory set.
struct ReturnEstimate {
  double value = 0.0;
  int n_episodes = 0;
  std::string policy_tag;
};

/// Mean undiscounted reward sum over the COMPLETE episodes in the set
/// (gamma < 1 discounts within episodes). Throws when no episode completed.
ReturnEstimate estimate_return(const std::vector<ddpg::Trajectory>& trajectories,
                               const std::string& policy_tag, double gamma = 1.0);

/// Same, but falls back to truncated episode sums when nothing completed
/// (sets *used_partial); evaluation budgets occasionally truncate.
ReturnEstimate estimate_return_allow_partial(const std::vector<ddpg::Trajectory>& trajectories,
                                             const std::string& policy_tag, double gamma,
                                             bool* used_partial);

/// The teacher's learning signal: how much one exploration batch improved the
/// student on its own.
struct MetaReward {
  double value = 0.0;  // r_new.value - r_old.value, exactly
  ReturnEstimate r_new;
  ReturnEstimate r_old;
};

MetaReward meta_reward(const ReturnEstimate& r_new, const ReturnEstimate& r_old);

/// REINFORCE estimate of the meta-policy gradient:
///   meta_r * sum over (state, pre-clip action) pairs of grad log pi_e(a|s)
/// evaluated over a uniform without-replacement subsample of the pairs,
/// scaled by N/k so the estimate is unbiased for the full sum. Transitions
/// without stored pre-clip samples cannot be scored and throw.
/// n_used_out (optional) receives k.
policy::TeacherGrads teacher_gradient(const policy::GaussianPolicy& teacher,
                                      const std::vector<ddpg::Trajectory>& d0, double meta_r,
                                      double subsample_rate, Rng& rng,
                                      int* n_used_out = nullptr);

/// Adam state for whichever parameter set the teacher mode trains.
struct TeacherOptimizer {
  nn::AdamState mean_adam;
  nn::AdamState log_std_adam;
  nn::AdamVecState log_std_vec_adam;

  static TeacherOptimizer init(const policy::GaussianPolicy& teacher, double learning_rate);
};

struct TeacherUpdateRecord {
  MetaReward meta;
  int n_transitions_used = 0;
  double subsample_rate = 1.0;  // effective k/N
  double gradient_norm = 0.0;
  bool skipped = false;  // non-finite gradient: update rejected, training continues
};

/// One Adam ascent step on the teacher. An exactly-zero gradient leaves the
/// parameters AND the optimizer state untouched, so a zero meta-reward is a
/// true fixed point. Non-finite gradients are skipped with a stderr note.
/// The adaptive-variance log-std is clamped to its bounds after the step.
TeacherUpdateRecord teacher_update(policy::GaussianPolicy& teacher, TeacherOptimizer& opt,
                                   const policy::TeacherGrads& grad, const MetaReward& mr,
                                   int n_transitions_used, double effective_rate);

}  // namespace metapg::meta
