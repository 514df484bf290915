#include "metapg/meta.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace metapg::meta {

namespace {

double episode_return(const ddpg::Trajectory& traj, double gamma) {
  if (gamma == 1.0) return traj.reward_sum();
  double sum = 0.0;
  double w = 1.0;
  for (const auto& step : traj.steps) {
    sum += w * step.t.reward;
    w *= gamma;
  }
  return sum;
}

ReturnEstimate mean_return(const std::vector<ddpg::Trajectory>& trajectories,
                           const std::string& tag, double gamma, bool complete_only) {
  double sum = 0.0;
  int n = 0;
  for (const auto& traj : trajectories) {
    if (complete_only && !traj.complete) continue;
    if (traj.steps.empty()) continue;
    sum += episode_return(traj, gamma);
    ++n;
  }
  if (n == 0) throw std::runtime_error("estimate_return: no complete episodes in the set");
  ReturnEstimate r;
  r.value = sum / n;
  r.n_episodes = n;
  r.policy_tag = tag;
  if (!std::isfinite(r.value)) throw std::runtime_error("estimate_return: non-finite return");
  return r;
}

}  // namespace

ReturnEstimate estimate_return(const std::vector<ddpg::Trajectory>& trajectories,
                               const std::string& policy_tag, double gamma) {
  return mean_return(trajectories, policy_tag, gamma, /*complete_only=*/true);
}

ReturnEstimate estimate_return_allow_partial(const std::vector<ddpg::Trajectory>& trajectories,
                                             const std::string& policy_tag, double gamma,
                                             bool* used_partial) {
  if (used_partial) *used_partial = false;
  for (const auto& traj : trajectories)
    if (traj.complete) return mean_return(trajectories, policy_tag, gamma, true);
  if (used_partial) *used_partial = true;
  return mean_return(trajectories, policy_tag, gamma, /*complete_only=*/false);
}

MetaReward meta_reward(const ReturnEstimate& r_new, const ReturnEstimate& r_old) {
  if (!std::isfinite(r_new.value) || !std::isfinite(r_old.value))
    throw std::invalid_argument("meta_reward: non-finite return estimate");
  MetaReward m;
  m.value = r_new.value - r_old.value;
  m.r_new = r_new;
  m.r_old = r_old;
  return m;
}

policy::TeacherGrads teacher_gradient(const policy::GaussianPolicy& teacher,
                                      const std::vector<ddpg::Trajectory>& d0, double meta_r,
                                      double subsample_rate, Rng& rng, int* n_used_out) {
  if (subsample_rate <= 0.0 || subsample_rate > 1.0)
    throw std::invalid_argument("teacher_gradient: subsample_rate must be in (0, 1]");

  std::vector<const ddpg::Step*> pairs;
  for (const auto& traj : d0)
    for (const auto& step : traj.steps) pairs.push_back(&step);
  if (pairs.empty()) throw std::invalid_argument("teacher_gradient: empty trajectory set");
  for (const auto* s : pairs)
    if (s->pre_clip.size() == 0)
      throw std::runtime_error(
          "teacher_gradient: transition lacks a pre-clip sample; was the data "
          "collected with record_pre_clip?");

  const std::size_t n = pairs.size();
  std::size_t k = n;
  if (subsample_rate < 1.0) {
    k = static_cast<std::size_t>(std::llround(subsample_rate * static_cast<double>(n)));
    k = std::min(std::max<std::size_t>(k, 1), n);
    // Partial Fisher-Yates: the first k entries become a uniform
    // without-replacement sample.
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + uniform_index(rng, n - i);
      std::swap(pairs[i], pairs[j]);
    }
  }
  if (n_used_out) *n_used_out = static_cast<int>(k);

  policy::TeacherGrads total = teacher.zero_grads();
  if (meta_r == 0.0) return total;

  for (std::size_t i = 0; i < k; ++i)
    total.add_scaled(teacher.log_prob_grad(pairs[i]->t.state, pairs[i]->pre_clip), 1.0);
  total.scale(meta_r * static_cast<double>(n) / static_cast<double>(k));
  return total;
}

TeacherOptimizer TeacherOptimizer::init(const policy::GaussianPolicy& teacher,
                                        double learning_rate) {
  TeacherOptimizer opt;
  if (teacher.mode == policy::TeacherMode::Independent) {
    opt.mean_adam = nn::AdamState::init(teacher.mean_net, learning_rate);
    opt.log_std_adam = nn::AdamState::init(teacher.log_std_net, learning_rate);
  } else {
    opt.log_std_vec_adam = nn::AdamVecState::init(teacher.log_std.size(), learning_rate);
  }
  return opt;
}

TeacherUpdateRecord teacher_update(policy::GaussianPolicy& teacher, TeacherOptimizer& opt,
                                   const policy::TeacherGrads& grad, const MetaReward& mr,
                                   int n_transitions_used, double effective_rate) {
  TeacherUpdateRecord rec;
  rec.meta = mr;
  rec.n_transitions_used = n_transitions_used;
  rec.subsample_rate = effective_rate;

  if (!grad.all_finite()) {
    rec.skipped = true;
    std::fprintf(stderr, "teacher_update: non-finite gradient, update skipped\n");
    return rec;
  }

  const double sq = grad.squared_norm();
  rec.gradient_norm = std::sqrt(sq);
  if (sq == 0.0) return rec;  // exact fixed point: no parameter or moment drift

  if (teacher.mode == policy::TeacherMode::Independent) {
    nn::adam_step(teacher.mean_net, grad.mean_net, opt.mean_adam, /*maximize=*/true);
    nn::adam_step(teacher.log_std_net, grad.log_std_net, opt.log_std_adam, /*maximize=*/true);
  } else {
    nn::adam_step(teacher.log_std, grad.log_std, opt.log_std_vec_adam, /*maximize=*/true);
  }
  teacher.clamp_log_std();
  return rec;
}

}  // namespace metapg::meta
