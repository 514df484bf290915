#include "metapg/rollout.hpp"

#include <stdexcept>

namespace metapg::rollout {

namespace {

std::string behavior_tag(const Request& req) {
  if (req.teacher) return "teacher";
  if (req.ou_noise) return "ou_noise";
  if (req.gaussian_sigma > 0.0) return "gaussian_noise";
  return "deterministic";
}

void validate(const Request& req) {
  if (!req.env) throw std::invalid_argument("rollout: env is required");
  if (!req.teacher && !req.actor) throw std::invalid_argument("rollout: no policy given");
  const bool steps_mode = req.n_steps > 0;
  const bool episodes_mode = req.n_episodes > 0;
  if (steps_mode == episodes_mode && (req.n_steps != 0 || req.n_episodes != 0))
    throw std::invalid_argument("rollout: set exactly one of n_steps / n_episodes");
  if (req.n_steps < 0 || req.n_episodes < 0)
    throw std::invalid_argument("rollout: negative budget");
  int sources = 0;
  sources += req.teacher ? 1 : 0;
  sources += req.ou_noise ? 1 : 0;
  sources += req.gaussian_sigma > 0.0 ? 1 : 0;
  if (sources > 1) throw std::invalid_argument("rollout: multiple stochastic behaviors set");
}

}  // namespace

std::vector<ddpg::Trajectory> collect(const Request& req, Rng& rng) {
  validate(req);
  std::vector<ddpg::Trajectory> out;
  if (req.n_steps == 0 && req.n_episodes == 0) return out;

  const std::string tag = behavior_tag(req);
  const bool steps_mode = req.n_steps > 0;
  env::Env& env = *req.env;

  Eigen::VectorXd obs = env.reset(rng);
  if (req.ou_noise) req.ou_noise->reset();
  ddpg::Trajectory traj;
  traj.behavior = tag;

  int steps_taken = 0;
  int episodes_done = 0;
  while (steps_mode ? steps_taken < req.n_steps : episodes_done < req.n_episodes) {
    ddpg::Step step;
    Eigen::VectorXd executed;
    if (req.teacher) {
      const policy::ActionSample s = req.teacher->sample(obs, rng);
      executed = s.executed;
      if (req.record_pre_clip) step.pre_clip = s.pre_clip;
    } else {
      Eigen::VectorXd a = req.actor->act(obs);
      if (req.ou_noise) {
        a += req.ou_noise->step(rng);
      } else if (req.gaussian_sigma > 0.0) {
        a += req.gaussian_sigma * normal_vector(rng, a.size());
      }
      if ((req.ou_noise || req.gaussian_sigma > 0.0) && req.record_pre_clip) step.pre_clip = a;
      executed = a.cwiseMax(req.actor->low).cwiseMin(req.actor->high);
    }

    const env::StepResult r = env.step(executed);
    step.t.state = obs;
    step.t.action = executed;
    step.t.reward = r.reward;
    step.t.next_state = r.obs;
    step.t.terminal = r.terminal;
    traj.steps.push_back(std::move(step));
    obs = r.obs;
    ++steps_taken;

    if (r.done) {
      traj.complete = true;
      out.push_back(std::move(traj));
      traj = ddpg::Trajectory{};
      traj.behavior = tag;
      ++episodes_done;
      const bool more = steps_mode ? steps_taken < req.n_steps : episodes_done < req.n_episodes;
      if (more) {
        obs = env.reset(rng);
        if (req.ou_noise) req.ou_noise->reset();
      }
    }
  }

  if (!traj.steps.empty()) out.push_back(std::move(traj));  // truncated by the budget
  return out;
}

std::size_t total_steps(const std::vector<ddpg::Trajectory>& trajectories) {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.steps.size();
  return n;
}

}  // namespace metapg::rollout
