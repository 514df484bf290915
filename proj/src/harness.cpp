#include "metapg/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>

#include "metapg/checkpoint.hpp"
#include "metapg/ddpg.hpp"
#include "metapg/meta.hpp"
#include "metapg/rollout.hpp"

namespace metapg::harness {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Streams {
  Rng init;
  Rng rollout;
  Rng buffer;
  Rng meta;
};

Streams make_streams(std::uint64_t seed) {
  return Streams{seed_stream(seed, "policy_init"), seed_stream(seed, "rollout"),
                 seed_stream(seed, "buffer"), seed_stream(seed, "meta")};
}

class Clock {
 public:
  Clock() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

void push_all(ddpg::ReplayBuffer& buffer, const std::vector<ddpg::Trajectory>& trajs) {
  for (const auto& traj : trajs)
    for (const auto& step : traj.steps) buffer.push(step.t);
}

/// Actions scale with the action range, so the configured noise levels are
/// fractions of the half span. All built-in envs have a uniform span.
double uniform_half_span(const policy::DeterministicActor& actor) {
  const Eigen::VectorXd half = actor.half_span();
  for (Eigen::Index d = 1; d < half.size(); ++d)
    if (half[d] != half[0])
      throw std::invalid_argument("noise scaling expects a uniform action span");
  return half[0];
}

double mean_log_std(const policy::GaussianPolicy& teacher,
                    const std::vector<ddpg::Trajectory>& trajs) {
  if (teacher.mode == policy::TeacherMode::AdaptiveVariance) return teacher.log_std.mean();
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& traj : trajs)
    for (const auto& step : traj.steps) {
      sum += teacher.sigma(step.t.state).array().log().mean();
      ++n;
    }
  return n ? sum / static_cast<double>(n) : kNaN;
}

class VisitationLog {
 public:
  VisitationLog(const std::string& path, int obs_dim) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path);
    out_ << "cycle,step";
    for (int d = 0; d < obs_dim; ++d) out_ << ",obs" << d;
    out_ << "\n";
  }

  void add(int cycle, const std::vector<ddpg::Trajectory>& trajs) {
    int i = 0;
    char buf[40];
    for (const auto& traj : trajs)
      for (const auto& step : traj.steps) {
        out_ << cycle << "," << i++;
        for (Eigen::Index d = 0; d < step.t.state.size(); ++d) {
          std::snprintf(buf, sizeof buf, "%.17g", step.t.state[d]);
          out_ << "," << buf;
        }
        out_ << "\n";
      }
    out_.flush();
  }

 private:
  std::ofstream out_;
};

struct RunContext {
  const config::ExperimentConfig& cfg;
  std::uint64_t seed;
  std::unique_ptr<env::Env> env;
  Streams streams;
  Clock clock;
  std::optional<metrics::Writer> writer;
  std::optional<VisitationLog> visitation;
  RunArtifacts artifacts;

  RunContext(const config::ExperimentConfig& c, std::uint64_t s, const std::string& out_dir)
      : cfg(c), seed(s), env(env::make_env(c.env, c.env_overrides)), streams(make_streams(s)) {
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      std::ofstream cfg_out(out_dir + "/config.effective");
      if (!cfg_out) throw std::runtime_error("cannot write " + out_dir + "/config.effective");
      cfg_out << config::to_file_string(c) << "seed_used = " << s << "\n";
      writer.emplace(out_dir + "/metrics.csv", out_dir + "/metrics.jsonl");
      if (c.log_visitation) visitation.emplace(out_dir + "/visitation.csv", env->spec().obs_dim);
      artifacts.out_dir = out_dir;
    }
  }

  bool more_cycles(int next_cycle) const {
    if (next_cycle > cfg.epoch_cycles) return false;
    if (cfg.total_steps > 0 && artifacts.env_steps >= cfg.total_steps) return false;
    return true;
  }

  void record(metrics::Record r) {
    r.wall_clock_s = clock.seconds();
    if (writer) writer->append(r);
    artifacts.records.push_back(r);
  }

  void save_checkpoint(const checkpoint::Checkpoint& c) const {
    if (!artifacts.out_dir.empty())
      checkpoint::save(artifacts.out_dir + "/checkpoint.final", c);
  }
};

ddpg::DdpgConfig learner_config(const config::ExperimentConfig& cfg) {
  ddpg::DdpgConfig dc;
  dc.actor_hidden = cfg.hidden;
  dc.critic_hidden = cfg.hidden;
  dc.actor_lr = cfg.actor_lr;
  dc.critic_lr = cfg.critic_lr;
  dc.gamma = cfg.gamma;
  dc.tau = cfg.tau;
  dc.batch_size = cfg.batch_size;
  dc.buffer_capacity = cfg.buffer_capacity;
  return dc;
}

std::vector<ddpg::Trajectory> eval_rollout(RunContext& ctx,
                                           const policy::DeterministicActor& actor) {
  rollout::Request req;
  req.env = ctx.env.get();
  req.actor = &actor;
  req.n_steps = ctx.cfg.evaluation_steps;
  auto trajs = rollout::collect(req, ctx.streams.rollout);
  ctx.artifacts.env_steps += rollout::total_steps(trajs);
  return trajs;
}

meta::ReturnEstimate estimate(const RunContext& ctx, const std::vector<ddpg::Trajectory>& trajs,
                              const std::string& tag) {
  bool used_partial = false;
  const auto r =
      meta::estimate_return_allow_partial(trajs, tag, ctx.cfg.eval_gamma, &used_partial);
  if (used_partial)
    std::fprintf(stderr, "warning: no complete episode in %s evaluation, using truncated sums\n",
                 tag.c_str());
  return r;
}

void run_meta(RunContext& ctx) {
  const config::ExperimentConfig& cfg = ctx.cfg;
  const env::EnvSpec& spec = ctx.env->spec();

  ddpg::DdpgLearner learner =
      ddpg::make_learner(spec.obs_dim, spec.action_dim, spec.action_low, spec.action_high,
                         learner_config(cfg), ctx.streams.init);
  policy::GaussianPolicyConfig gp;
  gp.hidden = cfg.hidden;
  gp.log_std_lo = cfg.log_std_lo;
  gp.log_std_hi = cfg.log_std_hi;
  gp.init_log_std_scale = cfg.init_log_std_scale;
  policy::GaussianPolicy teacher =
      cfg.algorithm == "meta_independent"
          ? policy::make_independent_teacher(spec.obs_dim, spec.action_dim, spec.action_low,
                                             spec.action_high, gp, ctx.streams.init)
          : policy::make_adaptive_variance_teacher(learner.actor, gp);
  meta::TeacherOptimizer teacher_opt = meta::TeacherOptimizer::init(teacher, cfg.meta_lr);
  ddpg::ReplayBuffer buffer(cfg.buffer_capacity);

  // Initialization: evaluate the fresh student once; that data seeds the
  // buffer and the first cycle's baseline return.
  auto d1 = eval_rollout(ctx, learner.actor);
  meta::ReturnEstimate r_pi = estimate(ctx, d1, "pi");
  push_all(buffer, d1);

  metrics::Record init_rec;
  init_rec.cycle = 0;
  init_rec.env_steps = ctx.artifacts.env_steps;
  init_rec.r_pi = r_pi.value;
  init_rec.r_pi_prime = kNaN;
  init_rec.meta_reward = kNaN;
  init_rec.eval_return = r_pi.value;
  init_rec.teacher_grad_norm = kNaN;
  init_rec.teacher_mean_log_std = mean_log_std(teacher, d1);
  init_rec.critic_loss = kNaN;
  ctx.record(init_rec);

  double baseline_mean = 0.0;   // running mean of raw meta-rewards
  double running_abs = 0.0;     // running mean of |meta-reward|
  int meta_count = 0;

  int cycle = 1;
  for (; ctx.more_cycles(cycle); ++cycle) {
    try {
      // Teacher explores.
      rollout::Request explore;
      explore.env = ctx.env.get();
      explore.actor = &learner.actor;
      explore.teacher = &teacher;
      explore.n_steps = cfg.exploration_rollout_steps;
      explore.record_pre_clip = true;
      auto d0 = rollout::collect(explore, ctx.streams.rollout);
      ctx.artifacts.env_steps += rollout::total_steps(d0);
      if (ctx.visitation) ctx.visitation->add(cycle, d0);

      // Exercise move: a throwaway student trained on d0 alone scores it.
      // An adaptive-variance teacher keeps following the real student.
      ddpg::DdpgLearner lookahead = learner;
      const ddpg::TrajectoryView d0_view(d0);
      ddpg::ddpg_update(lookahead, d0_view, cfg.lookahead_train_steps, ctx.streams.buffer);

      auto d1_new = eval_rollout(ctx, lookahead.actor);
      const meta::ReturnEstimate r_pi_prime = estimate(ctx, d1_new, "pi_prime");
      const meta::MetaReward mr = meta::meta_reward(r_pi_prime, r_pi);

      double signal = mr.value;
      ++meta_count;
      if (cfg.meta_reward_baseline) {
        signal -= baseline_mean;
        baseline_mean += (mr.value - baseline_mean) / meta_count;
      }
      if (cfg.meta_reward_normalize) {
        running_abs += (std::abs(mr.value) - running_abs) / meta_count;
        signal /= std::max(running_abs, 1e-8);
      }

      int n_used = 0;
      policy::TeacherGrads grad =
          meta::teacher_gradient(teacher, d0, signal, cfg.subsample_rate, ctx.streams.meta,
                                 &n_used);
      if (cfg.meta_grad_clip > 0.0) {
        const double norm = std::sqrt(grad.squared_norm());
        if (norm > cfg.meta_grad_clip) grad.scale(cfg.meta_grad_clip / norm);
      }
      const double rate =
          static_cast<double>(n_used) / static_cast<double>(rollout::total_steps(d0));
      meta::TeacherUpdateRecord up;
      for (int i = 0; i < cfg.exploration_train_steps; ++i)
        up = meta::teacher_update(teacher, teacher_opt, grad, mr, n_used, rate);

      // Everything explored or evaluated this cycle feeds the buffer.
      push_all(buffer, d0);
      push_all(buffer, d1_new);
      const double critic_loss =
          ddpg::ddpg_update(learner, buffer, cfg.train_steps, ctx.streams.buffer);

      metrics::Record rec;
      rec.cycle = cycle;
      rec.r_pi = mr.r_old.value;
      rec.r_pi_prime = r_pi_prime.value;
      rec.meta_reward = mr.value;
      rec.eval_return = r_pi_prime.value;
      rec.teacher_grad_norm = up.skipped ? kNaN : up.gradient_norm;
      rec.teacher_mean_log_std = mean_log_std(teacher, d0);
      rec.critic_loss = critic_loss;

      if (cfg.fresh_eval_after_buffer_update) {
        auto d2 = eval_rollout(ctx, learner.actor);
        r_pi = estimate(ctx, d2, "pi");
        push_all(buffer, d2);
        rec.eval_return = r_pi.value;
      } else {
        r_pi = r_pi_prime;  // the next cycle's baseline, no extra samples
      }

      rec.env_steps = ctx.artifacts.env_steps;
      ctx.record(rec);
    } catch (const std::exception& e) {
      throw std::runtime_error("cycle " + std::to_string(cycle) + ": " + e.what());
    }
  }
  ctx.artifacts.cycles_run = cycle - 1;

  checkpoint::Checkpoint cp;
  cp.algorithm = cfg.algorithm;
  cp.env_name = cfg.env;
  cp.env_overrides = cfg.env_overrides;
  cp.learner = learner;
  cp.has_teacher = true;
  cp.teacher = teacher;
  cp.teacher_opt = teacher_opt;
  cp.master_seed = ctx.seed;
  cp.env_steps = ctx.artifacts.env_steps;
  cp.cycle = ctx.artifacts.cycles_run;
  cp.r_pi = r_pi.value;
  cp.has_r_pi = true;
  ctx.save_checkpoint(cp);
}

void run_baseline(RunContext& ctx) {
  const config::ExperimentConfig& cfg = ctx.cfg;
  const env::EnvSpec& spec = ctx.env->spec();

  ddpg::DdpgLearner learner =
      ddpg::make_learner(spec.obs_dim, spec.action_dim, spec.action_low, spec.action_high,
                         learner_config(cfg), ctx.streams.init);
  ddpg::ReplayBuffer buffer(cfg.buffer_capacity);

  const double half_span = uniform_half_span(learner.actor);
  const bool use_ou = cfg.algorithm == "ddpg_ou";
  policy::OuNoise ou =
      policy::OuNoise::make(spec.action_dim, cfg.ou_theta, cfg.ou_sigma * half_span);

  auto eval0 = eval_rollout(ctx, learner.actor);
  metrics::Record init_rec;
  init_rec.cycle = 0;
  init_rec.env_steps = ctx.artifacts.env_steps;
  init_rec.r_pi = kNaN;
  init_rec.r_pi_prime = kNaN;
  init_rec.meta_reward = kNaN;
  init_rec.eval_return = estimate(ctx, eval0, "pi").value;
  init_rec.teacher_grad_norm = kNaN;
  init_rec.teacher_mean_log_std = kNaN;
  init_rec.critic_loss = kNaN;
  ctx.record(init_rec);

  int cycle = 1;
  for (; ctx.more_cycles(cycle); ++cycle) {
    try {
      rollout::Request explore;
      explore.env = ctx.env.get();
      explore.actor = &learner.actor;
      if (use_ou) explore.ou_noise = &ou;
      else explore.gaussian_sigma = cfg.noise_sigma * half_span;
      explore.n_steps = cfg.rollout_steps;
      explore.record_pre_clip = false;
      auto rollouts = rollout::collect(explore, ctx.streams.rollout);
      ctx.artifacts.env_steps += rollout::total_steps(rollouts);
      if (ctx.visitation) ctx.visitation->add(cycle, rollouts);
      push_all(buffer, rollouts);

      const double critic_loss =
          ddpg::ddpg_update(learner, buffer, cfg.train_steps, ctx.streams.buffer);

      auto evals = eval_rollout(ctx, learner.actor);

      metrics::Record rec;
      rec.cycle = cycle;
      rec.env_steps = ctx.artifacts.env_steps;
      rec.r_pi = kNaN;
      rec.r_pi_prime = kNaN;
      rec.meta_reward = kNaN;
      rec.eval_return = estimate(ctx, evals, "pi").value;
      rec.teacher_grad_norm = kNaN;
      rec.teacher_mean_log_std = kNaN;
      rec.critic_loss = critic_loss;
      ctx.record(rec);
    } catch (const std::exception& e) {
      throw std::runtime_error("cycle " + std::to_string(cycle) + ": " + e.what());
    }
  }
  ctx.artifacts.cycles_run = cycle - 1;

  checkpoint::Checkpoint cp;
  cp.algorithm = cfg.algorithm;
  cp.env_name = cfg.env;
  cp.env_overrides = cfg.env_overrides;
  cp.learner = learner;
  cp.master_seed = ctx.seed;
  cp.env_steps = ctx.artifacts.env_steps;
  cp.cycle = ctx.artifacts.cycles_run;
  ctx.save_checkpoint(cp);
}

}  // namespace

RunArtifacts run_experiment(const config::ExperimentConfig& cfg, std::uint64_t seed,
                            const std::string& out_dir) {
  cfg.validate();
  RunContext ctx(cfg, seed, out_dir);
  if (config::is_meta_algorithm(cfg.algorithm)) run_meta(ctx);
  else run_baseline(ctx);
  return std::move(ctx.artifacts);
}

EvalStats evaluate_actor(const policy::DeterministicActor& actor, env::Env& env, int n_episodes,
                         Rng& rng) {
  if (n_episodes <= 0) throw std::invalid_argument("evaluate_actor: n_episodes must be positive");
  rollout::Request req;
  req.env = &env;
  req.actor = &actor;
  req.n_episodes = n_episodes;
  const auto trajs = rollout::collect(req, rng);

  EvalStats stats;
  double sum = 0.0;
  for (const auto& t : trajs) sum += t.reward_sum();
  stats.n_episodes = static_cast<int>(trajs.size());
  stats.mean = sum / stats.n_episodes;
  double ss = 0.0;
  for (const auto& t : trajs) {
    const double d = t.reward_sum() - stats.mean;
    ss += d * d;
  }
  stats.stddev = stats.n_episodes > 1 ? std::sqrt(ss / (stats.n_episodes - 1)) : 0.0;
  return stats;
}

}  // namespace metapg::harness
