#include "metapg/selftest.hpp"

#include <cmath>
#include <cstdio>

#include "metapg/ddpg.hpp"
#include "metapg/finite_diff.hpp"
#include "metapg/nn.hpp"
#include "metapg/policies.hpp"
#include "metapg/meta.hpp"
#include "metapg/rng.hpp"

namespace metapg::selftest {

namespace {

Result tol_result(const std::string& name, double worst, double tol) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "max rel err %.3g (tol %.1g)", worst, tol);
  return Result{name, worst <= tol, buf};
}

std::vector<int> random_sizes(Rng& rng) {
  const int hidden_layers = static_cast<int>(uniform_index(rng, 3));  // 0..2
  std::vector<int> sizes;
  sizes.push_back(2 + static_cast<int>(uniform_index(rng, 5)));
  for (int i = 0; i < hidden_layers; ++i)
    sizes.push_back(2 + static_cast<int>(uniform_index(rng, 6)));
  sizes.push_back(1 + static_cast<int>(uniform_index(rng, 4)));
  return sizes;
}

/// Loss: sum over columns of a fixed random linear functional of the output.
double probe_loss(const nn::MlpParams& p, const Eigen::MatrixXd& input,
                  const Eigen::MatrixXd& probe) {
  return (probe.array() * nn::mlp_forward(p, input).array()).sum();
}

double check_one_mlp(const nn::MlpParams& p, Rng& rng, int batch) {
  const Eigen::MatrixXd input =
      Eigen::MatrixXd::NullaryExpr(p.input_dim(), batch, [&] { return standard_normal(rng); });
  const Eigen::MatrixXd probe =
      Eigen::MatrixXd::NullaryExpr(p.output_dim(), batch, [&] { return standard_normal(rng); });

  nn::ForwardCache cache;
  nn::mlp_forward(p, input, &cache);
  nn::MlpGrads analytic = nn::MlpGrads::zeros_like(p);
  const Eigen::MatrixXd input_grad = nn::mlp_backward(p, cache, probe, &analytic);

  const nn::MlpGrads numeric = fd::numeric_mlp_grads(
      p, [&](const nn::MlpParams& q) { return probe_loss(q, input, probe); });
  double worst = fd::max_rel_error(analytic, numeric);

  // Input gradient against the same oracle, column by column through a flat view.
  Eigen::VectorXd flat(input.size());
  for (Eigen::Index i = 0; i < input.size(); ++i) flat[i] = input.data()[i];
  const Eigen::VectorXd numeric_in = fd::numeric_vector_grad(flat, [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd shaped(input.rows(), input.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) shaped.data()[i] = x[i];
    return probe_loss(p, shaped, probe);
  });
  Eigen::MatrixXd numeric_in_shaped(input.rows(), input.cols());
  for (Eigen::Index i = 0; i < numeric_in.size(); ++i)
    numeric_in_shaped.data()[i] = numeric_in[i];
  worst = std::max(worst, fd::max_rel_error(input_grad, numeric_in_shaped));
  return worst;
}

Result check_random_mlps(Rng& rng, int draws) {
  double worst = 0.0;
  for (int d = 0; d < draws; ++d) {
    const auto act = uniform_index(rng, 2) ? nn::Activation::Tanh : nn::Activation::Linear;
    nn::MlpParams p = nn::make_mlp(random_sizes(rng), act, rng, /*final_init_scale=*/0.5);
    const int batch = 1 + static_cast<int>(uniform_index(rng, 4));
    worst = std::max(worst, check_one_mlp(p, rng, batch));
  }
  return tol_result("mlp forward/backward vs finite differences (" + std::to_string(draws) +
                        " random nets)",
                    worst, fd::kRelTol);
}

Result check_system_architectures(Rng& rng) {
  // The shapes actually trained on the pendulum task: actor, critic, teacher
  // mean, teacher log-std.
  const std::vector<std::pair<std::vector<int>, nn::Activation>> archs = {
      {{3, 64, 64, 1}, nn::Activation::Tanh},
      {{4, 64, 64, 1}, nn::Activation::Linear},
      {{3, 64, 64, 1}, nn::Activation::Tanh},
      {{3, 64, 64, 1}, nn::Activation::Linear},
  };
  double worst = 0.0;
  for (const auto& [sizes, act] : archs) {
    nn::MlpParams p = nn::make_mlp(sizes, act, rng, 0.1);
    worst = std::max(worst, check_one_mlp(p, rng, 3));
  }
  return tol_result("64-64 system architectures vs finite differences", worst, fd::kRelTol);
}

Result check_log_prob_grads(Rng& rng, int draws) {
  double worst = 0.0;
  for (int d = 0; d < draws; ++d) {
    const int s_dim = 2 + static_cast<int>(uniform_index(rng, 3));
    const int a_dim = 1 + static_cast<int>(uniform_index(rng, 3));
    const Eigen::VectorXd low = Eigen::VectorXd::Constant(a_dim, -2.0);
    const Eigen::VectorXd high = Eigen::VectorXd::Constant(a_dim, 2.0);
    policy::GaussianPolicyConfig cfg;
    cfg.hidden = {5, 4};
    cfg.final_init_scale = 0.3;
    policy::GaussianPolicy teacher =
        policy::make_independent_teacher(s_dim, a_dim, low, high, cfg, rng);

    const Eigen::VectorXd state = normal_vector(rng, s_dim);
    const policy::ActionSample a = teacher.sample(state, rng);
    const policy::TeacherGrads analytic = teacher.log_prob_grad(state, a.pre_clip);

    policy::GaussianPolicy probe = teacher;
    const auto mean_loss = [&](const nn::MlpParams& q) {
      probe.mean_net = q;
      return probe.log_prob(state, a.pre_clip);
    };
    worst = std::max(worst, fd::max_rel_error(analytic.mean_net,
                                              fd::numeric_mlp_grads(teacher.mean_net, mean_loss)));
    probe.mean_net = teacher.mean_net;
    const auto ls_loss = [&](const nn::MlpParams& q) {
      probe.log_std_net = q;
      return probe.log_prob(state, a.pre_clip);
    };
    worst = std::max(
        worst,
        fd::max_rel_error(analytic.log_std_net,
                          fd::numeric_mlp_grads(teacher.log_std_net, ls_loss)));
  }
  return tol_result("independent teacher log-prob gradients (" + std::to_string(draws) +
                        " draws)",
                    worst, fd::kRelTol);
}

Result check_adaptive_log_prob_grads(Rng& rng, int draws) {
  double worst = 0.0;
  for (int d = 0; d < draws; ++d) {
    const int s_dim = 3;
    const int a_dim = 1 + static_cast<int>(uniform_index(rng, 3));
    const Eigen::VectorXd low = Eigen::VectorXd::Constant(a_dim, -1.5);
    const Eigen::VectorXd high = Eigen::VectorXd::Constant(a_dim, 1.5);
    const policy::DeterministicActor actor =
        policy::make_actor(s_dim, a_dim, {6, 5}, low, high, rng, 0.3);
    policy::GaussianPolicyConfig cfg;
    policy::GaussianPolicy teacher = policy::make_adaptive_variance_teacher(actor, cfg);
    teacher.log_std = -0.5 * Eigen::VectorXd::Ones(a_dim) + 0.3 * normal_vector(rng, a_dim);

    const Eigen::VectorXd state = normal_vector(rng, s_dim);
    const policy::ActionSample a = teacher.sample(state, rng);
    const policy::TeacherGrads analytic = teacher.log_prob_grad(state, a.pre_clip);

    policy::GaussianPolicy probe = teacher;
    const Eigen::VectorXd numeric =
        fd::numeric_vector_grad(teacher.log_std, [&](const Eigen::VectorXd& v) {
          probe.log_std = v;
          return probe.log_prob(state, a.pre_clip);
        });
    worst = std::max(worst, fd::max_rel_error(analytic.log_std, numeric));
  }
  return tol_result("adaptive-variance teacher log-prob gradients (" + std::to_string(draws) +
                        " draws)",
                    worst, fd::kRelTol);
}

Result check_actor_objective(Rng& rng, int draws) {
  double worst = 0.0;
  for (int d = 0; d < draws; ++d) {
    const int s_dim = 2 + static_cast<int>(uniform_index(rng, 3));
    const int a_dim = 1 + static_cast<int>(uniform_index(rng, 2));
    const Eigen::VectorXd low = Eigen::VectorXd::Constant(a_dim, -1.0);
    const Eigen::VectorXd high = Eigen::VectorXd::Constant(a_dim, 1.0);
    policy::DeterministicActor actor = policy::make_actor(s_dim, a_dim, {5, 4}, low, high, rng, 0.3);
    const ddpg::CriticNet critic = ddpg::make_critic(s_dim, a_dim, {6, 5}, rng, 0.3);
    const Eigen::MatrixXd states =
        Eigen::MatrixXd::NullaryExpr(s_dim, 4, [&] { return standard_normal(rng); });

    const nn::MlpGrads analytic = ddpg::actor_objective_gradient(actor, critic, states);
    policy::DeterministicActor probe = actor;
    const nn::MlpGrads numeric =
        fd::numeric_mlp_grads(actor.net, [&](const nn::MlpParams& q) {
          probe.net = q;
          double sum = 0.0;
          for (Eigen::Index j = 0; j < states.cols(); ++j)
            sum += critic.value(states.col(j), probe.act(states.col(j)));
          return sum / static_cast<double>(states.cols());
        });
    worst = std::max(worst, fd::max_rel_error(analytic, numeric));
  }
  return tol_result("actor objective gradient (" + std::to_string(draws) + " draws)", worst,
                    fd::kRelTol);
}

/// Teacher over a 1-D state with no hidden layers, hand-set parameters:
///   mu = tanh(w s + b), log sigma = u s + c, action bounds [-1, 1].
policy::GaussianPolicy bandit_teacher() {
  policy::GaussianPolicy t;
  t.mode = policy::TeacherMode::Independent;
  t.low = Eigen::VectorXd::Constant(1, -1.0);
  t.high = Eigen::VectorXd::Constant(1, 1.0);

  t.mean_net.layer_sizes = {1, 1};
  t.mean_net.weights = {Eigen::MatrixXd::Constant(1, 1, 0.3)};
  t.mean_net.biases = {Eigen::VectorXd::Constant(1, -0.2)};
  t.mean_net.output_activation = nn::Activation::Tanh;

  t.log_std_net.layer_sizes = {1, 1};
  t.log_std_net.weights = {Eigen::MatrixXd::Constant(1, 1, 0.25)};
  t.log_std_net.biases = {Eigen::VectorXd::Constant(1, -0.8)};
  t.log_std_net.output_activation = nn::Activation::Linear;
  return t;
}

Result check_bandit_unbiasedness(Rng& rng, int draws) {
  const policy::GaussianPolicy teacher = bandit_teacher();
  const Eigen::VectorXd state = Eigen::VectorXd::Constant(1, 0.7);
  const double s = state[0];
  const double mu = std::tanh(0.3 * s - 0.2);
  const double sigma = std::exp(0.25 * s - 0.8);

  // J(theta) = E[-a^2] = -(mu^2 + sigma^2).
  const Eigen::Vector4d expected(-2.0 * mu * (1.0 - mu * mu) * s,
                                 -2.0 * mu * (1.0 - mu * mu),
                                 -2.0 * sigma * sigma * s,
                                 -2.0 * sigma * sigma);

  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  Eigen::Vector4d sumsq = Eigen::Vector4d::Zero();
  for (int i = 0; i < draws; ++i) {
    const policy::ActionSample a = teacher.sample(state, rng);
    ddpg::Trajectory traj;
    traj.complete = true;
    ddpg::Step step;
    step.t.state = state;
    step.t.action = a.executed;
    step.t.reward = -a.pre_clip[0] * a.pre_clip[0];
    step.t.next_state = state;
    step.pre_clip = a.pre_clip;
    traj.steps.push_back(step);

    const policy::TeacherGrads g =
        meta::teacher_gradient(teacher, {traj}, step.t.reward, 1.0, rng);
    const Eigen::Vector4d x(g.mean_net.weights[0](0, 0), g.mean_net.biases[0][0],
                            g.log_std_net.weights[0](0, 0), g.log_std_net.biases[0][0]);
    sum += x;
    sumsq += x.cwiseProduct(x);
  }

  const Eigen::Vector4d mean = sum / draws;
  double worst_z = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double var = (sumsq[i] - draws * mean[i] * mean[i]) / (draws - 1);
    const double se = std::sqrt(var / draws);
    worst_z = std::max(worst_z, std::abs(mean[i] - expected[i]) / se);
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "worst |z| %.2f over %d draws (limit 3)", worst_z, draws);
  return Result{"bandit meta-gradient unbiasedness", worst_z <= 3.0, buf};
}

Eigen::VectorXd flatten(const policy::TeacherGrads& g) {
  std::vector<double> v;
  auto push_grads = [&v](const nn::MlpGrads& mg) {
    for (const auto& w : mg.weights)
      for (Eigen::Index i = 0; i < w.size(); ++i) v.push_back(w.data()[i]);
    for (const auto& b : mg.biases)
      for (Eigen::Index i = 0; i < b.size(); ++i) v.push_back(b.data()[i]);
    for (const auto& x : mg.ln_gains)
      for (Eigen::Index i = 0; i < x.size(); ++i) v.push_back(x.data()[i]);
    for (const auto& x : mg.ln_shifts)
      for (Eigen::Index i = 0; i < x.size(); ++i) v.push_back(x.data()[i]);
  };
  push_grads(g.mean_net);
  push_grads(g.log_std_net);
  for (Eigen::Index i = 0; i < g.log_std.size(); ++i) v.push_back(g.log_std[i]);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Result check_subsample_unbiasedness(Rng& rng, int draws) {
  const policy::GaussianPolicy teacher = bandit_teacher();
  // A fixed 8-step trajectory; the subsampled estimate must match the full
  // sum in expectation.
  ddpg::Trajectory traj;
  traj.complete = true;
  for (int i = 0; i < 8; ++i) {
    const Eigen::VectorXd state = Eigen::VectorXd::Constant(1, -1.0 + 0.25 * i);
    const policy::ActionSample a = teacher.sample(state, rng);
    ddpg::Step step;
    step.t.state = state;
    step.t.action = a.executed;
    step.t.reward = 0.0;
    step.t.next_state = state;
    step.pre_clip = a.pre_clip;
    traj.steps.push_back(step);
  }

  const Eigen::VectorXd full =
      flatten(meta::teacher_gradient(teacher, {traj}, /*meta_r=*/1.0, 1.0, rng));

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(full.size());
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(full.size());
  for (int d = 0; d < draws; ++d) {
    const Eigen::VectorXd x =
        flatten(meta::teacher_gradient(teacher, {traj}, 1.0, 0.25, rng));
    sum += x;
    sumsq += x.cwiseProduct(x);
  }
  const Eigen::VectorXd mean = sum / draws;
  double worst_z = 0.0;
  for (Eigen::Index i = 0; i < full.size(); ++i) {
    const double var = (sumsq[i] - draws * mean[i] * mean[i]) / (draws - 1);
    const double se = std::sqrt(std::max(var / draws, 1e-300));
    worst_z = std::max(worst_z, std::abs(mean[i] - full[i]) / se);
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "worst |z| %.2f over %d draws (limit 3)", worst_z, draws);
  return Result{"subsampled meta-gradient unbiasedness (rate 0.25)", worst_z <= 3.0, buf};
}

}  // namespace

std::vector<Result> run_gradient_checks(std::uint64_t seed, int draws) {
  Rng rng = seed_stream(seed, "selftest.grad");
  std::vector<Result> out;
  out.push_back(check_random_mlps(rng, draws));
  out.push_back(check_system_architectures(rng));
  out.push_back(check_log_prob_grads(rng, std::max(draws / 4, 10)));
  out.push_back(check_adaptive_log_prob_grads(rng, std::max(draws / 4, 10)));
  out.push_back(check_actor_objective(rng, std::max(draws / 4, 10)));
  return out;
}

std::vector<Result> run_estimator_checks(std::uint64_t seed, int bandit_draws,
                                         int subsample_draws) {
  Rng rng = seed_stream(seed, "selftest.estimator");
  std::vector<Result> out;
  out.push_back(check_bandit_unbiasedness(rng, bandit_draws));
  out.push_back(check_subsample_unbiasedness(rng, subsample_draws));
  return out;
}

std::vector<Result> run_all(std::uint64_t seed) {
  std::vector<Result> out = run_gradient_checks(seed);
  for (auto& r : run_estimator_checks(seed)) out.push_back(std::move(r));
  return out;
}

bool report(const std::vector<Result>& results) {
  bool ok = true;
  for (const auto& r : results) {
    std::printf("[%s] %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    ok = ok && r.pass;
  }
  return ok;
}

}  // namespace metapg::selftest
