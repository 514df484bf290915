#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "metapg/envs.hpp"
#include "support.hpp"

using namespace metapg;
using env::make_env;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd action1(double u) { return Eigen::VectorXd::Constant(1, u); }

}  // namespace

TEST_SUITE("envs") {

TEST_CASE("angle_normalize maps into [-pi, pi)") {
  CHECK(env::angle_normalize(0.0) == 0.0);
  CHECK(env::angle_normalize(kPi) == doctest::Approx(-kPi).epsilon(1e-15));
  CHECK(env::angle_normalize(-kPi) == doctest::Approx(-kPi).epsilon(1e-15));
  CHECK(env::angle_normalize(2.0 * kPi) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(env::angle_normalize(-3.5 * kPi) == doctest::Approx(0.5 * kPi).epsilon(1e-12));
  for (double t = -20.0; t <= 20.0; t += 0.37) {
    const double m = env::angle_normalize(t);
    CHECK(m >= -kPi);
    CHECK(m < kPi);
    CHECK(std::abs(std::sin(m) - std::sin(t)) < 1e-12);
    CHECK(std::abs(std::cos(m) - std::cos(t)) < 1e-12);
  }
}

TEST_CASE("pendulum upright equilibrium is exact") {
  auto env = make_env("pendulum");
  env->set_state(Eigen::Vector2d(0.0, 0.0));
  for (int i = 0; i < 50; ++i) {
    const auto r = env->step(action1(0.0));
    CHECK(r.reward == 0.0);
    CHECK(env->state()[0] == 0.0);
    CHECK(env->state()[1] == 0.0);
    CHECK(r.obs[0] == 1.0);
  }
}

TEST_CASE("pendulum one-step integration matches a hand computation") {
  // theta = pi/4, theta_dot = 0, u = 1:
  //   theta_dot' = (15 sin(pi/4) + 3) * 0.05 = 0.6803300858899106
  //   theta'     = pi/4 + theta_dot' * 0.05 = 0.8194146676919438
  auto env = make_env("pendulum");
  env->set_state(Eigen::Vector2d(kPi / 4.0, 0.0));
  const auto r = env->step(action1(1.0));
  CHECK(env->state()[0] == doctest::Approx(0.8194146676919438).epsilon(1e-12));
  CHECK(env->state()[1] == doctest::Approx(0.6803300858899106).epsilon(1e-12));
  CHECK(r.obs[2] == env->state()[1]);
  // Reward charged on the pre-step state: -( (pi/4)^2 + 0 + 0.001 ).
  CHECK(r.reward == doctest::Approx(-(kPi * kPi / 16.0 + 0.001)).epsilon(1e-12));
}

TEST_CASE("pendulum speed clip applies after the position update") {
  auto env = make_env("pendulum");
  env->set_state(Eigen::Vector2d(kPi / 2.0, 7.9));
  env->step(action1(2.0));
  // Unclipped new speed 7.9 + (15 + 6) * 0.05 = 8.95 moves the angle, then
  // the stored speed saturates at 8.
  CHECK(env->state()[0] == doctest::Approx(kPi / 2.0 + 8.95 * 0.05).epsilon(1e-12));
  CHECK(env->state()[1] == 8.0);
}

TEST_CASE("pendulum hanging state costs pi^2 per step") {
  auto env = make_env("pendulum");
  env->set_state(Eigen::Vector2d(kPi, 0.0));
  const auto r = env->step(action1(0.0));
  CHECK(r.reward == doctest::Approx(-kPi * kPi).epsilon(1e-12));
}

TEST_CASE("pendulum torque is clipped and charged on the pre-step state") {
  auto env = make_env("pendulum");
  env->set_state(Eigen::Vector2d(0.0, 0.0));
  const auto r = env->step(action1(9.0));  // clipped to 2
  CHECK(r.reward == doctest::Approx(-0.001 * 4.0).epsilon(1e-12));
}

TEST_CASE("pendulum rewards stay within the closed-form bounds") {
  auto env = make_env("pendulum");
  Rng rng = seed_stream(41, "env_unit");
  const double worst = -(kPi * kPi + 0.1 * 64.0 + 0.001 * 4.0);
  for (int ep = 0; ep < 5; ++ep) {
    env->reset(rng);
    while (!env->done()) {
      const auto r = env->step(action1(uniform_real(rng, -2.0, 2.0)));
      CHECK(r.reward <= 0.0);
      CHECK(r.reward >= worst);
    }
  }
}

TEST_CASE("pendulum free swing conserves energy up to a bounded wobble") {
  // E = theta_dot^2 / 6 + 5 cos(theta) for the unit rod. The semi-implicit
  // integrator keeps |E - E0| under ~0.69 indefinitely on this orbit, while
  // a plain explicit Euler step drifts past 3 within the same horizon.
  auto env = make_env("pendulum", {{"max_episode_steps", 20000.0}});
  env->set_state(Eigen::Vector2d(kPi / 4.0, 0.0));
  auto energy = [&] {
    const double th = env->state()[0], td = env->state()[1];
    return td * td / 6.0 + 5.0 * std::cos(th);
  };
  const double e0 = energy();
  double max_drift = 0.0;
  for (int i = 0; i < 20000; ++i) {
    env->step(action1(0.0));
    max_drift = std::max(max_drift, std::abs(energy() - e0));
  }
  CHECK(max_drift < 0.75);
}

TEST_CASE("pendulum reset distribution and determinism") {
  auto env = make_env("pendulum");
  Rng rng = seed_stream(42, "env_unit");
  for (int i = 0; i < 2000; ++i) {
    env->reset(rng);
    CHECK(env->state()[0] >= -kPi);
    CHECK(env->state()[0] < kPi);
    CHECK(env->state()[1] >= -1.0);
    CHECK(env->state()[1] < 1.0);
  }
  Rng r1 = seed_stream(43, "env_unit");
  Rng r2 = seed_stream(43, "env_unit");
  auto e1 = make_env("pendulum");
  auto e2 = make_env("pendulum");
  CHECK(testsupport::vec_equal(e1->reset(r1), e2->reset(r2)));
  for (int i = 0; i < 20; ++i) {
    const double u = uniform_real(r1, -2.0, 2.0);
    uniform_real(r2, -2.0, 2.0);
    const auto s1 = e1->step(action1(u));
    const auto s2 = e2->step(action1(u));
    CHECK(testsupport::vec_equal(s1.obs, s2.obs));
    CHECK(s1.reward == s2.reward);
  }
}

TEST_CASE("episodes truncate at the step limit without a terminal flag") {
  auto env = make_env("pendulum", {{"max_episode_steps", 5.0}});
  Rng rng = seed_stream(44, "env_unit");
  env->reset(rng);
  for (int i = 0; i < 4; ++i) CHECK_FALSE(env->step(action1(0.0)).done);
  const auto last = env->step(action1(0.0));
  CHECK(last.done);
  CHECK_FALSE(last.terminal);
  CHECK(env->done());
  CHECK_THROWS_AS(env->step(action1(0.0)), std::logic_error);
}

TEST_CASE("stepping before any reset throws") {
  auto env = make_env("pendulum");
  CHECK_THROWS_AS(env->step(action1(0.0)), std::logic_error);
}

TEST_CASE("dimension mismatches throw") {
  auto env = make_env("pendulum");
  Rng rng = seed_stream(45, "env_unit");
  env->reset(rng);
  CHECK_THROWS_AS(env->step(Eigen::VectorXd::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(env->set_state(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("unknown environments and override keys are rejected") {
  CHECK_THROWS_AS(make_env("cartpole"), std::invalid_argument);
  const std::map<std::string, double> bad_pendulum{{"gravity", 9.8}};
  const std::map<std::string, double> bad_point{{"mass", 1.0}};
  CHECK_THROWS_AS(make_env("pendulum", bad_pendulum), std::invalid_argument);
  CHECK_THROWS_AS(make_env("point_mass", bad_point), std::invalid_argument);
}

TEST_CASE("dynamics overrides take effect") {
  auto heavy = make_env("pendulum", {{"g", 20.0}});
  CHECK(heavy->spec().constants.at("g") == 20.0);
  auto normal = make_env("pendulum");
  heavy->set_state(Eigen::Vector2d(kPi / 4.0, 0.0));
  normal->set_state(Eigen::Vector2d(kPi / 4.0, 0.0));
  heavy->step(action1(0.0));
  normal->step(action1(0.0));
  CHECK(heavy->state()[1] == doctest::Approx(2.0 * normal->state()[1]).epsilon(1e-12));

  auto strong = make_env("pendulum", {{"max_torque", 3.0}});
  CHECK(strong->spec().action_high[0] == 3.0);
  CHECK(strong->spec().action_low[0] == -3.0);
}

TEST_CASE("point mass reaches the goal disc and terminates") {
  auto env = make_env("point_mass");
  env->set_state(Eigen::Vector2d(0.85, 0.9));
  const auto r = env->step(Eigen::Vector2d(1.0, 0.0));  // moves to (0.9, 0.9)
  CHECK(r.reward == 1.0);
  CHECK(r.done);
  CHECK(r.terminal);
}

TEST_CASE("point mass away from the goal pays nothing and times out") {
  auto env = make_env("point_mass");
  env->set_state(Eigen::Vector2d(-1.0, -1.0));
  for (int i = 0; i < 99; ++i) {
    const auto r = env->step(Eigen::Vector2d(0.0, 0.0));
    CHECK(r.reward == 0.0);
    CHECK_FALSE(r.done);
  }
  const auto last = env->step(Eigen::Vector2d(0.0, 0.0));
  CHECK(last.done);
  CHECK_FALSE(last.terminal);
}

TEST_CASE("point mass clips position to the arena and actions to the unit box") {
  auto env = make_env("point_mass");
  env->set_state(Eigen::Vector2d(0.99, -0.99));
  env->step(Eigen::Vector2d(5.0, -5.0));  // action clipped to (1, -1)
  CHECK(env->state()[0] == 1.0);
  CHECK(env->state()[1] == -1.0);
  env->step(Eigen::Vector2d(1.0, -1.0));  // pinned at the walls
  CHECK(env->state()[0] == 1.0);
  CHECK(env->state()[1] == -1.0);
}

TEST_CASE("point mass goal geometry honors overrides") {
  auto env = make_env("point_mass", {{"goal_x", 0.0}, {"goal_y", 0.0}, {"goal_radius", 0.2}});
  env->set_state(Eigen::Vector2d(0.0, 0.3));
  const auto r = env->step(Eigen::Vector2d(0.0, -1.0));  // to (0, 0.25): outside 0.2
  CHECK(r.reward == 0.0);
  const auto r2 = env->step(Eigen::Vector2d(0.0, -1.0));  // to (0, 0.2): on the boundary
  CHECK(r2.reward == 1.0);
  CHECK(r2.terminal);
}

TEST_CASE("double integrator follows its linear dynamics exactly") {
  auto env = make_env("double_integrator");
  env->set_state(Eigen::Vector2d(0.5, -0.2));
  const auto r = env->step(action1(0.4));
  CHECK(env->state()[0] == doctest::Approx(0.49).epsilon(1e-15));
  CHECK(env->state()[1] == doctest::Approx(-0.18).epsilon(1e-15));
  CHECK(r.reward == doctest::Approx(-(0.25 + 0.1 * 0.04 + 0.001 * 0.16)).epsilon(1e-14));

  // A held action integrates quadratically: x accumulates v dt each step.
  env->set_state(Eigen::Vector2d(0.0, 0.0));
  double x = 0.0, v = 0.0;
  for (int i = 0; i < 50; ++i) {
    env->step(action1(1.0));
    x += v * 0.05;
    v += 1.0 * 0.05;
  }
  CHECK(env->state()[0] == doctest::Approx(x).epsilon(1e-12));
  CHECK(env->state()[1] == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("env specs describe the documented shapes") {
  const auto p = make_env("pendulum");
  CHECK(p->spec().obs_dim == 3);
  CHECK(p->spec().action_dim == 1);
  CHECK(p->spec().action_low[0] == -2.0);
  CHECK(p->spec().action_high[0] == 2.0);
  CHECK(p->spec().max_episode_steps == 200);

  const auto pm = make_env("point_mass");
  CHECK(pm->spec().obs_dim == 2);
  CHECK(pm->spec().action_dim == 2);
  CHECK(pm->spec().max_episode_steps == 100);

  const auto di = make_env("double_integrator");
  CHECK(di->spec().obs_dim == 2);
  CHECK(di->spec().action_dim == 1);
  CHECK(di->spec().max_episode_steps == 100);
}

}  // TEST_SUITE
