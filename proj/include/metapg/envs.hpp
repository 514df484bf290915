#pragma once

#include <Eigen/Core>
#include <map>
#include <memory>
#include <string>

#include "metapg/rng.hpp"

namespace metapg::env {

// Static description of an environment: shapes, action bounds, episode
// length, and the dynamics constants it was built with.
struct EnvSpec {
  std::string name;
  int obs_dim = 0;
  int action_dim = 0;
  Eigen::VectorXd action_low;
  Eigen::VectorXd action_high;
  int max_episode_steps = 0;
  std::map<std::string, double> constants;
};

struct StepResult {
  Eigen::VectorXd obs;
  double reward = 0.0;
  bool done = false;      // episode over (goal reached or step limit)
  bool terminal = false;  // true termination; false for time-limit truncation
};

// All stochasticity lives in reset(); step() is deterministic given the
// current state and action. Stepping a finished episode throws.
class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }
  const Eigen::VectorXd& state() const { return state_; }
  int episode_steps() const { return steps_; }
  bool done() const { return done_; }

  Eigen::VectorXd reset(Rng& rng);
  StepResult step(const Eigen::VectorXd& action);

  // Starts an episode from an explicit internal state. Intended for
  // diagnostics and dynamics tests; dimension must match state().
  void set_state(const Eigen::VectorXd& s);

 protected:
  virtual Eigen::VectorXd do_reset(Rng& rng) = 0;
  virtual StepResult do_step(const Eigen::VectorXd& action) = 0;

  EnvSpec spec_;
  Eigen::VectorXd state_;
  int steps_ = 0;
  bool done_ = true;
};

// Maps an angle to [-pi, pi).
double angle_normalize(double theta);

// Frictionless pendulum swing-up. State (theta, theta_dot) with theta = 0
// upright. Semi-implicit Euler, with the speed clip applied after the
// position update:
//   theta_dot' = theta_dot + (3g/(2l) sin(theta) + 3u/(m l^2)) dt
//   theta'     = theta + theta_dot' dt
//   theta_dot' = clip(theta_dot', +-max_speed)
// Reward -(angle_normalize(theta)^2 + 0.1 theta_dot^2 + 0.001 u^2) on the
// pre-update state. Defaults g=10, m=1, l=1, dt=0.05, torque in [-2,2],
// max_speed=8, 200-step episodes, reset theta ~ U(-pi,pi), theta_dot ~ U(-1,1).
// Observation (cos theta, sin theta, theta_dot).
class Pendulum : public Env {
 public:
  explicit Pendulum(const std::map<std::string, double>& overrides = {});

 protected:
  Eigen::VectorXd do_reset(Rng& rng) override;
  StepResult do_step(const Eigen::VectorXd& action) override;

 private:
  Eigen::VectorXd observe() const;
  double g_, m_, l_, dt_, max_torque_, max_speed_;
};

// Velocity-controlled point in the arena [-1,1]^2 with a sparse goal: reward
// +1 and termination inside a disc of radius goal_radius around
// (goal_x, goal_y), reward 0 elsewhere. p' = clip(p + a dt, -1, 1) with
// dt=0.05, 100-step episodes, reset position uniform in the arena.
// Observation is the position.
class PointMass : public Env {
 public:
  explicit PointMass(const std::map<std::string, double>& overrides = {});

 protected:
  Eigen::VectorXd do_reset(Rng& rng) override;
  StepResult do_step(const Eigen::VectorXd& action) override;

 private:
  double dt_, goal_x_, goal_y_, goal_radius_;
};

// 1-D double integrator with quadratic cost, explicit Euler:
//   x' = x + v dt,  v' = v + u dt,  reward -(x^2 + 0.1 v^2 + 0.001 u^2)
// on the pre-update state. u in [-1,1], dt=0.05, 100-step episodes, reset
// x ~ U(-1,1), v ~ U(-1,1). Observation (x, v). Linear dynamics admit an
// exact discrete LQR solution, used as a test oracle.
class DoubleIntegrator : public Env {
 public:
  explicit DoubleIntegrator(const std::map<std::string, double>& overrides = {});

 protected:
  Eigen::VectorXd do_reset(Rng& rng) override;
  StepResult do_step(const Eigen::VectorXd& action) override;

 private:
  double dt_;
};

// Known names: "pendulum", "point_mass", "double_integrator". Unknown names
// or override keys throw std::invalid_argument.
std::unique_ptr<Env> make_env(const std::string& name,
                              const std::map<std::string, double>& overrides = {});

}  // namespace metapg::env
