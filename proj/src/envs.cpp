#include "metapg/envs.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace metapg::env {

namespace {

constexpr double kPi = std::numbers::pi;

double take(std::map<std::string, double>& m, const std::string& key, double fallback) {
  auto it = m.find(key);
  if (it == m.end()) return fallback;
  const double v = it->second;
  m.erase(it);
  return v;
}

void require_empty(const std::map<std::string, double>& m, const std::string& env_name) {
  if (!m.empty())
    throw std::invalid_argument("unknown dynamics override for " + env_name + ": " +
                                m.begin()->first);
}

}  // namespace

double angle_normalize(double theta) {
  double m = std::fmod(theta + kPi, 2.0 * kPi);
  if (m < 0) m += 2.0 * kPi;
  return m - kPi;
}

Eigen::VectorXd Env::reset(Rng& rng) {
  steps_ = 0;
  done_ = false;
  return do_reset(rng);
}

void Env::set_state(const Eigen::VectorXd& s) {
  if (s.size() != state_.size())
    throw std::invalid_argument(spec_.name + ": set_state dimension mismatch");
  state_ = s;
  steps_ = 0;
  done_ = false;
}

StepResult Env::step(const Eigen::VectorXd& action) {
  if (done_) throw std::logic_error(spec_.name + ": step() on a finished episode; call reset()");
  if (action.size() != spec_.action_dim)
    throw std::invalid_argument(spec_.name + ": action dimension mismatch");
  StepResult r = do_step(action);
  ++steps_;
  if (steps_ >= spec_.max_episode_steps && !r.done) {
    r.done = true;
    r.terminal = false;
  }
  done_ = r.done;
  return r;
}

Pendulum::Pendulum(const std::map<std::string, double>& overrides) {
  auto ov = overrides;
  g_ = take(ov, "g", 10.0);
  m_ = take(ov, "m", 1.0);
  l_ = take(ov, "l", 1.0);
  dt_ = take(ov, "dt", 0.05);
  max_torque_ = take(ov, "max_torque", 2.0);
  max_speed_ = take(ov, "max_speed", 8.0);
  const int horizon = static_cast<int>(take(ov, "max_episode_steps", 200.0));
  require_empty(ov, "pendulum");

  spec_.name = "pendulum";
  spec_.obs_dim = 3;
  spec_.action_dim = 1;
  spec_.action_low = Eigen::VectorXd::Constant(1, -max_torque_);
  spec_.action_high = Eigen::VectorXd::Constant(1, max_torque_);
  spec_.max_episode_steps = horizon;
  spec_.constants = {{"g", g_},   {"m", m_},
                     {"l", l_},   {"dt", dt_},
                     {"max_torque", max_torque_}, {"max_speed", max_speed_}};
  state_ = Eigen::Vector2d::Zero();
}

Eigen::VectorXd Pendulum::observe() const {
  Eigen::VectorXd obs(3);
  obs << std::cos(state_[0]), std::sin(state_[0]), state_[1];
  return obs;
}

Eigen::VectorXd Pendulum::do_reset(Rng& rng) {
  state_[0] = uniform_real(rng, -kPi, kPi);
  state_[1] = uniform_real(rng, -1.0, 1.0);
  return observe();
}

StepResult Pendulum::do_step(const Eigen::VectorXd& action) {
  const double th = state_[0];
  const double thdot = state_[1];
  const double u = std::clamp(action[0], -max_torque_, max_torque_);

  const double cost = angle_normalize(th) * angle_normalize(th) + 0.1 * thdot * thdot +
                      0.001 * u * u;

  // -3g/(2l) * sin(th + pi) written in the equivalent form +3g/(2l) * sin(th)
  // so the upright equilibrium is exact.
  const double newthdot = thdot + (3.0 * g_ / (2.0 * l_) * std::sin(th) +
                                   3.0 / (m_ * l_ * l_) * u) *
                                      dt_;
  const double newth = th + newthdot * dt_;
  state_[0] = newth;
  state_[1] = std::clamp(newthdot, -max_speed_, max_speed_);

  StepResult r;
  r.obs = observe();
  r.reward = -cost;
  return r;
}

PointMass::PointMass(const std::map<std::string, double>& overrides) {
  auto ov = overrides;
  dt_ = take(ov, "dt", 0.05);
  goal_x_ = take(ov, "goal_x", 0.9);
  goal_y_ = take(ov, "goal_y", 0.9);
  goal_radius_ = take(ov, "goal_radius", 0.1);
  const int horizon = static_cast<int>(take(ov, "max_episode_steps", 100.0));
  require_empty(ov, "point_mass");

  spec_.name = "point_mass";
  spec_.obs_dim = 2;
  spec_.action_dim = 2;
  spec_.action_low = Eigen::VectorXd::Constant(2, -1.0);
  spec_.action_high = Eigen::VectorXd::Constant(2, 1.0);
  spec_.max_episode_steps = horizon;
  spec_.constants = {{"dt", dt_},
                     {"goal_x", goal_x_},
                     {"goal_y", goal_y_},
                     {"goal_radius", goal_radius_}};
  state_ = Eigen::Vector2d::Zero();
}

Eigen::VectorXd PointMass::do_reset(Rng& rng) {
  state_[0] = uniform_real(rng, -1.0, 1.0);
  state_[1] = uniform_real(rng, -1.0, 1.0);
  return state_;
}

StepResult PointMass::do_step(const Eigen::VectorXd& action) {
  const Eigen::Vector2d a(std::clamp(action[0], -1.0, 1.0), std::clamp(action[1], -1.0, 1.0));
  state_[0] = std::clamp(state_[0] + a[0] * dt_, -1.0, 1.0);
  state_[1] = std::clamp(state_[1] + a[1] * dt_, -1.0, 1.0);

  const double dx = state_[0] - goal_x_;
  const double dy = state_[1] - goal_y_;
  const bool in_goal = dx * dx + dy * dy <= goal_radius_ * goal_radius_;

  StepResult r;
  r.obs = state_;
  r.reward = in_goal ? 1.0 : 0.0;
  r.done = in_goal;
  r.terminal = in_goal;
  return r;
}

DoubleIntegrator::DoubleIntegrator(const std::map<std::string, double>& overrides) {
  auto ov = overrides;
  dt_ = take(ov, "dt", 0.05);
  const int horizon = static_cast<int>(take(ov, "max_episode_steps", 100.0));
  require_empty(ov, "double_integrator");

  spec_.name = "double_integrator";
  spec_.obs_dim = 2;
  spec_.action_dim = 1;
  spec_.action_low = Eigen::VectorXd::Constant(1, -1.0);
  spec_.action_high = Eigen::VectorXd::Constant(1, 1.0);
  spec_.max_episode_steps = horizon;
  spec_.constants = {{"dt", dt_}};
  state_ = Eigen::Vector2d::Zero();
}

Eigen::VectorXd DoubleIntegrator::do_reset(Rng& rng) {
  state_[0] = uniform_real(rng, -1.0, 1.0);
  state_[1] = uniform_real(rng, -1.0, 1.0);
  return state_;
}

StepResult DoubleIntegrator::do_step(const Eigen::VectorXd& action) {
  const double x = state_[0];
  const double v = state_[1];
  const double u = std::clamp(action[0], -1.0, 1.0);

  const double cost = x * x + 0.1 * v * v + 0.001 * u * u;
  state_[0] = x + v * dt_;
  state_[1] = v + u * dt_;

  StepResult r;
  r.obs = state_;
  r.reward = -cost;
  return r;
}

std::unique_ptr<Env> make_env(const std::string& name,
                              const std::map<std::string, double>& overrides) {
  if (name == "pendulum") return std::make_unique<Pendulum>(overrides);
  if (name == "point_mass") return std::make_unique<PointMass>(overrides);
  if (name == "double_integrator") return std::make_unique<DoubleIntegrator>(overrides);
  throw std::invalid_argument("unknown environment: " + name);
}

}  // namespace metapg::env
