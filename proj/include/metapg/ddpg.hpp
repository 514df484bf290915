#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "metapg/nn.hpp"
#include "metapg/policies.hpp"
#include "metapg/rng.hpp"

namespace metapg::ddpg {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;  // executed (clipped) action
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool terminal = false;  // true termination; time-limit truncation stays false
};

/// One environment step as recorded during rollout: the transition plus the
/// raw pre-clip sample when the behavior policy was Gaussian (size 0 when it
/// was not).
struct Step {
  Transition t;
  Eigen::VectorXd pre_clip;
};

/// One (possibly truncated) episode. `complete` means the episode reached a
/// terminal state or the environment step limit inside the collection budget;
/// return estimates use only complete episodes.
struct Trajectory {
  std::vector<Step> steps;
  bool complete = false;
  std::string behavior;

  double reward_sum() const;
};

/// Uniform-sampling view over a fixed set of transitions. Implemented by the
/// replay buffer and by flattened trajectory sets, so the same update code
/// serves both the main student (sampling the buffer) and the lookahead
/// student (sampling only the fresh exploration data).
class TransitionSource {
 public:
  virtual ~TransitionSource() = default;
  virtual std::size_t size() const = 0;
  virtual const Transition& at(std::size_t i) const = 0;
};

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer final : public TransitionSource {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const override { return size_; }
  std::size_t capacity() const { return data_.size(); }
  std::uint64_t total_pushed() const { return pushed_; }

  /// Index 0 is the oldest retained transition.
  const Transition& at(std::size_t i) const override;

 private:
  std::vector<Transition> data_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  std::uint64_t pushed_ = 0;
};

/// Flattening adapter over a trajectory set (no copies; the trajectories must
/// outlive the view).
class TrajectoryView final : public TransitionSource {
 public:
  explicit TrajectoryView(const std::vector<Trajectory>& trajectories);

  std::size_t size() const override { return steps_.size(); }
  const Transition& at(std::size_t i) const override { return steps_[i]->t; }
  const Step& step(std::size_t i) const { return *steps_[i]; }

 private:
  std::vector<const Step*> steps_;
};

/// Column-per-sample training batch.
struct Batch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd not_terminal;  // 1.0 where bootstrapping applies

  Eigen::Index size() const { return rewards.size(); }
};

/// Uniform with replacement over the source contents.
Batch sample_batch(const TransitionSource& src, std::size_t batch_size, Rng& rng);

/// Q-network over the concatenated (state, action) input.
struct CriticNet {
  nn::MlpParams net;  // (state_dim + action_dim) -> 1, linear output

  double value(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const;
  /// Returns one Q value per column of (states, actions).
  Eigen::VectorXd value_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                              nn::ForwardCache* cache = nullptr) const;
};

CriticNet make_critic(int state_dim, int action_dim, const std::vector<int>& hidden, Rng& rng,
                      double final_init_scale = 3e-3);

/// Slow-moving copies of the online networks used to form Bellman targets.
struct TargetPair {
  policy::DeterministicActor target_actor;
  CriticNet target_critic;
  double tau = 0.001;
};

TargetPair make_targets(const policy::DeterministicActor& actor, const CriticNet& critic,
                        double tau);

/// target <- tau * online + (1 - tau) * target for both networks.
void soft_update(TargetPair& targets, const policy::DeterministicActor& actor,
                 const CriticNet& critic);

/// One Adam step on the mean squared Bellman error
///   y_j = r_j + gamma * (1 - terminal_j) * Q_target(s'_j, mu_target(s'_j))
/// with y_j held fixed (no gradient flows through the targets). Returns the
/// pre-update loss. A non-finite loss aborts the update by throwing.
double critic_update(CriticNet& critic, const TargetPair& targets, const Batch& batch,
                     double gamma, nn::AdamState& adam);

/// Gradient of mean_j Q(s_j, mu(s_j)) w.r.t. the actor parameters (ascent
/// direction is +gradient): the critic's action-input gradient chained
/// through the actor. Shared by actor_update and the gradient checks.
nn::MlpGrads actor_objective_gradient(const policy::DeterministicActor& actor,
                                      const CriticNet& critic, const Eigen::MatrixXd& states,
                                      double* objective_out = nullptr);

/// One Adam ascent step on mean_j Q(s_j, mu(s_j)). The critic is read-only
/// here. Returns the pre-update objective value.
double actor_update(policy::DeterministicActor& actor, const CriticNet& critic,
                    const Eigen::MatrixXd& states, nn::AdamState& adam);

struct DdpgConfig {
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double tau = 0.001;
  int batch_size = 64;
  std::size_t buffer_capacity = 1'000'000;
};

/// The student: online actor/critic, their targets, and optimizer state.
/// Copyable by design; the meta layer trains a throwaway copy on fresh
/// exploration data to score the teacher.
struct DdpgLearner {
  policy::DeterministicActor actor;
  CriticNet critic;
  TargetPair targets;
  nn::AdamState actor_adam;
  nn::AdamState critic_adam;
  DdpgConfig config;
};

DdpgLearner make_learner(int state_dim, int action_dim, const Eigen::VectorXd& action_low,
                         const Eigen::VectorXd& action_high, const DdpgConfig& cfg, Rng& rng);

/// n_steps iterations of critic step + actor step + soft target update, each
/// on a fresh uniform batch from src. Returns the mean critic loss over the
/// performed steps (0.0 when n_steps == 0). Source must be non-empty unless
/// n_steps == 0.
double ddpg_update(DdpgLearner& learner, const TransitionSource& src, int n_steps, Rng& rng);

}  // namespace metapg::ddpg
