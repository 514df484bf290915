#include "metapg/ddpg.hpp"

#include <cmath>
#include <stdexcept>

namespace metapg::ddpg {

double Trajectory::reward_sum() const {
  double s = 0.0;
  for (const auto& step : steps) s += step.t.reward;
  return s;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : data_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  data_[next_] = t;
  next_ = (next_ + 1) % data_.size();
  if (size_ < data_.size()) ++size_;
  ++pushed_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::at");
  // When full, next_ is also the oldest slot.
  const std::size_t oldest = (size_ < data_.size()) ? 0 : next_;
  return data_[(oldest + i) % data_.size()];
}

TrajectoryView::TrajectoryView(const std::vector<Trajectory>& trajectories) {
  for (const auto& traj : trajectories)
    for (const auto& s : traj.steps) steps_.push_back(&s);
}

Batch sample_batch(const TransitionSource& src, std::size_t batch_size, Rng& rng) {
  if (src.size() == 0) throw std::runtime_error("sample_batch: empty transition source");
  if (batch_size == 0) throw std::invalid_argument("sample_batch: batch_size must be positive");

  const Transition& first = src.at(0);
  const Eigen::Index s_dim = first.state.size();
  const Eigen::Index a_dim = first.action.size();

  Batch b;
  b.states.resize(s_dim, batch_size);
  b.actions.resize(a_dim, batch_size);
  b.rewards.resize(batch_size);
  b.next_states.resize(s_dim, batch_size);
  b.not_terminal.resize(batch_size);
  for (std::size_t j = 0; j < batch_size; ++j) {
    const Transition& t = src.at(uniform_index(rng, src.size()));
    b.states.col(j) = t.state;
    b.actions.col(j) = t.action;
    b.rewards[j] = t.reward;
    b.next_states.col(j) = t.next_state;
    b.not_terminal[j] = t.terminal ? 0.0 : 1.0;
  }
  return b;
}

double CriticNet::value(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const {
  Eigen::VectorXd x(state.size() + action.size());
  x << state, action;
  return nn::mlp_forward(net, x)[0];
}

Eigen::VectorXd CriticNet::value_batch(const Eigen::MatrixXd& states,
                                       const Eigen::MatrixXd& actions,
                                       nn::ForwardCache* cache) const {
  Eigen::MatrixXd x(states.rows() + actions.rows(), states.cols());
  x << states, actions;
  return nn::mlp_forward(net, x, cache).transpose();
}

CriticNet make_critic(int state_dim, int action_dim, const std::vector<int>& hidden, Rng& rng,
                      double final_init_scale) {
  std::vector<int> sizes{state_dim + action_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return CriticNet{nn::make_mlp(sizes, nn::Activation::Linear, rng, final_init_scale)};
}

TargetPair make_targets(const policy::DeterministicActor& actor, const CriticNet& critic,
                        double tau) {
  if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("make_targets: tau must be in (0,1]");
  return TargetPair{actor, critic, tau};
}

void soft_update(TargetPair& targets, const policy::DeterministicActor& actor,
                 const CriticNet& critic) {
  nn::soft_blend(targets.target_actor.net, actor.net, targets.tau);
  nn::soft_blend(targets.target_critic.net, critic.net, targets.tau);
}

double critic_update(CriticNet& critic, const TargetPair& targets, const Batch& batch,
                     double gamma, nn::AdamState& adam) {
  if (batch.size() == 0) throw std::invalid_argument("critic_update: empty batch");

  // Targets are a plain forward pass; nothing here backpropagates into them.
  const Eigen::MatrixXd next_actions = targets.target_actor.act_batch(batch.next_states);
  const Eigen::VectorXd next_q = targets.target_critic.value_batch(batch.next_states, next_actions);
  const Eigen::VectorXd y =
      batch.rewards + gamma * batch.not_terminal.cwiseProduct(next_q);

  nn::ForwardCache cache;
  const Eigen::VectorXd q = critic.value_batch(batch.states, batch.actions, &cache);
  const Eigen::VectorXd err = q - y;
  const double loss = err.squaredNorm() / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw std::runtime_error("critic_update: non-finite loss");

  const Eigen::MatrixXd out_grad =
      (2.0 / static_cast<double>(batch.size())) * err.transpose();
  nn::MlpGrads grads = nn::MlpGrads::zeros_like(critic.net);
  nn::mlp_backward(critic.net, cache, out_grad, &grads);
  nn::adam_step(critic.net, grads, adam);
  return loss;
}

nn::MlpGrads actor_objective_gradient(const policy::DeterministicActor& actor,
                                      const CriticNet& critic, const Eigen::MatrixXd& states,
                                      double* objective_out) {
  const Eigen::Index n = states.cols();
  if (n == 0) throw std::invalid_argument("actor_objective_gradient: empty batch");

  nn::ForwardCache actor_cache;
  const Eigen::MatrixXd actions = actor.act_batch(states, &actor_cache);

  nn::ForwardCache critic_cache;
  const Eigen::VectorXd q = critic.value_batch(states, actions, &critic_cache);
  const double objective = q.mean();
  if (objective_out) *objective_out = objective;

  // d(mean Q)/d(critic input), action rows only; critic parameters untouched.
  const Eigen::MatrixXd q_out_grad =
      Eigen::MatrixXd::Constant(1, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd input_grad =
      nn::mlp_backward(critic.net, critic_cache, q_out_grad, nullptr);
  const Eigen::MatrixXd dq_da = input_grad.bottomRows(actions.rows());

  // Chain through the affine rescale onto the raw tanh output.
  const Eigen::MatrixXd raw_grad = dq_da.array().colwise() * actor.half_span().array();
  nn::MlpGrads grads = nn::MlpGrads::zeros_like(actor.net);
  nn::mlp_backward(actor.net, actor_cache, raw_grad, &grads);
  return grads;
}

double actor_update(policy::DeterministicActor& actor, const CriticNet& critic,
                    const Eigen::MatrixXd& states, nn::AdamState& adam) {
  double objective = 0.0;
  const nn::MlpGrads grads = actor_objective_gradient(actor, critic, states, &objective);
  if (!std::isfinite(objective)) throw std::runtime_error("actor_update: non-finite objective");
  nn::adam_step(actor.net, grads, adam, /*maximize=*/true);
  return objective;
}

DdpgLearner make_learner(int state_dim, int action_dim, const Eigen::VectorXd& action_low,
                         const Eigen::VectorXd& action_high, const DdpgConfig& cfg, Rng& rng) {
  DdpgLearner L;
  L.config = cfg;
  L.actor = policy::make_actor(state_dim, action_dim, cfg.actor_hidden, action_low, action_high,
                               rng);
  L.critic = make_critic(state_dim, action_dim, cfg.critic_hidden, rng);
  L.targets = make_targets(L.actor, L.critic, cfg.tau);
  L.actor_adam = nn::AdamState::init(L.actor.net, cfg.actor_lr);
  L.critic_adam = nn::AdamState::init(L.critic.net, cfg.critic_lr);
  return L;
}

double ddpg_update(DdpgLearner& learner, const TransitionSource& src, int n_steps, Rng& rng) {
  if (n_steps <= 0) return 0.0;
  if (learner.config.batch_size <= 0)
    throw std::invalid_argument("ddpg_update: batch_size must be positive");
  double loss_sum = 0.0;
  for (int i = 0; i < n_steps; ++i) {
    const Batch batch =
        sample_batch(src, static_cast<std::size_t>(learner.config.batch_size), rng);
    loss_sum += critic_update(learner.critic, learner.targets, batch, learner.config.gamma,
                              learner.critic_adam);
    actor_update(learner.actor, learner.critic, batch.states, learner.actor_adam);
    soft_update(learner.targets, learner.actor, learner.critic);
  }
  return loss_sum / n_steps;
}

}  // namespace metapg::ddpg
