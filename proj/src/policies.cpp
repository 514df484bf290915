#include "metapg/policies.hpp"

#include <cmath>
#include <stdexcept>

namespace metapg::policy {

namespace {

Eigen::VectorXd clip(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                     const Eigen::VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)

}  // namespace

Eigen::VectorXd DeterministicActor::act(const Eigen::VectorXd& state) const {
  const Eigen::VectorXd raw = nn::mlp_forward(net, state);
  return midpoint() + half_span().cwiseProduct(raw);
}

Eigen::MatrixXd DeterministicActor::act_batch(const Eigen::MatrixXd& states,
                                              nn::ForwardCache* cache) const {
  const Eigen::MatrixXd raw = nn::mlp_forward(net, states, cache);
  return (raw.array().colwise() * half_span().array()).colwise() + midpoint().array();
}

DeterministicActor make_actor(int state_dim, int action_dim, const std::vector<int>& hidden,
                              const Eigen::VectorXd& low, const Eigen::VectorXd& high, Rng& rng,
                              double final_init_scale) {
  if (low.size() != action_dim || high.size() != action_dim || (high - low).minCoeff() <= 0)
    throw std::invalid_argument("make_actor: invalid action bounds");
  std::vector<int> sizes{state_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(action_dim);
  DeterministicActor a;
  a.net = nn::make_mlp(sizes, nn::Activation::Tanh, rng, final_init_scale);
  a.low = low;
  a.high = high;
  return a;
}

OuNoise OuNoise::make(int dim, double theta, double sigma, double dt) {
  OuNoise n;
  n.x = Eigen::VectorXd::Zero(dim);
  n.mu = Eigen::VectorXd::Zero(dim);
  n.theta = theta;
  n.sigma = sigma;
  n.dt = dt;
  return n;
}

const Eigen::VectorXd& OuNoise::step(Rng& rng) {
  x += theta * (mu - x) * dt + sigma * std::sqrt(dt) * normal_vector(rng, x.size());
  return x;
}

std::string to_string(TeacherMode m) {
  return m == TeacherMode::Independent ? "independent" : "adaptive_variance";
}

void TeacherGrads::add_scaled(const TeacherGrads& other, double s) {
  mean_net.add_scaled(other.mean_net, s);
  log_std_net.add_scaled(other.log_std_net, s);
  if (log_std.size() > 0) log_std += s * other.log_std;
}

void TeacherGrads::scale(double s) {
  mean_net.scale(s);
  log_std_net.scale(s);
  log_std *= s;
}

double TeacherGrads::squared_norm() const {
  return mean_net.squared_norm() + log_std_net.squared_norm() + log_std.squaredNorm();
}

bool TeacherGrads::all_finite() const {
  return mean_net.all_finite() && log_std_net.all_finite() && log_std.allFinite();
}

Eigen::VectorXd GaussianPolicy::mean(const Eigen::VectorXd& state) const {
  if (mode == TeacherMode::AdaptiveVariance) return actor->act(state);
  const Eigen::VectorXd raw = nn::mlp_forward(mean_net, state);
  return 0.5 * (low + high) + (0.5 * (high - low)).cwiseProduct(raw);
}

Eigen::VectorXd GaussianPolicy::sigma(const Eigen::VectorXd& state) const {
  Eigen::VectorXd ls = (mode == TeacherMode::AdaptiveVariance)
                           ? log_std
                           : nn::mlp_forward(log_std_net, state);
  ls = ls.cwiseMax(log_std_lo).cwiseMin(log_std_hi);
  return ls.array().exp().matrix();
}

ActionSample GaussianPolicy::sample(const Eigen::VectorXd& state, Rng& rng) const {
  const Eigen::VectorXd mu = mean(state);
  const Eigen::VectorXd sd = sigma(state);
  ActionSample s;
  s.pre_clip = mu + sd.cwiseProduct(normal_vector(rng, mu.size()));
  s.executed = clip(s.pre_clip, low, high);
  return s;
}

double GaussianPolicy::log_prob(const Eigen::VectorXd& state,
                                const Eigen::VectorXd& action_pre_clip) const {
  const Eigen::VectorXd mu = mean(state);
  const Eigen::VectorXd sd = sigma(state);
  if (action_pre_clip.size() != mu.size())
    throw std::invalid_argument("log_prob: action dimension mismatch");
  const Eigen::ArrayXd z = (action_pre_clip - mu).array() / sd.array();
  return (-0.5 * z.square() - sd.array().log() - 0.5 * kLogTwoPi).sum();
}

TeacherGrads GaussianPolicy::zero_grads() const {
  TeacherGrads g;
  if (mode == TeacherMode::Independent) {
    g.mean_net = nn::MlpGrads::zeros_like(mean_net);
    g.log_std_net = nn::MlpGrads::zeros_like(log_std_net);
    g.log_std = Eigen::VectorXd();
  } else {
    g.log_std = Eigen::VectorXd::Zero(log_std.size());
  }
  return g;
}

TeacherGrads GaussianPolicy::log_prob_grad(const Eigen::VectorXd& state,
                                           const Eigen::VectorXd& action_pre_clip) const {
  TeacherGrads g = zero_grads();

  if (mode == TeacherMode::AdaptiveVariance) {
    const Eigen::VectorXd mu = actor->act(state);
    const Eigen::ArrayXd z = (action_pre_clip - mu).array() / log_std.array().exp();
    // d logp / d log sigma = z^2 - 1; the actor mean is not differentiated.
    g.log_std = (z.square() - 1.0).matrix();
    return g;
  }

  nn::ForwardCache mean_cache, ls_cache;
  const Eigen::VectorXd raw_mean = nn::mlp_forward(mean_net, state, &mean_cache);
  const Eigen::VectorXd raw_ls = nn::mlp_forward(log_std_net, state, &ls_cache);
  const Eigen::VectorXd half = 0.5 * (high - low);
  const Eigen::VectorXd mu = 0.5 * (low + high) + half.cwiseProduct(raw_mean);
  const Eigen::ArrayXd ls = raw_ls.array().max(log_std_lo).min(log_std_hi);
  const Eigen::ArrayXd sd = ls.exp();
  const Eigen::ArrayXd z = (action_pre_clip - mu).array() / sd;

  // d logp / d mu = z / sigma, chained through the affine rescale.
  const Eigen::VectorXd mean_out_grad = (z / sd * half.array()).matrix();
  nn::mlp_backward(mean_net, mean_cache, mean_out_grad, &g.mean_net);

  // d logp / d log sigma = z^2 - 1, zero where the output clamp is active.
  const Eigen::ArrayXd inside =
      ((raw_ls.array() > log_std_lo) && (raw_ls.array() < log_std_hi)).cast<double>();
  const Eigen::VectorXd ls_out_grad = ((z.square() - 1.0) * inside).matrix();
  nn::mlp_backward(log_std_net, ls_cache, ls_out_grad, &g.log_std_net);
  return g;
}

void GaussianPolicy::clamp_log_std() {
  if (mode == TeacherMode::AdaptiveVariance)
    log_std = log_std.cwiseMax(log_std_lo).cwiseMin(log_std_hi);
}

GaussianPolicy make_independent_teacher(int state_dim, int action_dim, const Eigen::VectorXd& low,
                                        const Eigen::VectorXd& high,
                                        const GaussianPolicyConfig& cfg, Rng& rng) {
  GaussianPolicy p;
  p.mode = TeacherMode::Independent;
  p.low = low;
  p.high = high;
  p.log_std_lo = cfg.log_std_lo;
  p.log_std_hi = cfg.log_std_hi;

  std::vector<int> sizes{state_dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(action_dim);
  p.mean_net = nn::make_mlp(sizes, nn::Activation::Tanh, rng, cfg.final_init_scale);
  p.log_std_net = nn::make_mlp(sizes, nn::Activation::Linear, rng, cfg.final_init_scale);
  for (int d = 0; d < action_dim; ++d) {
    const double sigma0 = cfg.init_log_std_scale * 0.5 * (high[d] - low[d]);
    p.log_std_net.biases.back()[d] += std::log(sigma0);
  }
  return p;
}

GaussianPolicy make_adaptive_variance_teacher(const DeterministicActor& actor,
                                              const GaussianPolicyConfig& cfg) {
  GaussianPolicy p;
  p.mode = TeacherMode::AdaptiveVariance;
  p.actor = &actor;
  p.low = actor.low;
  p.high = actor.high;
  p.log_std_lo = cfg.log_std_lo;
  p.log_std_hi = cfg.log_std_hi;
  p.log_std = Eigen::VectorXd(actor.low.size());
  for (Eigen::Index d = 0; d < p.log_std.size(); ++d)
    p.log_std[d] = std::log(cfg.init_log_std_scale * 0.5 * (actor.high[d] - actor.low[d]));
  p.clamp_log_std();
  return p;
}

}  // namespace metapg::policy
