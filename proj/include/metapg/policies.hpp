#pragma once

#include <string>

#include <Eigen/Core>

#include "metapg/nn.hpp"
#include "metapg/rng.hpp"

// Policy objects: the deterministic actor trained by the student learner, the
// stochastic Gaussian teacher in both of its parameterizations, and the
// additive-noise explorers used by the baselines.

namespace metapg::policy {

/// Deterministic policy: tanh-output MLP rescaled affinely into the per
/// dimension action bounds, so emitted actions always lie inside them.
struct DeterministicActor {
  nn::MlpParams net;  // state_dim -> action_dim, tanh output
  Eigen::VectorXd low;
  Eigen::VectorXd high;

  Eigen::VectorXd midpoint() const { return 0.5 * (low + high); }
  Eigen::VectorXd half_span() const { return 0.5 * (high - low); }

  Eigen::VectorXd act(const Eigen::VectorXd& state) const;
  /// Batched action computation; when cache is given it holds the raw network
  /// forward pass (pre rescale) for use in gradient computations.
  Eigen::MatrixXd act_batch(const Eigen::MatrixXd& states, nn::ForwardCache* cache = nullptr) const;
};

DeterministicActor make_actor(int state_dim, int action_dim, const std::vector<int>& hidden,
                              const Eigen::VectorXd& low, const Eigen::VectorXd& high, Rng& rng,
                              double final_init_scale = 3e-3);

/// Discretized Ornstein-Uhlenbeck process:
///   x <- x + theta * (mu - x) * dt + sigma * sqrt(dt) * N(0, I)
struct OuNoise {
  Eigen::VectorXd x;
  Eigen::VectorXd mu;
  double theta = 0.15;
  double sigma = 0.2;
  double dt = 1.0;

  static OuNoise make(int dim, double theta = 0.15, double sigma = 0.2, double dt = 1.0);
  void reset() { x.setZero(); }
  const Eigen::VectorXd& step(Rng& rng);
};

enum class TeacherMode { Independent, AdaptiveVariance };

std::string to_string(TeacherMode m);

/// A sampled action: the raw Gaussian draw kept for likelihood computations,
/// and the bound-clipped action actually executed in the environment.
struct ActionSample {
  Eigen::VectorXd pre_clip;
  Eigen::VectorXd executed;
};

/// Gradients over the teacher's trainable parameters. Which members are
/// active depends on the teacher mode.
struct TeacherGrads {
  nn::MlpGrads mean_net;
  nn::MlpGrads log_std_net;
  Eigen::VectorXd log_std;

  void add_scaled(const TeacherGrads& other, double s);
  void scale(double s);
  double squared_norm() const;
  bool all_finite() const;
};

/// The exploration (teacher) policy pi_e = N(mean(s), diag(sigma(s)^2)).
///
/// Independent mode: mean is its own tanh-output MLP rescaled to the action
/// bounds, and log sigma is a separate state-dependent network whose output
/// is clamped to [log_std_lo, log_std_hi].
///
/// AdaptiveVariance mode: the mean is exactly the student actor's output
/// (never differentiated through here) and log sigma is a state-independent
/// parameter vector, clamped to the same bounds after every update.
class GaussianPolicy {
 public:
  TeacherMode mode = TeacherMode::Independent;
  nn::MlpParams mean_net;
  nn::MlpParams log_std_net;
  Eigen::VectorXd log_std;
  const DeterministicActor* actor = nullptr;
  Eigen::VectorXd low;
  Eigen::VectorXd high;
  double log_std_lo = -5.0;
  double log_std_hi = 2.0;

  int action_dim() const { return static_cast<int>(low.size()); }

  Eigen::VectorXd mean(const Eigen::VectorXd& state) const;
  Eigen::VectorXd sigma(const Eigen::VectorXd& state) const;

  /// Draws a ~ N(mean(s), diag(sigma(s)^2)); executed action is the draw
  /// clipped to the action bounds, the pre-clip draw is kept for log-probs.
  ActionSample sample(const Eigen::VectorXd& state, Rng& rng) const;

  /// Sum over dimensions of the Gaussian log density at the unclipped draw:
  ///   -0.5 ((a - mu)/sigma)^2 - log sigma - 0.5 log(2 pi)
  double log_prob(const Eigen::VectorXd& state, const Eigen::VectorXd& action_pre_clip) const;

  /// Exact gradient of log_prob w.r.t. the teacher's trainable parameters.
  /// In AdaptiveVariance mode only the log-std vector receives gradient.
  TeacherGrads log_prob_grad(const Eigen::VectorXd& state,
                             const Eigen::VectorXd& action_pre_clip) const;

  TeacherGrads zero_grads() const;
  void clamp_log_std();
};

struct GaussianPolicyConfig {
  std::vector<int> hidden{64, 64};
  double log_std_lo = -5.0;
  double log_std_hi = 2.0;
  double init_log_std_scale = 0.2;  // sigma_0 = scale * half action range
  double final_init_scale = 3e-3;
};

GaussianPolicy make_independent_teacher(int state_dim, int action_dim, const Eigen::VectorXd& low,
                                        const Eigen::VectorXd& high,
                                        const GaussianPolicyConfig& cfg, Rng& rng);

GaussianPolicy make_adaptive_variance_teacher(const DeterministicActor& actor,
                                              const GaussianPolicyConfig& cfg);

}  // namespace metapg::policy
