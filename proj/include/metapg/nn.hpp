#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "metapg/rng.hpp"

// Dense-network machinery shared by every network in the system: multilayer
// perceptrons with layer normalization on the hidden layers, exact analytic
// backpropagation, and Adam. Everything is double precision and operates on
// column-sample matrices, so a batch of N inputs is a (dim x N) matrix and a
// single input is the N == 1 case.

namespace metapg::nn {

enum class Activation { Linear, Tanh };

inline constexpr double kLayerNormEps = 1e-5;

/// MLP parameters. Layer k maps layer_sizes[k] -> layer_sizes[k+1]; every
/// hidden layer applies linear map -> layer norm -> tanh, the final layer
/// applies the linear map followed by output_activation. Layer-norm gain and
/// shift vectors exist for exactly the hidden layers.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;  // weights[k] is layer_sizes[k+1] x layer_sizes[k]
  std::vector<Eigen::VectorXd> biases;
  std::vector<Eigen::VectorXd> ln_gains;
  std::vector<Eigen::VectorXd> ln_shifts;
  Activation output_activation = Activation::Linear;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int n_layers() const { return static_cast<int>(weights.size()); }
  int n_hidden() const { return n_layers() - 1; }

  bool all_finite() const;
  std::size_t parameter_count() const;
};

/// Hidden layers: uniform in +-1/sqrt(fan_in), layer norm at gain 1 shift 0.
/// Final layer: uniform in +-final_init_scale so initial outputs sit near
/// zero (final_init_bias shifts the output bias, used for log-std heads).
MlpParams make_mlp(const std::vector<int>& layer_sizes, Activation output_activation,
                   Rng& rng, double final_init_scale = 3e-3, double final_init_bias = 0.0);

/// Per-parameter gradients (or Adam moments), shape-congruent with MlpParams.
struct MlpGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::vector<Eigen::VectorXd> ln_gains;
  std::vector<Eigen::VectorXd> ln_shifts;

  static MlpGrads zeros_like(const MlpParams& p);
  void set_zero();
  void add_scaled(const MlpGrads& other, double scale);
  void scale(double s);
  double squared_norm() const;
  bool all_finite() const;
};

/// Activations recorded by mlp_forward, sufficient for exact backprop.
struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> post_act;      // output of each layer after activation
  std::vector<Eigen::MatrixXd> ln_xhat;       // per hidden layer: normalized pre-activations
  std::vector<Eigen::RowVectorXd> ln_inv_std; // per hidden layer: 1/sqrt(var + eps) per column
};

Eigen::MatrixXd mlp_forward(const MlpParams& p, const Eigen::MatrixXd& input,
                            ForwardCache* cache = nullptr);
Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& input,
                            ForwardCache* cache = nullptr);

/// Backpropagates output_grad (the gradient of some scalar w.r.t. the network
/// output, one column per sample) through the cached forward pass. Parameter
/// gradients are accumulated into *grads when given; the return value is the
/// gradient w.r.t. the input.
Eigen::MatrixXd mlp_backward(const MlpParams& p, const ForwardCache& cache,
                             const Eigen::MatrixXd& output_grad, MlpGrads* grads);

/// y = gain .* (x - mean(x)) / sqrt(var(x) + kLayerNormEps) + shift.
/// Population variance; inputs of length < 2 are a configuration error.
Eigen::VectorXd layer_norm_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& gain,
                                   const Eigen::VectorXd& shift, Eigen::VectorXd* xhat_out,
                                   double* inv_std_out);

/// Gradient of the layer-norm output w.r.t. x, gain and shift, given the
/// gradient dy w.r.t. y and the cached (xhat, inv_std) from the forward pass.
Eigen::VectorXd layer_norm_backward(const Eigen::VectorXd& dy, const Eigen::VectorXd& gain,
                                    const Eigen::VectorXd& xhat, double inv_std,
                                    Eigen::VectorXd* dgain, Eigen::VectorXd* dshift);

struct AdamState {
  long step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  MlpGrads first_moment;
  MlpGrads second_moment;

  static AdamState init(const MlpParams& p, double learning_rate);
};

/// One bias-corrected Adam update. maximize flips the gradient sign (actor
/// and teacher ascend, critic descends). Non-finite gradients reject the
/// update by throwing; parameters and state are left untouched.
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state, bool maximize = false);

/// Adam over a flat parameter vector (used for the state-independent log-std
/// of the adaptive-variance teacher).
struct AdamVecState {
  long step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;

  static AdamVecState init(Eigen::Index n, double learning_rate);
};

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamVecState& state,
               bool maximize = false);

/// Scales grads down to max_norm when the global L2 norm exceeds it.
/// Returns the pre-clip norm. no-op when max_norm <= 0.
double clip_global_norm(MlpGrads& grads, double max_norm);

/// target <- tau * online + (1 - tau) * target, elementwise over every
/// parameter tensor. Shapes must be congruent.
void soft_blend(MlpParams& target, const MlpParams& online, double tau);

}  // namespace metapg::nn
