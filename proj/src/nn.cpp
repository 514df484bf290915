#include "metapg/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace metapg::nn {

namespace {

bool finite(const Eigen::MatrixXd& m) { return m.allFinite(); }
bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

void check_shapes(const MlpParams& p) {
  const int L = p.n_layers();
  if (L < 1 || p.layer_sizes.size() != static_cast<std::size_t>(L) + 1)
    throw std::invalid_argument("MlpParams: layer_sizes inconsistent with weights");
  for (int k = 0; k < L; ++k) {
    if (p.weights[k].rows() != p.layer_sizes[k + 1] || p.weights[k].cols() != p.layer_sizes[k] ||
        p.biases[k].size() != p.layer_sizes[k + 1])
      throw std::invalid_argument("MlpParams: weight/bias shape mismatch at layer " +
                                  std::to_string(k));
  }
  if (p.ln_gains.size() != static_cast<std::size_t>(p.n_hidden()) ||
      p.ln_shifts.size() != static_cast<std::size_t>(p.n_hidden()))
    throw std::invalid_argument("MlpParams: layer-norm parameters must cover exactly the hidden layers");
}

}  // namespace

bool MlpParams::all_finite() const {
  for (const auto& w : weights)
    if (!finite(w)) return false;
  for (const auto& b : biases)
    if (!finite(b)) return false;
  for (const auto& g : ln_gains)
    if (!finite(g)) return false;
  for (const auto& s : ln_shifts)
    if (!finite(s)) return false;
  return true;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  for (const auto& g : ln_gains) n += static_cast<std::size_t>(g.size());
  for (const auto& s : ln_shifts) n += static_cast<std::size_t>(s.size());
  return n;
}

MlpParams make_mlp(const std::vector<int>& layer_sizes, Activation output_activation, Rng& rng,
                   double final_init_scale, double final_init_bias) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("make_mlp: need at least one layer");
  for (int s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("make_mlp: layer sizes must be positive");

  MlpParams p;
  p.layer_sizes = layer_sizes;
  p.output_activation = output_activation;
  const int L = static_cast<int>(layer_sizes.size()) - 1;
  for (int k = 0; k < L; ++k) {
    const int fan_in = layer_sizes[k];
    const int fan_out = layer_sizes[k + 1];
    const double scale = (k == L - 1) ? final_init_scale : 1.0 / std::sqrt(double(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = uniform_real(rng, -scale, scale);
    Eigen::VectorXd b(fan_out);
    for (int i = 0; i < fan_out; ++i)
      b[i] = (k == L - 1) ? final_init_bias + uniform_real(rng, -scale, scale) : 0.0;
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
    if (k < L - 1) {
      p.ln_gains.push_back(Eigen::VectorXd::Ones(fan_out));
      p.ln_shifts.push_back(Eigen::VectorXd::Zero(fan_out));
    }
  }
  return p;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& p) {
  MlpGrads g;
  for (const auto& w : p.weights) g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : p.biases) g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  for (const auto& v : p.ln_gains) g.ln_gains.push_back(Eigen::VectorXd::Zero(v.size()));
  for (const auto& v : p.ln_shifts) g.ln_shifts.push_back(Eigen::VectorXd::Zero(v.size()));
  return g;
}

void MlpGrads::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
  for (auto& g : ln_gains) g.setZero();
  for (auto& s : ln_shifts) s.setZero();
}

void MlpGrads::add_scaled(const MlpGrads& other, double s) {
  for (std::size_t k = 0; k < weights.size(); ++k) weights[k] += s * other.weights[k];
  for (std::size_t k = 0; k < biases.size(); ++k) biases[k] += s * other.biases[k];
  for (std::size_t k = 0; k < ln_gains.size(); ++k) ln_gains[k] += s * other.ln_gains[k];
  for (std::size_t k = 0; k < ln_shifts.size(); ++k) ln_shifts[k] += s * other.ln_shifts[k];
}

void MlpGrads::scale(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
  for (auto& g : ln_gains) g *= s;
  for (auto& sh : ln_shifts) sh *= s;
}

double MlpGrads::squared_norm() const {
  double n = 0;
  for (const auto& w : weights) n += w.squaredNorm();
  for (const auto& b : biases) n += b.squaredNorm();
  for (const auto& g : ln_gains) n += g.squaredNorm();
  for (const auto& s : ln_shifts) n += s.squaredNorm();
  return n;
}

bool MlpGrads::all_finite() const {
  for (const auto& w : weights)
    if (!finite(w)) return false;
  for (const auto& b : biases)
    if (!finite(b)) return false;
  for (const auto& g : ln_gains)
    if (!finite(g)) return false;
  for (const auto& s : ln_shifts)
    if (!finite(s)) return false;
  return true;
}

Eigen::VectorXd layer_norm_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& gain,
                                   const Eigen::VectorXd& shift, Eigen::VectorXd* xhat_out,
                                   double* inv_std_out) {
  const Eigen::Index n = x.size();
  if (n < 2) throw std::invalid_argument("layer_norm_forward: input length must be >= 2");
  if (gain.size() != n || shift.size() != n)
    throw std::invalid_argument("layer_norm_forward: gain/shift length mismatch");
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
  Eigen::VectorXd xhat = (x.array() - mean).matrix() * inv_std;
  if (xhat_out) *xhat_out = xhat;
  if (inv_std_out) *inv_std_out = inv_std;
  return (gain.array() * xhat.array() + shift.array()).matrix();
}

Eigen::VectorXd layer_norm_backward(const Eigen::VectorXd& dy, const Eigen::VectorXd& gain,
                                    const Eigen::VectorXd& xhat, double inv_std,
                                    Eigen::VectorXd* dgain, Eigen::VectorXd* dshift) {
  if (dgain) *dgain += (dy.array() * xhat.array()).matrix();
  if (dshift) *dshift += dy;
  const Eigen::VectorXd dxhat = (dy.array() * gain.array()).matrix();
  const double m1 = dxhat.mean();
  const double m2 = (dxhat.array() * xhat.array()).mean();
  return inv_std * (dxhat.array() - m1 - xhat.array() * m2).matrix();
}

Eigen::MatrixXd mlp_forward(const MlpParams& p, const Eigen::MatrixXd& input, ForwardCache* cache) {
  check_shapes(p);
  if (input.rows() != p.input_dim())
    throw std::invalid_argument("mlp_forward: input dimension " + std::to_string(input.rows()) +
                                " does not match network input " + std::to_string(p.input_dim()));
  const int L = p.n_layers();
  const Eigen::Index N = input.cols();
  if (cache) {
    cache->input = input;
    cache->post_act.clear();
    cache->ln_xhat.clear();
    cache->ln_inv_std.clear();
  }

  Eigen::MatrixXd h = input;
  for (int k = 0; k < L; ++k) {
    Eigen::MatrixXd z = (p.weights[k] * h).colwise() + p.biases[k];
    if (k < L - 1) {
      // layer norm per column, then tanh
      const Eigen::Index rows = z.rows();
      if (rows < 2) throw std::invalid_argument("mlp_forward: hidden width must be >= 2 for layer norm");
      Eigen::MatrixXd xhat(rows, N);
      Eigen::RowVectorXd inv_std(N);
      for (Eigen::Index c = 0; c < N; ++c) {
        const double mean = z.col(c).mean();
        const double var = (z.col(c).array() - mean).square().mean();
        const double is = 1.0 / std::sqrt(var + kLayerNormEps);
        xhat.col(c) = (z.col(c).array() - mean).matrix() * is;
        inv_std[c] = is;
      }
      h = ((xhat.array().colwise() * p.ln_gains[k].array()).colwise() + p.ln_shifts[k].array())
              .tanh()
              .matrix();
      if (cache) {
        cache->ln_xhat.push_back(std::move(xhat));
        cache->ln_inv_std.push_back(std::move(inv_std));
      }
    } else if (p.output_activation == Activation::Tanh) {
      h = z.array().tanh().matrix();
    } else {
      h = std::move(z);
    }
    if (cache) cache->post_act.push_back(h);
  }
  return h;
}

Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& input, ForwardCache* cache) {
  return mlp_forward(p, Eigen::MatrixXd(input), cache).col(0);
}

Eigen::MatrixXd mlp_backward(const MlpParams& p, const ForwardCache& cache,
                             const Eigen::MatrixXd& output_grad, MlpGrads* grads) {
  const int L = p.n_layers();
  if (cache.post_act.size() != static_cast<std::size_t>(L))
    throw std::invalid_argument("mlp_backward: cache does not match network");
  if (output_grad.rows() != p.output_dim() || output_grad.cols() != cache.input.cols())
    throw std::invalid_argument("mlp_backward: output_grad shape mismatch");
  if (grads && grads->weights.size() != static_cast<std::size_t>(L))
    throw std::invalid_argument("mlp_backward: gradient bundle shape mismatch");

  Eigen::MatrixXd dh = output_grad;
  for (int k = L - 1; k >= 0; --k) {
    const Eigen::MatrixXd& out_k = cache.post_act[k];
    Eigen::MatrixXd dz;
    if (k == L - 1) {
      if (p.output_activation == Activation::Tanh)
        dz = (dh.array() * (1.0 - out_k.array().square())).matrix();
      else
        dz = std::move(dh);
    } else {
      // tanh, then layer norm
      const Eigen::MatrixXd dy = (dh.array() * (1.0 - out_k.array().square())).matrix();
      const Eigen::MatrixXd& xhat = cache.ln_xhat[k];
      const Eigen::RowVectorXd& inv_std = cache.ln_inv_std[k];
      if (grads) {
        grads->ln_gains[k] += (dy.array() * xhat.array()).rowwise().sum().matrix();
        grads->ln_shifts[k] += dy.rowwise().sum();
      }
      const Eigen::MatrixXd dxhat = (dy.array().colwise() * p.ln_gains[k].array()).matrix();
      const Eigen::RowVectorXd m1 = dxhat.colwise().mean();
      const Eigen::RowVectorXd m2 = (dxhat.array() * xhat.array()).colwise().mean();
      dz = (((dxhat.array().rowwise() - m1.array()) - xhat.array().rowwise() * m2.array())
                .rowwise() *
            inv_std.array())
               .matrix();
    }
    const Eigen::MatrixXd& h_in = (k == 0) ? cache.input : cache.post_act[k - 1];
    if (grads) {
      grads->weights[k] += dz * h_in.transpose();
      grads->biases[k] += dz.rowwise().sum();
    }
    dh = p.weights[k].transpose() * dz;
  }
  return dh;
}

AdamState AdamState::init(const MlpParams& p, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment = MlpGrads::zeros_like(p);
  s.second_moment = MlpGrads::zeros_like(p);
  return s;
}

namespace {

template <typename T>
void adam_tensor(T& param, const T& g, T& m, T& v, double lr, double b1, double b2, double eps,
                 double bc1, double bc2, double sign) {
  m = (b1 * m.array() + (1.0 - b1) * sign * g.array()).matrix();
  v = (b2 * v.array() + (1.0 - b2) * g.array().square()).matrix();
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state, bool maximize) {
  if (!grads.all_finite())
    throw std::runtime_error("adam_step: non-finite gradient, update rejected");
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step_count));
  const double sign = maximize ? -1.0 : 1.0;
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  for (std::size_t k = 0; k < params.weights.size(); ++k)
    adam_tensor(params.weights[k], grads.weights[k], m.weights[k], v.weights[k],
                state.learning_rate, state.beta1, state.beta2, state.epsilon, bc1, bc2, sign);
  for (std::size_t k = 0; k < params.biases.size(); ++k)
    adam_tensor(params.biases[k], grads.biases[k], m.biases[k], v.biases[k], state.learning_rate,
                state.beta1, state.beta2, state.epsilon, bc1, bc2, sign);
  for (std::size_t k = 0; k < params.ln_gains.size(); ++k)
    adam_tensor(params.ln_gains[k], grads.ln_gains[k], m.ln_gains[k], v.ln_gains[k],
                state.learning_rate, state.beta1, state.beta2, state.epsilon, bc1, bc2, sign);
  for (std::size_t k = 0; k < params.ln_shifts.size(); ++k)
    adam_tensor(params.ln_shifts[k], grads.ln_shifts[k], m.ln_shifts[k], v.ln_shifts[k],
                state.learning_rate, state.beta1, state.beta2, state.epsilon, bc1, bc2, sign);
}

AdamVecState AdamVecState::init(Eigen::Index n, double learning_rate) {
  AdamVecState s;
  s.learning_rate = learning_rate;
  s.first_moment = Eigen::VectorXd::Zero(n);
  s.second_moment = Eigen::VectorXd::Zero(n);
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamVecState& state,
               bool maximize) {
  if (!grads.allFinite())
    throw std::runtime_error("adam_step: non-finite gradient, update rejected");
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: shape mismatch");
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step_count));
  const double sign = maximize ? -1.0 : 1.0;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * sign * grads;
  state.second_moment =
      state.beta2 * state.second_moment.array().matrix() +
      (1.0 - state.beta2) * grads.array().square().matrix();
  params -= (state.learning_rate * (state.first_moment.array() / bc1) /
             ((state.second_moment.array() / bc2).sqrt() + state.epsilon))
                .matrix();
}

double clip_global_norm(MlpGrads& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

void soft_blend(MlpParams& target, const MlpParams& online, double tau) {
  if (target.layer_sizes != online.layer_sizes)
    throw std::invalid_argument("soft_blend: shape mismatch");
  for (std::size_t k = 0; k < target.weights.size(); ++k)
    target.weights[k] = tau * online.weights[k] + (1.0 - tau) * target.weights[k];
  for (std::size_t k = 0; k < target.biases.size(); ++k)
    target.biases[k] = tau * online.biases[k] + (1.0 - tau) * target.biases[k];
  for (std::size_t k = 0; k < target.ln_gains.size(); ++k)
    target.ln_gains[k] = tau * online.ln_gains[k] + (1.0 - tau) * target.ln_gains[k];
  for (std::size_t k = 0; k < target.ln_shifts.size(); ++k)
    target.ln_shifts[k] = tau * online.ln_shifts[k] + (1.0 - tau) * target.ln_shifts[k];
}

}  // namespace metapg::nn
