#include "metapg/finite_diff.hpp"

#include <algorithm>
#include <cmath>

namespace metapg::fd {

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kDenomFloor});
}

namespace {

// Central difference at h and h/2, Richardson-combined to cancel the leading
// h^2 truncation term. Layer norm over narrow layers can have third
// derivatives of order inv_std^3, where the plain stencil at kStep is only
// accurate to ~1e-4; the combined stencil stays far below kRelTol there.
template <typename F>
double central_diff(double& slot, double saved, F&& eval, double h) {
  auto at = [&](double step) {
    slot = saved + step;
    const double up = eval();
    slot = saved - step;
    const double down = eval();
    return (up - down) / (2.0 * step);
  };
  const double coarse = at(h);
  const double fine = at(h / 2.0);
  slot = saved;
  return (4.0 * fine - coarse) / 3.0;
}

template <typename Tensor>
void diff_tensor(Tensor& param, Tensor& grad, const nn::MlpParams& p, const MlpLoss& loss,
                 double h) {
  for (Eigen::Index i = 0; i < param.size(); ++i) {
    double& slot = param.data()[i];
    grad.data()[i] = central_diff(slot, slot, [&] { return loss(p); }, h);
  }
}

}  // namespace

nn::MlpGrads numeric_mlp_grads(const nn::MlpParams& p, const MlpLoss& loss, double h) {
  nn::MlpParams work = p;
  nn::MlpGrads g = nn::MlpGrads::zeros_like(p);
  for (std::size_t k = 0; k < work.weights.size(); ++k)
    diff_tensor(work.weights[k], g.weights[k], work, loss, h);
  for (std::size_t k = 0; k < work.biases.size(); ++k)
    diff_tensor(work.biases[k], g.biases[k], work, loss, h);
  for (std::size_t k = 0; k < work.ln_gains.size(); ++k)
    diff_tensor(work.ln_gains[k], g.ln_gains[k], work, loss, h);
  for (std::size_t k = 0; k < work.ln_shifts.size(); ++k)
    diff_tensor(work.ln_shifts[k], g.ln_shifts[k], work, loss, h);
  return g;
}

Eigen::VectorXd numeric_vector_grad(const Eigen::VectorXd& x,
                                    const std::function<double(const Eigen::VectorXd&)>& f,
                                    double h) {
  Eigen::VectorXd work = x;
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    g[i] = central_diff(work[i], work[i], [&] { return f(work); }, h);
  return g;
}

namespace {

double scaled_worst(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double scale) {
  const double floor = kDenomFloor * scale;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor}));
  }
  return worst;
}

double abs_max(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace

double max_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return scaled_worst(a, b, std::max({1.0, abs_max(a), abs_max(b)}));
}

double max_rel_error(const nn::MlpGrads& a, const nn::MlpGrads& b) {
  // One scale for the whole gradient: entries tiny relative to the largest
  // entry fall under the absolute floor instead of amplifying difference
  // noise.
  double scale = 1.0;
  auto grow = [&scale](const std::vector<Eigen::MatrixXd>& ms) {
    for (const auto& m : ms) scale = std::max(scale, abs_max(m));
  };
  auto grow_v = [&scale](const std::vector<Eigen::VectorXd>& vs) {
    for (const auto& v : vs) scale = std::max(scale, abs_max(v));
  };
  grow(a.weights);
  grow(b.weights);
  grow_v(a.biases);
  grow_v(b.biases);
  grow_v(a.ln_gains);
  grow_v(b.ln_gains);
  grow_v(a.ln_shifts);
  grow_v(b.ln_shifts);

  double worst = 0.0;
  for (std::size_t k = 0; k < a.weights.size(); ++k)
    worst = std::max(worst, scaled_worst(a.weights[k], b.weights[k], scale));
  for (std::size_t k = 0; k < a.biases.size(); ++k)
    worst = std::max(worst, scaled_worst(a.biases[k], b.biases[k], scale));
  for (std::size_t k = 0; k < a.ln_gains.size(); ++k)
    worst = std::max(worst, scaled_worst(a.ln_gains[k], b.ln_gains[k], scale));
  for (std::size_t k = 0; k < a.ln_shifts.size(); ++k)
    worst = std::max(worst, scaled_worst(a.ln_shifts[k], b.ln_shifts[k], scale));
  return worst;
}

}  // namespace metapg::fd
