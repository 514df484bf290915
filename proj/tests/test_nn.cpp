#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "metapg/finite_diff.hpp"
#include "metapg/nn.hpp"
#include "metapg/selftest.hpp"
#include "support.hpp"

using namespace metapg;
using nn::Activation;
using nn::MlpParams;

namespace {

MlpParams zeroed_net(const std::vector<int>& sizes, Activation act) {
  Rng rng = seed_stream(1, "nn_unit");
  MlpParams p = nn::make_mlp(sizes, act, rng);
  for (auto& w : p.weights) w.setZero();
  for (auto& b : p.biases) b.setZero();
  return p;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("zero-weight single layer maps everything to the bias") {
  MlpParams p = zeroed_net({3, 2}, Activation::Linear);
  p.biases[0] << 0.5, -1.25;
  const Eigen::VectorXd out = nn::mlp_forward(p, Eigen::VectorXd(Eigen::Vector3d(0.4, -3.0, 7.0)));
  CHECK(out[0] == 0.5);
  CHECK(out[1] == -1.25);

  p.output_activation = Activation::Tanh;
  const Eigen::VectorXd t = nn::mlp_forward(p, Eigen::VectorXd(Eigen::Vector3d(1.0, 1.0, 1.0)));
  CHECK(t[0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
  CHECK(t[1] == doctest::Approx(std::tanh(-1.25)).epsilon(1e-15));
}

TEST_CASE("single linear layer reproduces W x + b") {
  MlpParams p = zeroed_net({2, 2}, Activation::Linear);
  p.weights[0] << 1.0, 2.0, 3.0, 4.0;
  const Eigen::VectorXd out = nn::mlp_forward(p, Eigen::VectorXd(Eigen::Vector2d(1.0, 1.0)));
  CHECK(out[0] == 3.0);
  CHECK(out[1] == 7.0);
}

TEST_CASE("hidden layer applies linear map, layer norm, tanh in that order") {
  // Pre-activations (2, -2): mean 0, variance 4, so the normalized pair is
  // +-2 / sqrt(4 + eps) and the tanh output is odd-symmetric.
  MlpParams p = zeroed_net({2, 2, 1}, Activation::Linear);
  p.weights[0] << 1.0, 0.0, 0.0, -1.0;
  p.weights[1] << 1.0, 1.0;
  const Eigen::VectorXd zero_sum = nn::mlp_forward(p, Eigen::VectorXd(Eigen::Vector2d(2.0, 2.0)));
  CHECK(zero_sum[0] == 0.0);

  p.weights[1] << 1.0, 0.0;
  const double expected = std::tanh(2.0 / std::sqrt(4.0 + nn::kLayerNormEps));
  const Eigen::VectorXd one_unit = nn::mlp_forward(p, Eigen::VectorXd(Eigen::Vector2d(2.0, 2.0)));
  CHECK(one_unit[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("batched forward matches per-column forward") {
  Rng rng = seed_stream(3, "nn_unit");
  MlpParams p = nn::make_mlp({4, 8, 3}, Activation::Tanh, rng);
  Eigen::MatrixXd batch(4, 5);
  for (int c = 0; c < 5; ++c) batch.col(c) = normal_vector(rng, 4);
  const Eigen::MatrixXd out = nn::mlp_forward(p, batch);
  for (int c = 0; c < 5; ++c) {
    const Eigen::VectorXd single = nn::mlp_forward(p, Eigen::VectorXd(batch.col(c)));
    CHECK((out.col(c) - single).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("layer norm forward matches the documented formula") {
  Eigen::VectorXd gain(2), shift(2);
  gain << 2.0, 0.5;
  shift << 0.1, 0.2;
  Eigen::VectorXd xhat;
  double inv_std = 0.0;
  const Eigen::VectorXd y =
      nn::layer_norm_forward(Eigen::Vector2d(1.0, -1.0), gain, shift, &xhat, &inv_std);
  const double expect_xhat = 1.0 / std::sqrt(1.0 + nn::kLayerNormEps);
  CHECK(xhat[0] == doctest::Approx(expect_xhat).epsilon(1e-15));
  CHECK(xhat[1] == doctest::Approx(-expect_xhat).epsilon(1e-15));
  CHECK(y[0] == doctest::Approx(2.0 * expect_xhat + 0.1).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(-0.5 * expect_xhat + 0.2).epsilon(1e-15));
  CHECK(inv_std == doctest::Approx(expect_xhat).epsilon(1e-15));
}

TEST_CASE("layer norm maps constant vectors to the shift") {
  Eigen::VectorXd gain = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd shift(3);
  shift << 0.3, -0.7, 2.0;
  const Eigen::VectorXd y =
      nn::layer_norm_forward(Eigen::Vector3d(5.0, 5.0, 5.0), gain, shift, nullptr, nullptr);
  CHECK(testsupport::vec_equal(y, shift));
}

TEST_CASE("layer norm backward matches finite differences") {
  Rng rng = seed_stream(4, "nn_unit");
  const Eigen::VectorXd x = normal_vector(rng, 5);
  const Eigen::VectorXd gain = normal_vector(rng, 5);
  const Eigen::VectorXd shift = normal_vector(rng, 5);
  const Eigen::VectorXd probe = normal_vector(rng, 5);  // loss = probe . y

  Eigen::VectorXd xhat;
  double inv_std = 0.0;
  nn::layer_norm_forward(x, gain, shift, &xhat, &inv_std);
  Eigen::VectorXd dgain, dshift;
  const Eigen::VectorXd dx = nn::layer_norm_backward(probe, gain, xhat, inv_std, &dgain, &dshift);

  auto loss_of = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& gg,
                     const Eigen::VectorXd& ss) {
    return probe.dot(nn::layer_norm_forward(xx, gg, ss, nullptr, nullptr));
  };
  const Eigen::VectorXd num_dx =
      fd::numeric_vector_grad(x, [&](const Eigen::VectorXd& v) { return loss_of(v, gain, shift); });
  const Eigen::VectorXd num_dg = fd::numeric_vector_grad(
      gain, [&](const Eigen::VectorXd& v) { return loss_of(x, v, shift); });
  const Eigen::VectorXd num_ds = fd::numeric_vector_grad(
      shift, [&](const Eigen::VectorXd& v) { return loss_of(x, gain, v); });

  CHECK(fd::max_rel_error(dx, num_dx) < fd::kRelTol);
  CHECK(fd::max_rel_error(dgain, num_dg) < fd::kRelTol);
  CHECK(fd::max_rel_error(dshift, num_ds) < fd::kRelTol);
}

TEST_CASE("analytic gradients match finite differences across random nets") {
  for (const auto& r : selftest::run_gradient_checks(20240817, 100)) {
    INFO(r.name, ": ", r.detail);
    CHECK(r.pass);
  }
}

TEST_CASE("make_mlp init respects the documented ranges") {
  Rng rng = seed_stream(5, "nn_unit");
  MlpParams p = nn::make_mlp({10, 64, 64, 2}, Activation::Tanh, rng, 3e-3, 0.7);
  REQUIRE(p.n_layers() == 3);
  CHECK(p.weights[0].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(10.0));
  CHECK(p.weights[1].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(64.0));
  CHECK(p.weights[2].cwiseAbs().maxCoeff() <= 3e-3);
  for (const auto& g : p.ln_gains) CHECK(g.isConstant(1.0));
  for (const auto& s : p.ln_shifts) CHECK(s.isZero());
  CHECK((p.biases[2].array() - 0.7).abs().maxCoeff() <= 3e-3);
  CHECK(p.parameter_count() ==
        (10 * 64 + 64) + (64 * 64 + 64) + (64 * 2 + 2) + 2 * (64 + 64));
}

TEST_CASE("adam first step is lr * g / (|g| + eps) elementwise") {
  MlpParams p = zeroed_net({1, 1}, Activation::Linear);
  p.weights[0](0, 0) = 0.5;
  p.biases[0][0] = -0.3;
  nn::MlpGrads g = nn::MlpGrads::zeros_like(p);
  g.weights[0](0, 0) = 0.2;
  g.biases[0][0] = -4.0;
  nn::AdamState adam = nn::AdamState::init(p, 0.01);
  nn::adam_step(p, g, adam);
  CHECK(p.weights[0](0, 0) ==
        doctest::Approx(0.5 - 0.01 * 0.2 / (0.2 + 1e-8)).epsilon(1e-14));
  CHECK(p.biases[0][0] == doctest::Approx(-0.3 + 0.01 * 4.0 / (4.0 + 1e-8)).epsilon(1e-14));
  CHECK(adam.step_count == 1);
}

TEST_CASE("adam two-step trace matches the reference recursion") {
  MlpParams p = zeroed_net({1, 1}, Activation::Linear);
  p.weights[0](0, 0) = 1.0;
  nn::AdamState adam = nn::AdamState::init(p, 0.05);

  const double g1 = 0.7, g2 = -1.3;
  nn::MlpGrads g = nn::MlpGrads::zeros_like(p);
  g.weights[0](0, 0) = g1;
  nn::adam_step(p, g, adam);
  g.weights[0](0, 0) = g2;
  nn::adam_step(p, g, adam);

  // Reference recursion, computed independently in plain scalars.
  double w = 1.0, m = 0.0, v = 0.0;
  for (const double grad : {g1, g2}) {
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
  }
  const double mhat = m / (1.0 - 0.9 * 0.9);
  const double vhat = v / (1.0 - 0.999 * 0.999);
  const double m1 = g1, v1 = g1 * g1;  // bias-corrected first step
  w -= 0.05 * m1 / (std::sqrt(v1) + 1e-8);
  w -= 0.05 * mhat / (std::sqrt(vhat) + 1e-8);
  CHECK(p.weights[0](0, 0) == doctest::Approx(w).epsilon(1e-12));
}

TEST_CASE("adam leaves parameters alone for zero lr or zero gradient") {
  Rng rng = seed_stream(6, "nn_unit");
  MlpParams p = nn::make_mlp({3, 4, 2}, Activation::Linear, rng);
  const MlpParams before = p;

  nn::MlpGrads zero = nn::MlpGrads::zeros_like(p);
  nn::AdamState adam = nn::AdamState::init(p, 0.1);
  nn::adam_step(p, zero, adam);
  CHECK(testsupport::params_equal(p, before));

  nn::MlpGrads g = nn::MlpGrads::zeros_like(p);
  g.weights[0].setConstant(1.0);
  nn::AdamState frozen = nn::AdamState::init(p, 0.0);
  nn::adam_step(p, g, frozen);
  CHECK(testsupport::params_equal(p, before));
}

TEST_CASE("adam maximize flips the step direction") {
  MlpParams up = zeroed_net({1, 1}, Activation::Linear);
  MlpParams down = zeroed_net({1, 1}, Activation::Linear);
  nn::MlpGrads g = nn::MlpGrads::zeros_like(up);
  g.weights[0](0, 0) = 0.5;
  nn::AdamState a1 = nn::AdamState::init(up, 0.01);
  nn::AdamState a2 = nn::AdamState::init(down, 0.01);
  nn::adam_step(up, g, a1, /*maximize=*/true);
  nn::adam_step(down, g, a2, /*maximize=*/false);
  CHECK(up.weights[0](0, 0) > 0.0);
  CHECK(up.weights[0](0, 0) == doctest::Approx(-down.weights[0](0, 0)).epsilon(1e-14));
}

TEST_CASE("adam rejects non-finite gradients without touching state") {
  Rng rng = seed_stream(7, "nn_unit");
  MlpParams p = nn::make_mlp({2, 3, 1}, Activation::Linear, rng);
  const MlpParams before = p;
  nn::MlpGrads g = nn::MlpGrads::zeros_like(p);
  g.biases[1][0] = std::nan("");
  nn::AdamState adam = nn::AdamState::init(p, 0.01);
  CHECK_THROWS_AS(nn::adam_step(p, g, adam), std::runtime_error);
  CHECK(testsupport::params_equal(p, before));
  CHECK(adam.step_count == 0);
}

TEST_CASE("vector adam agrees with the scalar recursion") {
  Eigen::VectorXd x(2);
  x << 1.0, -2.0;
  Eigen::VectorXd g(2);
  g << 0.3, 0.0;
  nn::AdamVecState adam = nn::AdamVecState::init(2, 0.01);
  nn::adam_step(x, g, adam);
  CHECK(x[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-14));
  CHECK(x[1] == -2.0);  // zero-gradient coordinate stays put exactly
}

TEST_CASE("clip_global_norm rescales only above the threshold") {
  MlpParams p = zeroed_net({2, 2}, Activation::Linear);
  nn::MlpGrads g = nn::MlpGrads::zeros_like(p);
  g.weights[0] << 3.0, 0.0, 0.0, 4.0;  // norm 5
  const double pre = nn::clip_global_norm(g, 2.0);
  CHECK(pre == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(std::sqrt(g.squared_norm()) == doctest::Approx(2.0).epsilon(1e-12));

  nn::MlpGrads h = nn::MlpGrads::zeros_like(p);
  h.weights[0] << 3.0, 0.0, 0.0, 4.0;
  nn::clip_global_norm(h, 10.0);
  CHECK(h.weights[0](1, 1) == 4.0);  // below threshold: untouched
  nn::clip_global_norm(h, 0.0);
  CHECK(h.weights[0](1, 1) == 4.0);  // disabled: untouched
}

TEST_CASE("soft_blend interpolates parameters") {
  Rng rng = seed_stream(8, "nn_unit");
  MlpParams online = nn::make_mlp({2, 4, 1}, Activation::Linear, rng);
  MlpParams target = nn::make_mlp({2, 4, 1}, Activation::Linear, rng);
  const MlpParams t0 = target;

  MlpParams frozen = target;
  nn::soft_blend(frozen, online, 0.0);
  CHECK(testsupport::params_equal(frozen, t0));

  MlpParams copied = target;
  nn::soft_blend(copied, online, 1.0);
  CHECK(testsupport::params_equal(copied, online));

  MlpParams mixed = target;
  nn::soft_blend(mixed, online, 0.25);
  const Eigen::MatrixXd expect = 0.25 * online.weights[0] + 0.75 * t0.weights[0];
  CHECK((mixed.weights[0] - expect).cwiseAbs().maxCoeff() < 1e-15);

  MlpParams other = nn::make_mlp({3, 4, 1}, Activation::Linear, rng);
  CHECK_THROWS_AS(nn::soft_blend(other, online, 0.5), std::invalid_argument);
}

}  // TEST_SUITE
