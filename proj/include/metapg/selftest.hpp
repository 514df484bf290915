#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace metapg::selftest {

struct Result {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Analytic gradients vs central finite differences (rel tol 1e-4, h=1e-5):
/// random MLPs (parameters and inputs), the 64-64 architectures the system
/// trains, Gaussian log-prob gradients in both teacher modes, and the actor
/// objective gradient. `draws` controls the random-MLP draw count.
std::vector<Result> run_gradient_checks(std::uint64_t seed, int draws = 100);

/// Monte Carlo checks of the meta-gradient estimator: unbiasedness on the
/// 1-D Gaussian bandit with reward -a^2 (closed-form gradient), and
/// unbiasedness of the without-replacement subsampling at rate 0.25, both
/// within 3 standard errors per coordinate.
std::vector<Result> run_estimator_checks(std::uint64_t seed, int bandit_draws = 100000,
                                         int subsample_draws = 10000);

std::vector<Result> run_all(std::uint64_t seed);

/// Prints one line per result; returns true when everything passed.
bool report(const std::vector<Result>& results);

}  // namespace metapg::selftest
