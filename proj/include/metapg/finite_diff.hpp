#pragma once

#include <functional>

#include <Eigen/Core>

#include "metapg/nn.hpp"

// Central-difference gradient oracles used by the selftest suites and the
// unit tests. Each derivative combines the central stencils at kStep and
// kStep/2 (Richardson extrapolation), cancelling the leading truncation term
// so the oracle stays accurate even where the loss curvature is extreme.
// Step and tolerance assume double precision throughout.

namespace metapg::fd {

inline constexpr double kStep = 1e-5;
inline constexpr double kRelTol = 1e-4;

/// Floor on the relative-error denominator, as a fraction of the comparison
/// scale. Entries tiny relative to the largest gradient entry fall under an
/// absolute bound of kRelTol * kDenomFloor * scale instead of a pure ratio,
/// which keeps central-difference roundoff and truncation noise (both scale
/// with the loss magnitude) from failing entries that are effectively zero.
inline constexpr double kDenomFloor = 1e-4;

/// |a - b| / max(|a|, |b|, kDenomFloor). Scalar form with unit scale.
double rel_error(double a, double b);

using MlpLoss = std::function<double(const nn::MlpParams&)>;

/// Central differences of `loss` w.r.t. every parameter entry of p.
nn::MlpGrads numeric_mlp_grads(const nn::MlpParams& p, const MlpLoss& loss, double h = kStep);

Eigen::VectorXd numeric_vector_grad(const Eigen::VectorXd& x,
                                    const std::function<double(const Eigen::VectorXd&)>& f,
                                    double h = kStep);

/// Worst entrywise error with the denominator floored at
/// kDenomFloor * max(1, largest |entry| across both arguments).
double max_rel_error(const nn::MlpGrads& a, const nn::MlpGrads& b);
double max_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace metapg::fd
