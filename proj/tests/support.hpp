#pragma once

// Helpers shared across the unit suites: exact parameter comparison and
// scratch directories under the system temp root.

#include <filesystem>
#include <string>

#include "metapg/nn.hpp"

namespace testsupport {

// Bitwise equality (shape and every coefficient).
inline bool mat_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

inline bool vec_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

// Bitwise equality over every tensor of two parameter sets.
inline bool params_equal(const metapg::nn::MlpParams& a, const metapg::nn::MlpParams& b) {
  if (a.layer_sizes != b.layer_sizes) return false;
  if (a.weights.size() != b.weights.size() || a.ln_gains.size() != b.ln_gains.size())
    return false;
  for (std::size_t i = 0; i < a.weights.size(); ++i)
    if (!mat_equal(a.weights[i], b.weights[i]) || !vec_equal(a.biases[i], b.biases[i]))
      return false;
  for (std::size_t i = 0; i < a.ln_gains.size(); ++i)
    if (!vec_equal(a.ln_gains[i], b.ln_gains[i]) || !vec_equal(a.ln_shifts[i], b.ln_shifts[i]))
      return false;
  return a.output_activation == b.output_activation;
}

inline bool grads_equal(const metapg::nn::MlpGrads& a, const metapg::nn::MlpGrads& b) {
  if (a.weights.size() != b.weights.size() || a.ln_gains.size() != b.ln_gains.size())
    return false;
  for (std::size_t i = 0; i < a.weights.size(); ++i)
    if (!mat_equal(a.weights[i], b.weights[i]) || !vec_equal(a.biases[i], b.biases[i]))
      return false;
  for (std::size_t i = 0; i < a.ln_gains.size(); ++i)
    if (!vec_equal(a.ln_gains[i], b.ln_gains[i]) || !vec_equal(a.ln_shifts[i], b.ln_shifts[i]))
      return false;
  return true;
}

// Fresh empty directory <tmp>/metapg_unit/<name>; wiped on every call so
// reruns never see stale artifacts.
inline std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "metapg_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace testsupport
