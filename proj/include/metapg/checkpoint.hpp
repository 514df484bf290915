#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "metapg/ddpg.hpp"
#include "metapg/meta.hpp"
#include "metapg/policies.hpp"

namespace metapg::checkpoint {

inline constexpr const char* kFormatTag = "metapg.checkpoint.v1";

/// Everything needed to evaluate or resume a run: the student learner with
/// optimizer state, the teacher (meta algorithms only), and progress
/// counters. The replay buffer is deliberately not persisted.
struct Checkpoint {
  std::string algorithm;
  std::string env_name;
  std::map<std::string, double> env_overrides;

  ddpg::DdpgLearner learner;

  bool has_teacher = false;
  policy::GaussianPolicy teacher;  // teacher.actor is left null on load; see below
  meta::TeacherOptimizer teacher_opt;

  std::uint64_t master_seed = 0;
  std::uint64_t env_steps = 0;
  int cycle = 0;
  double r_pi = 0.0;
  bool has_r_pi = false;
};

// Component-level JSON converters (text format, versioned, row-major arrays).
nlohmann::json to_json(const nn::MlpParams& p);
nn::MlpParams mlp_from_json(const nlohmann::json& j);
nlohmann::json to_json(const nn::AdamState& s);
nn::AdamState adam_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Checkpoint& c);
/// Parses a checkpoint. For an adaptive-variance teacher the mean is the
/// student actor; callers must point result.teacher.actor at
/// result.learner.actor once the result has its final address.
Checkpoint from_json(const nlohmann::json& j);

void save(const std::string& path, const Checkpoint& c);
Checkpoint load(const std::string& path);

}  // namespace metapg::checkpoint
