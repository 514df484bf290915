#include "metapg/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace metapg::checkpoint {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::runtime_error("checkpoint: matrix size mismatch");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json grads_to_json(const nn::MlpGrads& g) {
  json j;
  j["weights"] = json::array();
  for (const auto& w : g.weights) j["weights"].push_back(matrix_to_json(w));
  j["biases"] = json::array();
  for (const auto& b : g.biases) j["biases"].push_back(vector_to_json(b));
  j["ln_gains"] = json::array();
  for (const auto& v : g.ln_gains) j["ln_gains"].push_back(vector_to_json(v));
  j["ln_shifts"] = json::array();
  for (const auto& v : g.ln_shifts) j["ln_shifts"].push_back(vector_to_json(v));
  return j;
}

nn::MlpGrads grads_from_json(const json& j) {
  nn::MlpGrads g;
  for (const auto& w : j.at("weights")) g.weights.push_back(matrix_from_json(w));
  for (const auto& b : j.at("biases")) g.biases.push_back(vector_from_json(b));
  for (const auto& v : j.at("ln_gains")) g.ln_gains.push_back(vector_from_json(v));
  for (const auto& v : j.at("ln_shifts")) g.ln_shifts.push_back(vector_from_json(v));
  return g;
}

json actor_to_json(const policy::DeterministicActor& a) {
  json j;
  j["net"] = to_json(a.net);
  j["low"] = vector_to_json(a.low);
  j["high"] = vector_to_json(a.high);
  return j;
}

policy::DeterministicActor actor_from_json(const json& j) {
  policy::DeterministicActor a;
  a.net = mlp_from_json(j.at("net"));
  a.low = vector_from_json(j.at("low"));
  a.high = vector_from_json(j.at("high"));
  return a;
}

json vec_adam_to_json(const nn::AdamVecState& s) {
  json j;
  j["step_count"] = s.step_count;
  j["learning_rate"] = s.learning_rate;
  j["beta1"] = s.beta1;
  j["beta2"] = s.beta2;
  j["epsilon"] = s.epsilon;
  j["first_moment"] = vector_to_json(s.first_moment);
  j["second_moment"] = vector_to_json(s.second_moment);
  return j;
}

nn::AdamVecState vec_adam_from_json(const json& j) {
  nn::AdamVecState s;
  s.step_count = j.at("step_count").get<long>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  s.first_moment = vector_from_json(j.at("first_moment"));
  s.second_moment = vector_from_json(j.at("second_moment"));
  return s;
}

json learner_to_json(const ddpg::DdpgLearner& L) {
  json j;
  j["actor"] = actor_to_json(L.actor);
  j["critic"] = to_json(L.critic.net);
  j["target_actor"] = actor_to_json(L.targets.target_actor);
  j["target_critic"] = to_json(L.targets.target_critic.net);
  j["tau"] = L.targets.tau;
  j["actor_adam"] = to_json(L.actor_adam);
  j["critic_adam"] = to_json(L.critic_adam);
  json cfg;
  cfg["actor_hidden"] = L.config.actor_hidden;
  cfg["critic_hidden"] = L.config.critic_hidden;
  cfg["actor_lr"] = L.config.actor_lr;
  cfg["critic_lr"] = L.config.critic_lr;
  cfg["gamma"] = L.config.gamma;
  cfg["tau"] = L.config.tau;
  cfg["batch_size"] = L.config.batch_size;
  cfg["buffer_capacity"] = L.config.buffer_capacity;
  j["config"] = std::move(cfg);
  return j;
}

ddpg::DdpgLearner learner_from_json(const json& j) {
  ddpg::DdpgLearner L;
  L.actor = actor_from_json(j.at("actor"));
  L.critic.net = mlp_from_json(j.at("critic"));
  L.targets.target_actor = actor_from_json(j.at("target_actor"));
  L.targets.target_critic.net = mlp_from_json(j.at("target_critic"));
  L.targets.tau = j.at("tau").get<double>();
  L.actor_adam = adam_from_json(j.at("actor_adam"));
  L.critic_adam = adam_from_json(j.at("critic_adam"));
  const json& cfg = j.at("config");
  L.config.actor_hidden = cfg.at("actor_hidden").get<std::vector<int>>();
  L.config.critic_hidden = cfg.at("critic_hidden").get<std::vector<int>>();
  L.config.actor_lr = cfg.at("actor_lr").get<double>();
  L.config.critic_lr = cfg.at("critic_lr").get<double>();
  L.config.gamma = cfg.at("gamma").get<double>();
  L.config.tau = cfg.at("tau").get<double>();
  L.config.batch_size = cfg.at("batch_size").get<int>();
  L.config.buffer_capacity = cfg.at("buffer_capacity").get<std::size_t>();
  return L;
}

json teacher_to_json(const policy::GaussianPolicy& t) {
  json j;
  j["mode"] = policy::to_string(t.mode);
  j["low"] = vector_to_json(t.low);
  j["high"] = vector_to_json(t.high);
  j["log_std_lo"] = t.log_std_lo;
  j["log_std_hi"] = t.log_std_hi;
  if (t.mode == policy::TeacherMode::Independent) {
    j["mean_net"] = to_json(t.mean_net);
    j["log_std_net"] = to_json(t.log_std_net);
  } else {
    j["log_std"] = vector_to_json(t.log_std);
  }
  return j;
}

policy::GaussianPolicy teacher_from_json(const json& j) {
  policy::GaussianPolicy t;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "independent") t.mode = policy::TeacherMode::Independent;
  else if (mode == "adaptive_variance") t.mode = policy::TeacherMode::AdaptiveVariance;
  else throw std::runtime_error("checkpoint: unknown teacher mode " + mode);
  t.low = vector_from_json(j.at("low"));
  t.high = vector_from_json(j.at("high"));
  t.log_std_lo = j.at("log_std_lo").get<double>();
  t.log_std_hi = j.at("log_std_hi").get<double>();
  if (t.mode == policy::TeacherMode::Independent) {
    t.mean_net = mlp_from_json(j.at("mean_net"));
    t.log_std_net = mlp_from_json(j.at("log_std_net"));
  } else {
    t.log_std = vector_from_json(j.at("log_std"));
  }
  return t;
}

json teacher_opt_to_json(const meta::TeacherOptimizer& o, policy::TeacherMode mode) {
  json j;
  if (mode == policy::TeacherMode::Independent) {
    j["mean_adam"] = to_json(o.mean_adam);
    j["log_std_adam"] = to_json(o.log_std_adam);
  } else {
    j["log_std_vec_adam"] = vec_adam_to_json(o.log_std_vec_adam);
  }
  return j;
}

meta::TeacherOptimizer teacher_opt_from_json(const json& j, policy::TeacherMode mode) {
  meta::TeacherOptimizer o;
  if (mode == policy::TeacherMode::Independent) {
    o.mean_adam = adam_from_json(j.at("mean_adam"));
    o.log_std_adam = adam_from_json(j.at("log_std_adam"));
  } else {
    o.log_std_vec_adam = vec_adam_from_json(j.at("log_std_vec_adam"));
  }
  return o;
}

}  // namespace

json to_json(const nn::MlpParams& p) {
  json j;
  j["layer_sizes"] = p.layer_sizes;
  j["output_activation"] = p.output_activation == nn::Activation::Tanh ? "tanh" : "linear";
  j["weights"] = json::array();
  for (const auto& w : p.weights) j["weights"].push_back(matrix_to_json(w));
  j["biases"] = json::array();
  for (const auto& b : p.biases) j["biases"].push_back(vector_to_json(b));
  j["ln_gains"] = json::array();
  for (const auto& v : p.ln_gains) j["ln_gains"].push_back(vector_to_json(v));
  j["ln_shifts"] = json::array();
  for (const auto& v : p.ln_shifts) j["ln_shifts"].push_back(vector_to_json(v));
  return j;
}

nn::MlpParams mlp_from_json(const json& j) {
  nn::MlpParams p;
  p.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  const std::string act = j.at("output_activation").get<std::string>();
  if (act == "tanh") p.output_activation = nn::Activation::Tanh;
  else if (act == "linear") p.output_activation = nn::Activation::Linear;
  else throw std::runtime_error("checkpoint: unknown activation " + act);
  for (const auto& w : j.at("weights")) p.weights.push_back(matrix_from_json(w));
  for (const auto& b : j.at("biases")) p.biases.push_back(vector_from_json(b));
  for (const auto& v : j.at("ln_gains")) p.ln_gains.push_back(vector_from_json(v));
  for (const auto& v : j.at("ln_shifts")) p.ln_shifts.push_back(vector_from_json(v));
  if (!p.all_finite()) throw std::runtime_error("checkpoint: non-finite parameters");
  return p;
}

json to_json(const nn::AdamState& s) {
  json j;
  j["step_count"] = s.step_count;
  j["learning_rate"] = s.learning_rate;
  j["beta1"] = s.beta1;
  j["beta2"] = s.beta2;
  j["epsilon"] = s.epsilon;
  j["first_moment"] = grads_to_json(s.first_moment);
  j["second_moment"] = grads_to_json(s.second_moment);
  return j;
}

nn::AdamState adam_from_json(const json& j) {
  nn::AdamState s;
  s.step_count = j.at("step_count").get<long>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  s.first_moment = grads_from_json(j.at("first_moment"));
  s.second_moment = grads_from_json(j.at("second_moment"));
  return s;
}

json to_json(const Checkpoint& c) {
  json j;
  j["format"] = kFormatTag;
  j["algorithm"] = c.algorithm;
  j["env"] = c.env_name;
  j["env_overrides"] = c.env_overrides;
  j["learner"] = learner_to_json(c.learner);
  if (c.has_teacher) {
    j["teacher"] = teacher_to_json(c.teacher);
    j["teacher_opt"] = teacher_opt_to_json(c.teacher_opt, c.teacher.mode);
  }
  j["master_seed"] = c.master_seed;
  j["env_steps"] = c.env_steps;
  j["cycle"] = c.cycle;
  if (c.has_r_pi) j["r_pi"] = c.r_pi;
  return j;
}

Checkpoint from_json(const json& j) {
  if (j.at("format").get<std::string>() != kFormatTag)
    throw std::runtime_error("checkpoint: unsupported format tag");
  Checkpoint c;
  c.algorithm = j.at("algorithm").get<std::string>();
  c.env_name = j.at("env").get<std::string>();
  if (j.contains("env_overrides"))
    c.env_overrides = j.at("env_overrides").get<std::map<std::string, double>>();
  c.learner = learner_from_json(j.at("learner"));
  if (j.contains("teacher")) {
    c.has_teacher = true;
    c.teacher = teacher_from_json(j.at("teacher"));
    c.teacher_opt = teacher_opt_from_json(j.at("teacher_opt"), c.teacher.mode);
  }
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.env_steps = j.at("env_steps").get<std::uint64_t>();
  c.cycle = j.at("cycle").get<int>();
  if (j.contains("r_pi")) {
    c.r_pi = j.at("r_pi").get<double>();
    c.has_r_pi = true;
  }
  return c;
}

void save(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out << to_json(c).dump(1) << "\n";
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  json j;
  in >> j;
  return from_json(j);
}

}  // namespace metapg::checkpoint
