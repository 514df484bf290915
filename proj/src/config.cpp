#include "metapg/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace metapg::config {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer value for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad boolean value for " + key + ": '" + v + "'");
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& v, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("config: empty list element in " + key);
    out.push_back(static_cast<T>(parse(key, item)));
  }
  if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  const bool known_algo = algorithm == "meta_independent" ||
                          algorithm == "meta_adaptive_variance" ||
                          algorithm == "ddpg_gaussian" || algorithm == "ddpg_ou";
  if (!known_algo) throw std::invalid_argument("config: unknown algorithm '" + algorithm + "'");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
  if (epoch_cycles < 0) throw std::invalid_argument("config: epoch_cycles must be >= 0");
  auto positive = [](long long v, const char* name) {
    if (v <= 0) throw std::invalid_argument(std::string("config: ") + name + " must be positive");
  };
  positive(rollout_steps, "rollout_steps");
  positive(train_steps, "train_steps");
  positive(exploration_rollout_steps, "exploration_rollout_steps");
  positive(evaluation_steps, "evaluation_steps");
  positive(exploration_train_steps, "exploration_train_steps");
  positive(lookahead_train_steps, "lookahead_train_steps");
  positive(batch_size, "batch_size");
  positive(static_cast<long long>(buffer_capacity), "buffer_capacity");
  if (actor_lr <= 0 || critic_lr <= 0 || meta_lr <= 0)
    throw std::invalid_argument("config: learning rates must be positive");
  if (gamma <= 0 || gamma > 1) throw std::invalid_argument("config: gamma must be in (0,1]");
  if (tau <= 0 || tau > 1) throw std::invalid_argument("config: tau must be in (0,1]");
  if (subsample_rate <= 0 || subsample_rate > 1)
    throw std::invalid_argument("config: subsample_rate must be in (0,1]");
  if (eval_gamma <= 0 || eval_gamma > 1)
    throw std::invalid_argument("config: eval_gamma must be in (0,1]");
  if (log_std_lo >= log_std_hi)
    throw std::invalid_argument("config: log_std_lo must be below log_std_hi");
  if (init_log_std_scale <= 0)
    throw std::invalid_argument("config: init_log_std_scale must be positive");
  if (hidden.empty()) throw std::invalid_argument("config: hidden must be non-empty");
  for (int h : hidden)
    if (h < 2) throw std::invalid_argument("config: hidden sizes must be >= 2 (layer norm)");
  if (noise_sigma < 0 || ou_sigma < 0 || ou_theta < 0 || meta_grad_clip < 0)
    throw std::invalid_argument("config: noise and clip parameters must be >= 0");
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "env") cfg.env = v;
  else if (key == "algorithm") cfg.algorithm = v;
  else if (key == "seeds")
    cfg.seeds = parse_list<std::uint64_t>(key, v, parse_int);
  else if (key == "epoch_cycles") cfg.epoch_cycles = static_cast<int>(parse_int(key, v));
  else if (key == "total_steps") cfg.total_steps = static_cast<std::uint64_t>(parse_int(key, v));
  else if (key == "rollout_steps") cfg.rollout_steps = static_cast<int>(parse_int(key, v));
  else if (key == "train_steps") cfg.train_steps = static_cast<int>(parse_int(key, v));
  else if (key == "exploration_rollout_steps")
    cfg.exploration_rollout_steps = static_cast<int>(parse_int(key, v));
  else if (key == "evaluation_steps") cfg.evaluation_steps = static_cast<int>(parse_int(key, v));
  else if (key == "exploration_train_steps")
    cfg.exploration_train_steps = static_cast<int>(parse_int(key, v));
  else if (key == "lookahead_train_steps")
    cfg.lookahead_train_steps = static_cast<int>(parse_int(key, v));
  else if (key == "actor_lr") cfg.actor_lr = parse_double(key, v);
  else if (key == "critic_lr") cfg.critic_lr = parse_double(key, v);
  else if (key == "meta_lr") cfg.meta_lr = parse_double(key, v);
  else if (key == "gamma") cfg.gamma = parse_double(key, v);
  else if (key == "tau") cfg.tau = parse_double(key, v);
  else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(key, v));
  else if (key == "buffer_capacity")
    cfg.buffer_capacity = static_cast<std::uint64_t>(parse_int(key, v));
  else if (key == "hidden")
    cfg.hidden = parse_list<int>(key, v, parse_int);
  else if (key == "eval_gamma") cfg.eval_gamma = parse_double(key, v);
  else if (key == "fresh_eval_after_buffer_update")
    cfg.fresh_eval_after_buffer_update = parse_bool(key, v);
  else if (key == "meta_reward_baseline") cfg.meta_reward_baseline = parse_bool(key, v);
  else if (key == "meta_reward_normalize") cfg.meta_reward_normalize = parse_bool(key, v);
  else if (key == "subsample_rate") cfg.subsample_rate = parse_double(key, v);
  else if (key == "meta_grad_clip") cfg.meta_grad_clip = parse_double(key, v);
  else if (key == "noise_sigma") cfg.noise_sigma = parse_double(key, v);
  else if (key == "ou_theta") cfg.ou_theta = parse_double(key, v);
  else if (key == "ou_sigma") cfg.ou_sigma = parse_double(key, v);
  else if (key == "log_std_lo") cfg.log_std_lo = parse_double(key, v);
  else if (key == "log_std_hi") cfg.log_std_hi = parse_double(key, v);
  else if (key == "init_log_std_scale") cfg.init_log_std_scale = parse_double(key, v);
  else if (key == "log_visitation") cfg.log_visitation = parse_bool(key, v);
  else if (key == "preset") apply_preset(cfg, v);
  else if (key.rfind("env.", 0) == 0) {
    const std::string name = key.substr(4);
    if (name.empty()) throw std::invalid_argument("config: empty env override key");
    cfg.env_overrides[name] = parse_double(key, v);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
  if (name == "long_horizon") {
    cfg.exploration_rollout_steps = 1000;
    cfg.evaluation_steps = 2000;
    cfg.train_steps = 500;
    cfg.exploration_train_steps = 100;
    return;
  }
  throw std::invalid_argument("config: unknown preset '" + name + "'");
}

ExperimentConfig parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: " + path + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config: empty key at line " +
                                                 std::to_string(line_no));
    apply_override(cfg, key, value);
  }
  return cfg;
}

std::string to_file_string(const ExperimentConfig& cfg) {
  std::string s;
  auto kv = [&s](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  kv("env", cfg.env);
  kv("algorithm", cfg.algorithm);
  kv("seeds", join(cfg.seeds));
  kv("epoch_cycles", std::to_string(cfg.epoch_cycles));
  kv("total_steps", std::to_string(cfg.total_steps));
  kv("rollout_steps", std::to_string(cfg.rollout_steps));
  kv("train_steps", std::to_string(cfg.train_steps));
  kv("exploration_rollout_steps", std::to_string(cfg.exploration_rollout_steps));
  kv("evaluation_steps", std::to_string(cfg.evaluation_steps));
  kv("exploration_train_steps", std::to_string(cfg.exploration_train_steps));
  kv("lookahead_train_steps", std::to_string(cfg.lookahead_train_steps));
  kv("actor_lr", fmt(cfg.actor_lr));
  kv("critic_lr", fmt(cfg.critic_lr));
  kv("meta_lr", fmt(cfg.meta_lr));
  kv("gamma", fmt(cfg.gamma));
  kv("tau", fmt(cfg.tau));
  kv("batch_size", std::to_string(cfg.batch_size));
  kv("buffer_capacity", std::to_string(cfg.buffer_capacity));
  kv("hidden", join(cfg.hidden));
  kv("eval_gamma", fmt(cfg.eval_gamma));
  kv("fresh_eval_after_buffer_update", cfg.fresh_eval_after_buffer_update ? "true" : "false");
  kv("meta_reward_baseline", cfg.meta_reward_baseline ? "true" : "false");
  kv("meta_reward_normalize", cfg.meta_reward_normalize ? "true" : "false");
  kv("subsample_rate", fmt(cfg.subsample_rate));
  kv("meta_grad_clip", fmt(cfg.meta_grad_clip));
  kv("noise_sigma", fmt(cfg.noise_sigma));
  kv("ou_theta", fmt(cfg.ou_theta));
  kv("ou_sigma", fmt(cfg.ou_sigma));
  kv("log_std_lo", fmt(cfg.log_std_lo));
  kv("log_std_hi", fmt(cfg.log_std_hi));
  kv("init_log_std_scale", fmt(cfg.init_log_std_scale));
  kv("log_visitation", cfg.log_visitation ? "true" : "false");
  for (const auto& [k, v] : cfg.env_overrides) kv("env." + k, fmt(v));
  return s;
}

bool is_meta_algorithm(const std::string& algorithm) {
  return algorithm == "meta_independent" || algorithm == "meta_adaptive_variance";
}

}  // namespace metapg::config
