#include "metapg/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace metapg::metrics {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_field(const std::string& s) {
  if (s == "nan") return std::nan("");
  return std::stod(s);
}

bool field_equal(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return a == b;
}

nlohmann::json num_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

const char* const kCsvHeader =
    "cycle,env_steps,r_pi,r_pi_prime,meta_reward,eval_return,teacher_grad_norm,"
    "teacher_mean_log_std,critic_loss,wall_clock_s";

std::string to_csv_row(const Record& r) {
  std::string s = std::to_string(r.cycle) + "," + std::to_string(r.env_steps);
  for (double v : {r.r_pi, r.r_pi_prime, r.meta_reward, r.eval_return, r.teacher_grad_norm,
                   r.teacher_mean_log_std, r.critic_loss, r.wall_clock_s})
    s += "," + fmt(v);
  return s;
}

std::string to_json_line(const Record& r) {
  nlohmann::json j;
  j["cycle"] = r.cycle;
  j["env_steps"] = r.env_steps;
  j["r_pi"] = num_or_null(r.r_pi);
  j["r_pi_prime"] = num_or_null(r.r_pi_prime);
  j["meta_reward"] = num_or_null(r.meta_reward);
  j["eval_return"] = num_or_null(r.eval_return);
  j["teacher_grad_norm"] = num_or_null(r.teacher_grad_norm);
  j["teacher_mean_log_std"] = num_or_null(r.teacher_mean_log_std);
  j["critic_loss"] = num_or_null(r.critic_loss);
  j["wall_clock_s"] = num_or_null(r.wall_clock_s);
  return j.dump();
}

Writer::Writer(const std::string& csv_path, const std::string& jsonl_path)
    : csv_(csv_path), jsonl_(jsonl_path) {
  if (!csv_) throw std::runtime_error("metrics: cannot open " + csv_path);
  if (!jsonl_) throw std::runtime_error("metrics: cannot open " + jsonl_path);
  csv_ << kCsvHeader << "\n";
  csv_.flush();
}

void Writer::append(const Record& r) {
  csv_ << to_csv_row(r) << "\n";
  csv_.flush();
  jsonl_ << to_json_line(r) << "\n";
  jsonl_.flush();
}

std::vector<Record> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("metrics: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("metrics: empty file " + path);
  if (line != kCsvHeader) throw std::runtime_error("metrics: unexpected header in " + path);

  std::vector<Record> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10)
      throw std::runtime_error("metrics: malformed row in " + path + ": " + line);
    Record r;
    r.cycle = std::stoi(fields[0]);
    r.env_steps = std::stoull(fields[1]);
    r.r_pi = parse_field(fields[2]);
    r.r_pi_prime = parse_field(fields[3]);
    r.meta_reward = parse_field(fields[4]);
    r.eval_return = parse_field(fields[5]);
    r.teacher_grad_norm = parse_field(fields[6]);
    r.teacher_mean_log_std = parse_field(fields[7]);
    r.critic_loss = parse_field(fields[8]);
    r.wall_clock_s = parse_field(fields[9]);
    out.push_back(r);
  }
  return out;
}

bool same_ignoring_wall_clock(const std::vector<Record>& a, const std::vector<Record>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Record& x = a[i];
    const Record& y = b[i];
    if (x.cycle != y.cycle || x.env_steps != y.env_steps) return false;
    if (!field_equal(x.r_pi, y.r_pi) || !field_equal(x.r_pi_prime, y.r_pi_prime) ||
        !field_equal(x.meta_reward, y.meta_reward) ||
        !field_equal(x.eval_return, y.eval_return) ||
        !field_equal(x.teacher_grad_norm, y.teacher_grad_norm) ||
        !field_equal(x.teacher_mean_log_std, y.teacher_mean_log_std) ||
        !field_equal(x.critic_loss, y.critic_loss))
      return false;
  }
  return true;
}

}  // namespace metapg::metrics
