#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace metapg::metrics {

/// One per-cycle row of the training log. Fields that do not apply to a
/// given algorithm or cycle (e.g. teacher columns on baseline runs, meta
/// columns on the init record) are NaN and serialize as "nan" / JSON null.
struct Record {
  int cycle = 0;
  std::uint64_t env_steps = 0;
  double r_pi = 0.0;
  double r_pi_prime = 0.0;
  double meta_reward = 0.0;
  double eval_return = 0.0;
  double teacher_grad_norm = 0.0;
  double teacher_mean_log_std = 0.0;
  double critic_loss = 0.0;
  double wall_clock_s = 0.0;
};

extern const char* const kCsvHeader;

std::string to_csv_row(const Record& r);
std::string to_json_line(const Record& r);

/// Appends each record to a CSV file and a JSON-lines mirror, flushing after
/// every row so partial runs leave usable logs.
class Writer {
 public:
  Writer(const std::string& csv_path, const std::string& jsonl_path);
  void append(const Record& r);

 private:
  std::ofstream csv_;
  std::ofstream jsonl_;
};

/// Loads a metrics CSV written by Writer (header required).
std::vector<Record> read_csv(const std::string& path);

/// True when the two logs agree on every field except wall_clock_s (the only
/// nondeterministic column).
bool same_ignoring_wall_clock(const std::vector<Record>& a, const std::vector<Record>& b);

}  // namespace metapg::metrics
