#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>

#include "metapg/checkpoint.hpp"
#include "metapg/config.hpp"
#include "metapg/envs.hpp"
#include "metapg/harness.hpp"
#include "metapg/selftest.hpp"

namespace py = pybind11;

namespace {

// Environment handle owning its RNG stream so Python callers only deal with
// integer seeds.
class PyEnv {
 public:
  PyEnv(const std::string& name, const std::map<std::string, double>& overrides,
        std::uint64_t seed)
      : env_(metapg::env::make_env(name, overrides)),
        rng_(metapg::seed_stream(seed, "rollout")) {}

  void seed(std::uint64_t s) { rng_ = metapg::seed_stream(s, "rollout"); }
  Eigen::VectorXd reset() { return env_->reset(rng_); }

  py::tuple step(const Eigen::VectorXd& action) {
    const auto r = env_->step(action);
    return py::make_tuple(r.obs, r.reward, r.done, r.terminal);
  }

  std::string name() const { return env_->spec().name; }
  int obs_dim() const { return env_->spec().obs_dim; }
  int action_dim() const { return env_->spec().action_dim; }
  Eigen::VectorXd action_low() const { return env_->spec().action_low; }
  Eigen::VectorXd action_high() const { return env_->spec().action_high; }
  int max_episode_steps() const { return env_->spec().max_episode_steps; }

 private:
  std::unique_ptr<metapg::env::Env> env_;
  metapg::Rng rng_;
};

metapg::config::ExperimentConfig build_config(const std::map<std::string, std::string>& overrides) {
  metapg::config::ExperimentConfig cfg;
  for (const auto& [k, v] : overrides) metapg::config::apply_override(cfg, k, v);
  cfg.validate();
  return cfg;
}

py::dict record_to_dict(const metapg::metrics::Record& r) {
  py::dict d;
  d["cycle"] = r.cycle;
  d["env_steps"] = r.env_steps;
  d["r_pi"] = r.r_pi;
  d["r_pi_prime"] = r.r_pi_prime;
  d["meta_reward"] = r.meta_reward;
  d["eval_return"] = r.eval_return;
  d["teacher_grad_norm"] = r.teacher_grad_norm;
  d["teacher_mean_log_std"] = r.teacher_mean_log_std;
  d["critic_loss"] = r.critic_loss;
  d["wall_clock_s"] = r.wall_clock_s;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "DDPG with a meta-learned exploration policy";

  py::class_<PyEnv>(m, "Env")
      .def(py::init<const std::string&, const std::map<std::string, double>&, std::uint64_t>(),
           py::arg("name"), py::arg("overrides") = std::map<std::string, double>{},
           py::arg("seed") = 0)
      .def("seed", &PyEnv::seed)
      .def("reset", &PyEnv::reset)
      .def("step", &PyEnv::step, py::arg("action"))
      .def_property_readonly("name", &PyEnv::name)
      .def_property_readonly("obs_dim", &PyEnv::obs_dim)
      .def_property_readonly("action_dim", &PyEnv::action_dim)
      .def_property_readonly("action_low", &PyEnv::action_low)
      .def_property_readonly("action_high", &PyEnv::action_high)
      .def_property_readonly("max_episode_steps", &PyEnv::max_episode_steps);

  m.def(
      "run_experiment",
      [](const std::map<std::string, std::string>& overrides, std::uint64_t seed,
         const std::string& out_dir) {
        const auto cfg = build_config(overrides);
        const auto result = metapg::harness::run_experiment(cfg, seed, out_dir);
        py::list records;
        for (const auto& r : result.records) records.append(record_to_dict(r));
        py::dict out;
        out["records"] = records;
        out["env_steps"] = result.env_steps;
        out["cycles_run"] = result.cycles_run;
        out["out_dir"] = result.out_dir;
        out["final_eval_return"] = result.records.empty()
                                       ? std::numeric_limits<double>::quiet_NaN()
                                       : result.records.back().eval_return;
        return out;
      },
      py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("seed") = 1,
      py::arg("out_dir") = std::string{},
      "Run one training experiment; overrides use the config-file keys.");

  m.def(
      "evaluate_checkpoint",
      [](const std::string& path, int episodes, std::uint64_t seed) {
        auto cp = metapg::checkpoint::load(path);
        auto env = metapg::env::make_env(cp.env_name, cp.env_overrides);
        metapg::Rng rng = metapg::seed_stream(seed, "eval");
        const auto stats = metapg::harness::evaluate_actor(cp.learner.actor, *env, episodes, rng);
        return py::make_tuple(stats.mean, stats.stddev, stats.n_episodes);
      },
      py::arg("path"), py::arg("episodes") = 10, py::arg("seed") = 0);

  m.def("default_config", [] { return metapg::config::to_file_string({}); });

  m.def(
      "selftest",
      [](std::uint64_t seed) {
        py::list out;
        for (const auto& r : metapg::selftest::run_all(seed))
          out.append(py::make_tuple(r.name, r.pass, r.detail));
        return out;
      },
      py::arg("seed") = 12345);
}
