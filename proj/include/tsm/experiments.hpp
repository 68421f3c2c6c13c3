#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsm::cli {

// Exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Exit code 3 (non-finite output or numerical breakdown).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LossModelCfg {
  double lambda = 2.0;
  double beta = 3.5;
  double alpha = 1.0;
  double theta = 1.0;
  double p_min = 1.0;
  double p_max = 2.0;
};

struct LossSweepCfg {
  LossModelCfg model;
  std::vector<double> w_list = {0.05, 0.1};
  double x_max = 20.0;
  double x_step = 0.1;
};

struct LossBoundsCfg {
  LossModelCfg model;
  double w = 0.05;
  double gamma = 1.2;
  double x_max = 50.0;
  double x_step = 0.05;
};

struct BruteForceCfg {
  int n_states = 5;
  std::vector<double> levels = {0.5, 1.0, 1.5};
  std::vector<double> caps = {0.6, 0.7, 1.2, 1.7, 3.5};
};

struct QueueSweepCfg {
  std::vector<double> mu_star_list = {1.0, 2.0};
  double delta_gap = 0.1;  // lambda = mu* + delta_gap per cell
  std::vector<double> u_list = {50.0, 100.0, 200.0, 400.0};
  double decay_exponent = 2.0;
  double sigma_c_sq = 2.0;
  std::int64_t horizon = 10'000'000;
  std::int64_t warmup = 1'000'000;
  double s_bar_mult = 4.0;
  std::string profit_fn = "identity";
  std::string arrivals = "poisson";
};

struct DemandCfg {
  std::string form = "linear";  // linear | power | table
  double intercept = 2.0;
  double slope = 1.0;
  double beta = 3.5;
  double alpha = 1.0;
  double theta = 1.0;
  double p_lo = 0.0;
  double p_hi = 2.0;
  std::vector<double> table_p;
  std::vector<double> table_mu;
};

struct QueueRunCfg {
  double lambda = 1.1;
  DemandCfg demand;
  double u = 100.0;
  double s_bar_mult = 4.0;
  double decay_exponent = 2.0;
  double sigma_c_sq = 2.0;
  double delta = 0.0;  // 0 -> schedule
  double epsilon_scale = 1e-3;
  std::string profit_fn = "identity";
  std::string arrivals = "poisson";
  std::int64_t horizon = 1'000'000;
  std::int64_t warmup = 100'000;
};

// Runners return the full output document (CSV or JSON text).
std::string run_loss_sweep(const LossSweepCfg& cfg);
std::string run_loss_bounds(const LossBoundsCfg& cfg);
std::string run_brute_force(const BruteForceCfg& cfg);
std::string run_queue_sweep(const QueueSweepCfg& cfg, std::uint64_t seed);
std::string run_queue_single(const QueueRunCfg& cfg, std::uint64_t seed);

// JSON config loading; unknown keys are rejected with field diagnostics and
// config values override whatever the flags set. `mode`, `seed` and `out` are
// accepted at the top level of every document.
struct CommonOverrides {
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool has_out = false;
  std::string out;
};

CommonOverrides apply_config_file(const std::string& path, const std::string& mode,
                                  LossSweepCfg* sweep, LossBoundsCfg* bounds,
                                  BruteForceCfg* brute, QueueSweepCfg* qsweep,
                                  QueueRunCfg* qrun);

// Fixed-width float formatting used by every emitter: 9 significant digits.
// Throws NumericError on NaN/Inf.
std::string fmt9(double v);

}  // namespace tsm::cli
