#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tsm/experiments.hpp"
#include "tsm/loss.hpp"
#include "tsm/markov.hpp"
#include "tsm/queue.hpp"

namespace {

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tsm::cli::ConfigError("cannot open output file '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tsm - pricing and matching policies for two-sided service platforms"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out_path;
  std::string config_path;
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();
  app.add_option("--out", out_path, "output file (stdout when empty)");
  app.add_option("--config", config_path, "JSON config; its values override flags");
  app.fallthrough();

  tsm::cli::LossSweepCfg sweep_cfg;
  tsm::cli::LossBoundsCfg bounds_cfg;
  tsm::cli::BruteForceCfg brute_cfg;
  tsm::cli::QueueSweepCfg qsweep_cfg;
  tsm::cli::QueueRunCfg qrun_cfg;

  auto add_model_flags = [](CLI::App* cmd, tsm::cli::LossModelCfg* m) {
    cmd->add_option("--lambda", m->lambda, "server arrival rate");
    cmd->add_option("--beta", m->beta, "demand intercept");
    cmd->add_option("--alpha", m->alpha, "demand slope");
    cmd->add_option("--theta", m->theta, "demand concavity exponent");
    cmd->add_option("--p-min", m->p_min, "lowest admissible price");
    cmd->add_option("--p-max", m->p_max, "highest admissible price");
  };

  CLI::App* loss = app.add_subcommand("loss", "loss-model experiments");
  loss->require_subcommand(1);
  loss->fallthrough();

  CLI::App* loss_sweep = loss->add_subcommand("sweep", "objective curves over bang-bang x (CSV)");
  add_model_flags(loss_sweep, &sweep_cfg.model);
  loss_sweep->add_option("--w-list", sweep_cfg.w_list, "holding weights")->delimiter(',');
  loss_sweep->add_option("--x-max", sweep_cfg.x_max, "grid upper end");
  loss_sweep->add_option("--x-step", sweep_cfg.x_step, "grid step");

  CLI::App* loss_bounds = loss->add_subcommand("bounds", "bounds, optima and competitiveness (JSON)");
  add_model_flags(loss_bounds, &bounds_cfg.model);
  loss_bounds->add_option("--w", bounds_cfg.w, "holding weight");
  loss_bounds->add_option("--gamma", bounds_cfg.gamma, "competitive slack factor");
  loss_bounds->add_option("--x-max", bounds_cfg.x_max, "bang-bang search range");
  loss_bounds->add_option("--x-step", bounds_cfg.x_step, "bang-bang search grid");

  CLI::App* loss_brute = loss->add_subcommand("bruteforce", "exhaustive pi_0 minimization (JSON)");
  loss_brute->add_option("--n-states", brute_cfg.n_states, "states in the finite chain");
  loss_brute->add_option("--levels", brute_cfg.levels, "rho levels")->delimiter(',');
  loss_brute->add_option("--caps", brute_cfg.caps, "moment caps")->delimiter(',');

  CLI::App* queue = app.add_subcommand("queue", "queueing-model experiments");
  queue->require_subcommand(1);
  queue->fallthrough();

  CLI::App* queue_sweep = queue->add_subcommand("sweep", "outage/delay/profit over U (CSV)");
  queue_sweep->add_option("--mu-star-list", qsweep_cfg.mu_star_list, "target mu(p*) values")
      ->delimiter(',');
  queue_sweep->add_option("--delta-gap", qsweep_cfg.delta_gap, "lambda - mu(p*)");
  queue_sweep->add_option("--u-list", qsweep_cfg.u_list, "thresholds U")->delimiter(',');
  queue_sweep->add_option("--decay-exponent", qsweep_cfg.decay_exponent, "delta schedule exponent");
  queue_sweep->add_option("--sigma-c-sq", qsweep_cfg.sigma_c_sq, "customer arrival variance rate");
  queue_sweep->add_option("--horizon", qsweep_cfg.horizon, "measured slots");
  queue_sweep->add_option("--warmup", qsweep_cfg.warmup, "discarded slots");
  queue_sweep->add_option("--s-bar-mult", qsweep_cfg.s_bar_mult, "server cap as a multiple of U");
  queue_sweep->add_option("--profit", qsweep_cfg.profit_fn, "identity | log1p");
  queue_sweep->add_option("--arrivals", qsweep_cfg.arrivals, "poisson | deterministic | bernoulli");

  CLI::App* queue_run = queue->add_subcommand("run", "single simulation (JSON)");
  queue_run->add_option("--lambda", qrun_cfg.lambda, "server arrival rate");
  queue_run->add_option("--demand-form", qrun_cfg.demand.form, "linear | power | table");
  queue_run->add_option("--demand-intercept", qrun_cfg.demand.intercept, "linear intercept");
  queue_run->add_option("--demand-slope", qrun_cfg.demand.slope, "linear slope");
  queue_run->add_option("--demand-beta", qrun_cfg.demand.beta, "power beta");
  queue_run->add_option("--demand-alpha", qrun_cfg.demand.alpha, "power alpha");
  queue_run->add_option("--demand-theta", qrun_cfg.demand.theta, "power theta");
  queue_run->add_option("--p-lo", qrun_cfg.demand.p_lo, "price domain lower end");
  queue_run->add_option("--p-hi", qrun_cfg.demand.p_hi, "price domain upper end");
  queue_run->add_option("--u", qrun_cfg.u, "matching threshold U");
  queue_run->add_option("--s-bar-mult", qrun_cfg.s_bar_mult, "server cap as a multiple of U");
  queue_run->add_option("--decay-exponent", qrun_cfg.decay_exponent, "delta schedule exponent");
  queue_run->add_option("--sigma-c-sq", qrun_cfg.sigma_c_sq, "customer arrival variance rate");
  queue_run->add_option("--delta", qrun_cfg.delta, "delta override (0 = schedule)");
  queue_run->add_option("--epsilon-scale", qrun_cfg.epsilon_scale, "equality-regime price bump");
  queue_run->add_option("--profit", qrun_cfg.profit_fn, "identity | log1p");
  queue_run->add_option("--arrivals", qrun_cfg.arrivals, "poisson | deterministic | bernoulli");
  queue_run->add_option("--horizon", qrun_cfg.horizon, "measured slots");
  queue_run->add_option("--warmup", qrun_cfg.warmup, "discarded slots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::string mode;
    tsm::cli::LossSweepCfg* sweep = nullptr;
    tsm::cli::LossBoundsCfg* bounds = nullptr;
    tsm::cli::BruteForceCfg* brute = nullptr;
    tsm::cli::QueueSweepCfg* qsweep = nullptr;
    tsm::cli::QueueRunCfg* qrun = nullptr;
    if (loss_sweep->parsed()) { mode = "loss_sweep"; sweep = &sweep_cfg; }
    else if (loss_bounds->parsed()) { mode = "loss_bounds"; bounds = &bounds_cfg; }
    else if (loss_brute->parsed()) { mode = "loss_bruteforce"; brute = &brute_cfg; }
    else if (queue_sweep->parsed()) { mode = "queue_sweep"; qsweep = &qsweep_cfg; }
    else if (queue_run->parsed()) { mode = "queue_run"; qrun = &qrun_cfg; }

    if (!config_path.empty()) {
      const tsm::cli::CommonOverrides common =
          tsm::cli::apply_config_file(config_path, mode, sweep, bounds, brute, qsweep, qrun);
      if (common.has_seed) seed = common.seed;
      if (common.has_out) out_path = common.out;
    }

    std::string text;
    if (sweep) text = tsm::cli::run_loss_sweep(*sweep);
    else if (bounds) text = tsm::cli::run_loss_bounds(*bounds);
    else if (brute) text = tsm::cli::run_brute_force(*brute);
    else if (qsweep) text = tsm::cli::run_queue_sweep(*qsweep, seed);
    else text = tsm::cli::run_queue_single(*qrun, seed);
    write_output(out_path, text);
    return 0;
  } catch (const tsm::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const tsm::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const tsm::cli::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}
