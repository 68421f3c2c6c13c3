#include "tsm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "json.hpp"
#include "tsm/loss.hpp"
#include "tsm/loss_opt.hpp"
#include "tsm/markov.hpp"
#include "tsm/queue.hpp"

namespace tsm::cli {

using ordered_json = nlohmann::ordered_json;

std::string fmt9(double v) {
  if (!std::isfinite(v)) {
    throw NumericError("non-finite value in output: " + std::to_string(v));
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace {

// Round-trips through fmt9 so JSON documents carry the same 9-significant-digit
// numbers as the CSVs (and inherit the finiteness guard).
double jnum(double v) { return std::stod(fmt9(v)); }

PriceModel build_model(const LossModelCfg& m, double w) {
  try {
    return PriceModel(m.alpha, m.beta, m.theta, m.p_min, m.p_max, m.lambda, w);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

ProfitFn parse_profit(const std::string& name) {
  if (name == "identity") return ProfitFn::Identity;
  if (name == "log1p") return ProfitFn::Log1p;
  throw ConfigError("profit_fn must be 'identity' or 'log1p', got '" + name + "'");
}

ArrivalKind parse_arrivals(const std::string& name) {
  if (name == "poisson") return ArrivalKind::Poisson;
  if (name == "deterministic") return ArrivalKind::Deterministic;
  if (name == "bernoulli") return ArrivalKind::BernoulliBatch;
  throw ConfigError("arrivals must be 'poisson', 'deterministic' or 'bernoulli', got '" +
                    name + "'");
}

DemandCurve build_demand(const DemandCfg& d) {
  try {
    if (d.form == "linear") return DemandCurve::linear(d.intercept, d.slope, d.p_lo, d.p_hi);
    if (d.form == "power") return DemandCurve::power(d.beta, d.alpha, d.theta, d.p_lo, d.p_hi);
    if (d.form == "table") return DemandCurve::table(d.table_p, d.table_mu);
  } catch (const ConfigInvalid& e) {
    throw ConfigError(std::string("demand: ") + e.what());
  }
  throw ConfigError("demand.form must be 'linear', 'power' or 'table', got '" + d.form + "'");
}

struct SweepCell {
  double mu_star;
  double u;
  std::uint64_t stream;
};

SimReport run_cell(const QueueSweepCfg& cfg, const SweepCell& cell, std::uint64_t seed) {
  QueueConfig qc{
      /*lambda=*/cell.mu_star + cfg.delta_gap,
      /*demand=*/DemandCurve::linear(2.0 * cell.mu_star, 1.0, 0.0, 2.0 * cell.mu_star),
      /*u_threshold=*/cell.u,
      /*s_bar=*/cfg.s_bar_mult * cell.u,
      /*decay_exponent=*/cfg.decay_exponent,
      /*sigma_c_sq=*/cfg.sigma_c_sq,
  };
  qc.profit_fn = parse_profit(cfg.profit_fn);
  qc.server_arrivals = parse_arrivals(cfg.arrivals);
  qc.customer_arrivals = qc.server_arrivals;
  return simulate(qc, cfg.horizon, cfg.warmup, seed, cell.stream);
}

double loglog_slope(const std::vector<double>& us, const std::vector<double>& ps) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < us.size(); ++k) {
    if (ps[k] > 0.0) {
      xs.push_back(std::log(us[k]));
      ys.push_back(std::log(ps[k]));
    }
  }
  if (xs.size() < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

std::string run_loss_sweep(const LossSweepCfg& cfg) {
  if (cfg.w_list.empty()) throw ConfigError("loss sweep: w_list must not be empty");
  if (!(cfg.x_step > 0.0) || !(cfg.x_max >= 0.0)) {
    throw ConfigError("loss sweep: empty x-grid (need x_step > 0 and x_max >= 0)");
  }
  if (cfg.model.theta != 1.0) throw ConfigError("loss sweep: requires a linear model (theta = 1)");

  std::ostringstream out;
  out << "kind,w,x,c,c_rel\n";
  const std::size_t n = static_cast<std::size_t>(std::floor(cfg.x_max / cfg.x_step + 1e-9));
  for (double w : cfg.w_list) {
    const PriceModel model = build_model(cfg.model, w);
    for (std::size_t i = 0; i <= n; ++i) {
      const double x = static_cast<double>(i) * cfg.x_step;
      const ObjectivePair pair = evaluate_policy(model, Policy::bang_bang(x));
      out << "cell," << fmt9(w) << ',' << fmt9(x) << ',' << fmt9(pair.c) << ','
          << fmt9(pair.c_rel) << '\n';
    }
    const BangBangOptimum opt = optimize_bangbang(model, cfg.x_max, cfg.x_step);
    const ObjectivePair at_rel = evaluate_policy(model, Policy::bang_bang(opt.x_rel));
    const ObjectivePair at_c = evaluate_policy(model, Policy::bang_bang(opt.x_c));
    out << "argmax_crel," << fmt9(w) << ',' << fmt9(opt.x_rel) << ',' << fmt9(at_rel.c) << ','
        << fmt9(at_rel.c_rel) << '\n';
    out << "argmax_c," << fmt9(w) << ',' << fmt9(opt.x_c) << ',' << fmt9(at_c.c) << ','
        << fmt9(at_c.c_rel) << '\n';
  }
  return out.str();
}

std::string run_loss_bounds(const LossBoundsCfg& cfg) {
  const PriceModel model = build_model(cfg.model, cfg.w);
  const BoundsReport bounds = universal_bounds(model);
  const StaticOptimum st = optimal_static_price(model);

  ordered_json doc;
  doc["model"] = {{"lambda", jnum(cfg.model.lambda)}, {"beta", jnum(cfg.model.beta)},
                  {"alpha", jnum(cfg.model.alpha)},   {"theta", jnum(cfg.model.theta)},
                  {"p_min", jnum(cfg.model.p_min)},   {"p_max", jnum(cfg.model.p_max)}};
  doc["w"] = jnum(cfg.w);
  doc["bounds"] = {{"g_inv_bound", jnum(bounds.g_inv_bound)},
                   {"light_traffic_bound_boxed", jnum(bounds.light_traffic_bound_boxed)},
                   {"light_traffic_bound_relaxed", jnum(bounds.light_traffic_bound_relaxed)},
                   {"combined", jnum(bounds.combined)}};
  doc["static_optimum"] = {{"price", jnum(st.price)}, {"value", jnum(st.value)}};
  if (model.linear() && st.closed_form) {
    doc["static_closed_form"] = {{"price", jnum(st.price)}, {"value", jnum(st.value)}};
  } else {
    doc["static_closed_form"] = nullptr;
  }
  if (model.linear()) {
    const BangBangOptimum bb = optimize_bangbang(model, cfg.x_max, cfg.x_step);
    doc["bangbang_optimum"] = {{"x_crel", jnum(bb.x_rel)},
                               {"value_crel", jnum(bb.value_rel)},
                               {"x_c", jnum(bb.x_c)},
                               {"value_c", jnum(bb.value_c)}};
  } else {
    doc["bangbang_optimum"] = nullptr;
  }
  try {
    const CompetitiveReport comp = competitive_cases(model, cfg.gamma);
    doc["competitive"] = {
        {"regime", comp.regime == TrafficRegime::HeavyTraffic ? "heavy_traffic" : "light_traffic"},
        {"gamma", jnum(comp.gamma)},
        {"feasible", true},
        {"payoff_lower", jnum(comp.payoff_lower)},
        {"reduction_ratio_estimate", jnum(comp.reduction_ratio_estimate)}};
  } catch (const InfeasibleRate& e) {
    doc["competitive"] = {{"gamma", jnum(cfg.gamma)}, {"feasible", false}, {"reason", e.what()}};
  }
  return doc.dump(2) + "\n";
}

std::string run_brute_force(const BruteForceCfg& cfg) {
  if (cfg.n_states < 2 || cfg.n_states > 10) {
    throw ConfigError("bruteforce: n_states must lie in [2, 10]");
  }
  if (cfg.levels.empty() || cfg.levels.size() > 6) {
    throw ConfigError("bruteforce: need between 1 and 6 levels");
  }
  if (cfg.caps.empty()) throw ConfigError("bruteforce: caps must not be empty");

  const double lo = *std::min_element(cfg.levels.begin(), cfg.levels.end());
  const double hi = *std::max_element(cfg.levels.begin(), cfg.levels.end());
  ordered_json doc;
  doc["n_states"] = cfg.n_states;
  doc["levels"] = cfg.levels;
  doc["results"] = ordered_json::array();
  for (double cap : cfg.caps) {
    ordered_json entry;
    entry["cap"] = jnum(cap);
    try {
      const BruteForceResult res = brute_force_min_pi0(cfg.n_states, cfg.levels, MomentCap(cap));
      entry["feasible"] = true;
      entry["rho"] = ordered_json::array();
      for (double r : res.rho) entry["rho"].push_back(jnum(r));
      entry["pi0"] = jnum(res.pi0);
      entry["mean_n"] = jnum(res.mean_n);
      entry["bangbang_shaped"] = bangbang_shaped(res.rho, lo, hi);
    } catch (const Infeasible&) {
      entry["feasible"] = false;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("bruteforce: ") + e.what());
    }
    doc["results"].push_back(entry);
  }
  return doc.dump(2) + "\n";
}

std::string run_queue_sweep(const QueueSweepCfg& cfg, std::uint64_t seed) {
  if (cfg.mu_star_list.empty() || cfg.u_list.empty()) {
    throw ConfigError("queue sweep: mu_star_list and u_list must not be empty");
  }
  if (cfg.horizon <= 0 || cfg.warmup < 0) {
    throw ConfigError("queue sweep: need horizon > 0 and warmup >= 0");
  }
  parse_profit(cfg.profit_fn);
  parse_arrivals(cfg.arrivals);

  std::vector<double> mus = cfg.mu_star_list;
  std::vector<double> us = cfg.u_list;
  std::sort(mus.begin(), mus.end());
  std::sort(us.begin(), us.end());

  std::vector<SweepCell> cells;
  for (double mu : mus) {
    for (double u : us) {
      cells.push_back({mu, u, static_cast<std::uint64_t>(cells.size())});
    }
  }
  std::vector<std::future<SimReport>> futures;
  futures.reserve(cells.size());
  for (const SweepCell& cell : cells) {
    futures.push_back(std::async(std::launch::async,
                                 [&cfg, cell, seed] { return run_cell(cfg, cell, seed); }));
  }
  std::vector<SimReport> reports;
  reports.reserve(cells.size());
  for (auto& f : futures) reports.push_back(f.get());

  std::ostringstream out;
  out << "kind,u,mu_star,delta,outage_prob,outage_ci,mean_n,mean_n_ci,mean_w,mean_w_ci,"
         "frac_high,frac_low,tail_above_u,profit_rate,profit_ci,jensen_bound,slope\n";
  std::size_t idx = 0;
  for (double mu : mus) {
    std::vector<double> u_pts, outage_pts;
    for (double u : us) {
      const SimReport& r = reports[idx++];
      out << "cell," << fmt9(u) << ',' << fmt9(r.mu_star) << ',' << fmt9(r.delta) << ','
          << fmt9(r.outage_prob.mean) << ',' << fmt9(r.outage_prob.ci_halfwidth) << ','
          << fmt9(r.mean_n.mean) << ',' << fmt9(r.mean_n.ci_halfwidth) << ','
          << fmt9(r.mean_w.mean) << ',' << fmt9(r.mean_w.ci_halfwidth) << ','
          << fmt9(r.frac_high.mean) << ',' << fmt9(r.frac_low) << ','
          << fmt9(r.tail_above_u) << ',' << fmt9(r.profit_rate.mean) << ','
          << fmt9(r.profit_rate.ci_halfwidth) << ',' << fmt9(r.jensen_bound) << ",0\n";
      u_pts.push_back(u);
      outage_pts.push_back(r.outage_prob.mean);
    }
    out << "slope,0," << fmt9(mu) << ",0,0,0,0,0,0,0,0,0,0,0,0,0,"
        << fmt9(loglog_slope(u_pts, outage_pts)) << '\n';
  }
  return out.str();
}

std::string run_queue_single(const QueueRunCfg& cfg, std::uint64_t seed) {
  QueueConfig qc{cfg.lambda,
                 build_demand(cfg.demand),
                 cfg.u,
                 cfg.s_bar_mult * cfg.u,
                 cfg.decay_exponent,
                 cfg.sigma_c_sq};
  if (cfg.delta > 0.0) qc.delta_override = cfg.delta;
  qc.epsilon_scale = cfg.epsilon_scale;
  qc.profit_fn = parse_profit(cfg.profit_fn);
  qc.server_arrivals = parse_arrivals(cfg.arrivals);
  qc.customer_arrivals = qc.server_arrivals;

  const SimReport r = simulate(qc, cfg.horizon, cfg.warmup, seed);
  ordered_json doc;
  doc["p_star"] = jnum(r.p_star);
  doc["mu_star"] = jnum(r.mu_star);
  doc["delta"] = jnum(r.delta);
  doc["p_eff"] = jnum(r.p_eff);
  doc["profit_rate"] = {{"mean", jnum(r.profit_rate.mean)}, {"ci", jnum(r.profit_rate.ci_halfwidth)}};
  doc["outage_prob"] = {{"mean", jnum(r.outage_prob.mean)}, {"ci", jnum(r.outage_prob.ci_halfwidth)}};
  doc["mean_n"] = {{"mean", jnum(r.mean_n.mean)}, {"ci", jnum(r.mean_n.ci_halfwidth)}};
  doc["mean_w"] = {{"mean", jnum(r.mean_w.mean)}, {"ci", jnum(r.mean_w.ci_halfwidth)}};
  doc["frac_high"] = jnum(r.frac_high.mean);
  doc["frac_low"] = jnum(r.frac_low);
  doc["tail_above_u"] = jnum(r.tail_above_u);
  doc["jensen_bound"] = jnum(r.jensen_bound);
  doc["horizon"] = r.horizon;
  doc["warmup"] = r.warmup;
  doc["seed"] = r.seed;
  doc["conservation_residual"] = jnum(r.conservation_residual);
  return doc.dump(2) + "\n";
}

namespace {

using nlohmann::json;

double as_num(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  return v.get<double>();
}

std::int64_t as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return v.get<std::int64_t>();
}

std::string as_str(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> as_num_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_num(e, where + "[]"));
  return out;
}

void apply_model(const json& j, LossModelCfg* m) {
  for (const auto& [key, val] : j.items()) {
    if (key == "lambda") m->lambda = as_num(val, "model.lambda");
    else if (key == "beta") m->beta = as_num(val, "model.beta");
    else if (key == "alpha") m->alpha = as_num(val, "model.alpha");
    else if (key == "theta") m->theta = as_num(val, "model.theta");
    else if (key == "p_min") m->p_min = as_num(val, "model.p_min");
    else if (key == "p_max") m->p_max = as_num(val, "model.p_max");
    else throw ConfigError("unknown key 'model." + key + "'");
  }
}

void apply_demand(const json& j, DemandCfg* d) {
  for (const auto& [key, val] : j.items()) {
    if (key == "form") d->form = as_str(val, "demand.form");
    else if (key == "intercept") d->intercept = as_num(val, "demand.intercept");
    else if (key == "slope") d->slope = as_num(val, "demand.slope");
    else if (key == "beta") d->beta = as_num(val, "demand.beta");
    else if (key == "alpha") d->alpha = as_num(val, "demand.alpha");
    else if (key == "theta") d->theta = as_num(val, "demand.theta");
    else if (key == "p_lo") d->p_lo = as_num(val, "demand.p_lo");
    else if (key == "p_hi") d->p_hi = as_num(val, "demand.p_hi");
    else if (key == "table_p") d->table_p = as_num_list(val, "demand.table_p");
    else if (key == "table_mu") d->table_mu = as_num_list(val, "demand.table_mu");
    else throw ConfigError("unknown key 'demand." + key + "'");
  }
}

}  // namespace

CommonOverrides apply_config_file(const std::string& path, const std::string& mode,
                                  LossSweepCfg* sweep, LossBoundsCfg* bounds,
                                  BruteForceCfg* brute, QueueSweepCfg* qsweep,
                                  QueueRunCfg* qrun) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config '" + path + "': expected a JSON object");

  CommonOverrides common;
  for (const auto& [key, val] : doc.items()) {
    if (key == "mode") {
      const std::string m = as_str(val, "mode");
      if (m != mode) {
        throw ConfigError("config mode '" + m + "' does not match the '" + mode +
                          "' subcommand");
      }
    } else if (key == "seed") {
      common.has_seed = true;
      common.seed = static_cast<std::uint64_t>(as_int(val, "seed"));
    } else if (key == "out") {
      common.has_out = true;
      common.out = as_str(val, "out");
    } else if (key == "model" && (sweep || bounds)) {
      apply_model(val, sweep ? &sweep->model : &bounds->model);
    } else if (key == "w_list" && sweep) {
      sweep->w_list = as_num_list(val, "w_list");
    } else if (key == "x_max" && sweep) {
      sweep->x_max = as_num(val, "x_max");
    } else if (key == "x_step" && sweep) {
      sweep->x_step = as_num(val, "x_step");
    } else if (key == "w" && bounds) {
      bounds->w = as_num(val, "w");
    } else if (key == "gamma" && bounds) {
      bounds->gamma = as_num(val, "gamma");
    } else if (key == "x_max" && bounds) {
      bounds->x_max = as_num(val, "x_max");
    } else if (key == "x_step" && bounds) {
      bounds->x_step = as_num(val, "x_step");
    } else if (key == "n_states" && brute) {
      brute->n_states = static_cast<int>(as_int(val, "n_states"));
    } else if (key == "levels" && brute) {
      brute->levels = as_num_list(val, "levels");
    } else if (key == "caps" && brute) {
      brute->caps = as_num_list(val, "caps");
    } else if (key == "mu_star_list" && qsweep) {
      qsweep->mu_star_list = as_num_list(val, "mu_star_list");
    } else if (key == "delta_gap" && qsweep) {
      qsweep->delta_gap = as_num(val, "delta_gap");
    } else if (key == "u_list" && qsweep) {
      qsweep->u_list = as_num_list(val, "u_list");
    } else if (key == "decay_exponent" && qsweep) {
      qsweep->decay_exponent = as_num(val, "decay_exponent");
    } else if (key == "sigma_c_sq" && qsweep) {
      qsweep->sigma_c_sq = as_num(val, "sigma_c_sq");
    } else if (key == "horizon" && qsweep) {
      qsweep->horizon = as_int(val, "horizon");
    } else if (key == "warmup" && qsweep) {
      qsweep->warmup = as_int(val, "warmup");
    } else if (key == "s_bar_mult" && qsweep) {
      qsweep->s_bar_mult = as_num(val, "s_bar_mult");
    } else if (key == "profit_fn" && qsweep) {
      qsweep->profit_fn = as_str(val, "profit_fn");
    } else if (key == "arrivals" && qsweep) {
      qsweep->arrivals = as_str(val, "arrivals");
    } else if (key == "lambda" && qrun) {
      qrun->lambda = as_num(val, "lambda");
    } else if (key == "demand" && qrun) {
      apply_demand(val, &qrun->demand);
    } else if (key == "u" && qrun) {
      qrun->u = as_num(val, "u");
    } else if (key == "s_bar_mult" && qrun) {
      qrun->s_bar_mult = as_num(val, "s_bar_mult");
    } else if (key == "decay_exponent" && qrun) {
      qrun->decay_exponent = as_num(val, "decay_exponent");
    } else if (key == "sigma_c_sq" && qrun) {
      qrun->sigma_c_sq = as_num(val, "sigma_c_sq");
    } else if (key == "delta" && qrun) {
      qrun->delta = as_num(val, "delta");
    } else if (key == "epsilon_scale" && qrun) {
      qrun->epsilon_scale = as_num(val, "epsilon_scale");
    } else if (key == "profit_fn" && qrun) {
      qrun->profit_fn = as_str(val, "profit_fn");
    } else if (key == "arrivals" && qrun) {
      qrun->arrivals = as_str(val, "arrivals");
    } else if (key == "horizon" && qrun) {
      qrun->horizon = as_int(val, "horizon");
    } else if (key == "warmup" && qrun) {
      qrun->warmup = as_int(val, "warmup");
    } else {
      throw ConfigError("unknown key '" + key + "' in " + mode + " config");
    }
  }
  return common;
}

}  // namespace tsm::cli
