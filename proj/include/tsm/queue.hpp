#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsm/stats.hpp"

namespace tsm {

struct InfeasibleDemand : std::runtime_error {
  explicit InfeasibleDemand(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigInvalid : std::runtime_error {
  explicit ConfigInvalid(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoRoot : std::runtime_error {
  explicit NoRoot(const std::string& msg) : std::runtime_error(msg) {}
};

// Customer arrival rate mu(p): non-increasing, continuous, concave, with
// p*mu(p) unimodal on the domain. All properties are checked numerically on a
// grid at construction.
class DemandCurve {
 public:
  static DemandCurve linear(double intercept, double slope, double p_lo, double p_hi);
  static DemandCurve power(double beta, double alpha, double theta, double p_lo, double p_hi);
  // Monotone samples with linear interpolation; prices strictly increasing.
  static DemandCurve table(std::vector<double> prices, std::vector<double> rates);

  double mu(double p) const { return eval_(p); }
  double p_lo() const { return lo_; }
  double p_hi() const { return hi_; }

 private:
  DemandCurve(std::function<double(double)> eval, double lo, double hi);
  void validate() const;

  std::function<double(double)> eval_;
  double lo_;
  double hi_;
};

enum class PStarRegime { Slack, Equality };

struct PStar {
  double p_star;
  double mu_star;
  PStarRegime regime;
};

// Maximizer of p*mu(p) subject to mu(p) <= lambda. Equality regime flags an
// active constraint (within 1e-9), which triggers the p* + epsilon price rule.
PStar solve_pstar(const DemandCurve& demand, double lambda);

// delta = decay_exponent * sigma_c_sq * ln(U) / U.
double delta_schedule(double u, double decay_exponent, double sigma_c_sq);

// Bi-modal matching rule: nothing below mu* - delta, mu* - delta up to U/2,
// mu* + delta above; defensively clamped to n.
double match_amount(double n, double mu_star, double delta, double u);

enum class ProfitFn { Identity, Log1p };

double profit_value(ProfitFn fn, double x);

// Jensen ceiling V(p* mu(p*)); policy-free, so the Equality-regime epsilon
// bump does not enter.
double profit_upper_bound(const DemandCurve& demand, double lambda, ProfitFn fn);

enum class ArrivalKind { Poisson, Deterministic, BernoulliBatch };

struct QueueConfig {
  double lambda;
  DemandCurve demand;
  double u_threshold;
  double s_bar = 0.0;  // 0 -> default 4U
  double decay_exponent = 2.0;
  double sigma_c_sq = 2.0;
  std::optional<double> delta_override;
  double epsilon_scale = 1e-3;  // Equality regime charges p*(1 + epsilon_scale)
  ProfitFn profit_fn = ProfitFn::Identity;
  ArrivalKind server_arrivals = ArrivalKind::Poisson;
  ArrivalKind customer_arrivals = ArrivalKind::Poisson;
};

struct ResolvedQueue {
  double p_star;
  double mu_star;
  PStarRegime regime;
  double delta;
  double p_eff;
  double mu_eff;  // customer arrival rate at the effective price
  double s_bar;
  double jensen_bound;
};

// Validates the config invariants (delta < mu*, U/2 >= mu* + delta,
// s_bar > U, decay_exponent >= 2, ...) and resolves the derived quantities.
ResolvedQueue resolve_config(const QueueConfig& cfg);

struct QueueState {
  double s = 0.0;
  double q_c = 0.0;
  std::int64_t t = 0;
  double n() const { return s < q_c ? s : q_c; }
};

// One slot of the coupled recursion: match from the pre-arrival state, then
// admit arrivals, with server blocking at s_bar.
QueueState step(const QueueState& state, double a, double b, double mu_star, double delta,
                double u, double s_bar);

struct CiValue {
  double mean = 0.0;
  double ci_halfwidth = 0.0;
};

struct SimReport {
  CiValue profit_rate;
  CiValue outage_prob;  // fraction of slots with N < mu* - delta
  CiValue mean_n;
  CiValue mean_w;       // FIFO sojourn of served customer fluid, in slots
  CiValue frac_high;    // fraction of slots with N > U/2
  double frac_low = 0.0;
  double tail_above_u = 0.0;
  double p_star = 0.0;
  double mu_star = 0.0;
  double delta = 0.0;
  double p_eff = 0.0;
  double jensen_bound = 0.0;
  std::int64_t horizon = 0;  // measured slots (after warmup, batch-aligned)
  std::int64_t warmup = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  double conservation_residual = 0.0;  // |cum arrivals - cum matches - q_c|
};

// Runs the recursion from the empty state, discards `warmup` slots, then
// accumulates batch-means statistics over the next `horizon` slots (rounded
// down to a multiple of 30 batches). Deterministic given (seed, stream_id).
SimReport simulate(const QueueConfig& cfg, std::int64_t horizon, std::int64_t warmup,
                   std::uint64_t seed, std::uint64_t stream_id = 0);

// Positive root of psi(tau) = log_mgf(-tau) + tau (mu_star - delta); for
// small delta the root is 2 delta / sigma^2 + o(delta).
double tau_star(double mu_star, double delta, const std::function<double(double)>& log_mgf);

// Per-slot log-MGF of Poisson(rate) arrivals: s -> rate (e^s - 1).
std::function<double(double)> poisson_log_mgf(double rate);

}  // namespace tsm
