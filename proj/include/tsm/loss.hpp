#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsm/markov.hpp"

namespace tsm {

struct PriceOutOfRange : std::runtime_error {
  explicit PriceOutOfRange(const std::string& msg) : std::runtime_error(msg) {}
};

struct RateOutOfRange : std::runtime_error {
  explicit RateOutOfRange(const std::string& msg) : std::runtime_error(msg) {}
};

struct RequiresLinearModel : std::runtime_error {
  explicit RequiresLinearModel(const std::string& msg) : std::runtime_error(msg) {}
};

// Loss-model parameters: demand curve g(p) = (beta - alpha p)^theta on the
// price box [p_min, p_max], Poisson server arrivals at rate lambda, holding
// weight w per waiting server per unit time.
struct PriceModel {
  double alpha_d;
  double beta_d;
  double theta;
  double p_min;
  double p_max;
  double lambda;
  double w;

  PriceModel(double alpha, double beta, double theta_, double pmin, double pmax,
             double lam, double w_);

  double g(double p) const;  // demand rate, no box check
  double mu_max() const { return g(p_min); }
  double mu_min() const { return g(p_max); }
  double w_tilde() const { return w * lambda; }
  bool linear() const { return theta == 1.0; }

  PriceModel with_w(double w_) const;
};

// Box-checked demand evaluation; strictly decreasing in p.
double g_eval(const PriceModel& m, double p);

// Inverse demand (beta - mu^{1/theta}) / alpha on [mu_min, mu_max].
double g_inverse(const PriceModel& m, double mu);

// State-dependent pricing rule. BangBang(x) expands to the threshold policy
// l* = ceil(x), p_{l*} = p_max - (ceil(x) - x)(p_max - p_min), p_max below,
// p_min above. State 0 is pinned to p_max, except for static policies where
// the single price also covers state 0 (no customer is ever served there, so
// only the averaging convention is affected; see the test suite notes).
class Policy {
 public:
  enum class Kind { Static, BangBang, Tabular };

  static Policy static_price(double p);
  static Policy bang_bang(double x);
  static Policy tabular(std::vector<double> prices,
                        std::optional<double> tail_price = std::nullopt);

  Kind kind() const { return kind_; }
  double static_p() const;
  double x() const;

  // Explicit per-state prices for states 0..cutoff plus the constant price
  // used beyond the cutoff. Validates every price against the model box.
  struct Schedule {
    std::vector<double> price;  // index = state
    double tail_price;
    std::size_t cutoff() const { return price.size() - 1; }
  };
  Schedule schedule(const PriceModel& m) const;

 private:
  Policy() = default;
  Kind kind_ = Kind::Static;
  double static_p_ = 0.0;
  double x_ = 0.0;
  std::vector<double> prices_;
  std::optional<double> tail_price_;
};

// Rate ratios of the induced birth-death chain: rho_i = lambda / g(p_i),
// bounds (lambda/mu_max, lambda/mu_min). Throws NonRecurrent when the tail
// price cannot keep the server queue positive recurrent.
RhoProfile policy_rates(const PriceModel& m, const Policy& policy);

struct ObjectivePair {
  double c;      // price averaged over the departure distribution
  double c_rel;  // price averaged over the stationary distribution
  double pi0;
  double mean_n;
};

ObjectivePair evaluate_policy(const PriceModel& m, const Policy& policy);
double objective_crel(const PriceModel& m, const Policy& policy);
double objective_c(const PriceModel& m, const Policy& policy);

// Linear-sensitivity identity (beta - pi_0 g(p_0) - lambda)/alpha - w E[N];
// equals objective_crel for theta = 1. Throws RequiresLinearModel otherwise.
double pi0_payoff_identity(const PriceModel& m, const Policy& policy);

}  // namespace tsm
