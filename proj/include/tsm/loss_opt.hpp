#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsm/loss.hpp"
#include "tsm/markov.hpp"

namespace tsm {

struct NoStablePrice : std::runtime_error {
  explicit NoStablePrice(const std::string& msg) : std::runtime_error(msg) {}
};

struct Infeasible : std::runtime_error {
  explicit Infeasible(const std::string& msg) : std::runtime_error(msg) {}
};

struct PreconditionViolation : std::runtime_error {
  explicit PreconditionViolation(const std::string& msg) : std::runtime_error(msg) {}
};

struct InfeasibleRate : std::runtime_error {
  explicit InfeasibleRate(const std::string& msg) : std::runtime_error(msg) {}
};

struct StaticOptimum {
  double price;
  double value;
  bool closed_form;  // true when the theta = 1 interior formula applied
};

// Best single price for p - w_tilde/(g(p) - lambda). Closed form for the
// linear model when the interior optimum fits the box; otherwise a
// golden-section pass over the stable sub-box {p : g(p) > lambda}.
StaticOptimum optimal_static_price(const PriceModel& m, bool force_numeric = false);

struct BoundsReport {
  double g_inv_bound;                   // revenue ceiling g^{-1}(lambda)
  double light_traffic_bound_boxed;     // max over the box of p - w_tilde/g(p)
  double light_traffic_bound_relaxed;   // unboxed closed form beta/alpha - B/alpha
  double combined;                      // min(g_inv_bound, boxed light-traffic)
};

BoundsReport universal_bounds(const PriceModel& m);

struct BangBangOptimum {
  double x_rel;
  double value_rel;
  double x_c;      // argmax under the unrelaxed objective, for comparison
  double value_c;
};

// Grid scan over x in [0, x_max] followed by golden-section refinement inside
// the best bracket, for both objectives. Linear model only.
BangBangOptimum optimize_bangbang(const PriceModel& m, double x_max = 50.0, double grid = 0.05);

struct BruteForceResult {
  std::vector<double> rho;
  double pi0;
  double mean_n;
};

// Exhaustive minimization of pi_0 over all assignments of the given rho
// levels on the finite chain with n_states states, subject to E[N] <= cap.
// Ties break toward the lexicographically largest prefix.
BruteForceResult brute_force_min_pi0(int n_states, const std::vector<double>& levels,
                                     const MomentCap& cap);

struct PerturbResult {
  RhoProfile profile;
  double delta_f;
  double m_new;
};

// The improving two-coordinate perturbation: raise rho_i by eps and solve
// rho~_{i+1} from m-invariance; on any profile with m = 0 that is not
// bang-bang ordered at (i, i+1) this strictly increases f = 1/pi_0.
PerturbResult improving_perturbation(const RhoProfile& profile, std::size_t i, double eps,
                             const MomentCap& cap);

enum class TrafficRegime { HeavyTraffic, LightTraffic };

struct CompetitiveReport {
  TrafficRegime regime;
  double gamma;
  double payoff_lower;
  double reduction_ratio_estimate;  // payoff reduction vs. the universal minimum reduction
};

// Static-price competitiveness cases: heavy traffic targets mu = gamma*lambda,
// light traffic targets mu = gamma*B^theta, with B = (w~ a th)^{1/(th+1)}(1+1/th).
CompetitiveReport competitive_cases(const PriceModel& m, double gamma);

// Non-increasing with at most one level strictly between lo and hi.
bool bangbang_shaped(const std::vector<double>& rho, double lo, double hi, double tol = 1e-9);

}  // namespace tsm
