#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsm {

struct NonRecurrent : std::runtime_error {
  explicit NonRecurrent(const std::string& msg) : std::runtime_error(msg) {}
};

struct Overflow : std::runtime_error {
  explicit Overflow(const std::string& msg) : std::runtime_error(msg) {}
};

struct BoundViolation : std::runtime_error {
  explicit BoundViolation(const std::string& msg) : std::runtime_error(msg) {}
};

struct RhoBounds {
  double lo;
  double hi;
};

// Upper bound on the stationary mean occupancy.
struct MomentCap {
  double cap;
  explicit MomentCap(double c);
};

// Birth-death rate ratios rho_i = lambda_{i-1}/mu_i for i >= 1: an explicit
// prefix, optionally followed by a constant geometric tail. A profile without
// a tail is a finite (truncated) chain over states 0..prefix size.
class RhoProfile {
 public:
  RhoProfile(std::vector<double> prefix, std::optional<double> tail, RhoBounds bounds);

  // Convenience factories with bounds fitted to the data.
  static RhoProfile finite(std::vector<double> prefix);
  static RhoProfile with_tail(std::vector<double> prefix, double tail);
  static RhoProfile constant(double tail);

  const std::vector<double>& prefix() const { return prefix_; }
  std::optional<double> tail() const { return tail_; }
  bool is_finite() const { return !tail_.has_value(); }
  const RhoBounds& bounds() const { return bounds_; }

  // Number of states with explicitly tabulated rho (states 0..prefix size).
  std::size_t n_explicit_states() const { return prefix_.size() + 1; }

  // rho_i for i >= 1; indices beyond the prefix read the tail value.
  double rho(std::size_t i) const;

  // Copy with rho_i replaced (prefix indices only); bound-checked.
  RhoProfile with_rho(std::size_t i, double value) const;

 private:
  std::vector<double> prefix_;
  std::optional<double> tail_;
  RhoBounds bounds_;
};

struct StationaryDist {
  std::vector<double> pi;            // states 0..pi.size()-1
  double tail_mass_bound = 0.0;      // bound on mass not accounted for below
  double z = 0.0;                    // sum of h_j including any closed-form tail
  std::optional<double> tail_ratio;  // geometric ratio of pi beyond the last entry

  double pi0() const { return pi.front(); }
  double pi_at(std::size_t i) const;
  double explicit_mass() const;
  // Closed-form mass beyond the explicit states (0 when no tail_ratio).
  double tail_mass() const;
};

// Stationary distribution pi_i = h_i / Z with h_i = prod_{j<=i} rho_j.
// Geometric tails are summed in closed form (tail_mass_bound = 0); finite
// profiles normalize exactly. Products run in log space whenever some
// rho > 1 so long high-price prefixes cannot overflow.
StationaryDist stationary_truncated(const RhoProfile& profile, double tol = 1e-12);

// Same distribution with the tail expanded state by state until the geometric
// bound on the remaining mass drops below tol. Cross-check path for the
// closed-form tail evaluation.
StationaryDist stationary_enumerated(const RhoProfile& profile, double tol = 1e-12);

// E[N] = sum_i i pi_i, with the geometric tail summed in closed form:
// sum_{i>k} i h_i = h_k [ k r/(1-r) + r/(1-r)^2 ].
double mean_occupancy(const StationaryDist& dist);

// f = 1/pi_0 = sum_j h_j and m = sum_i (i - cap) h_i; m = 0 iff E[N] = cap.
std::pair<double, double> f_and_m(const RhoProfile& profile, const MomentCap& cap);

struct Sensitivity {
  double dpi0;
  double dmean;
};

// Forward finite-difference sensitivities of pi_0 and E[N] to rho_i.
// For any positive recurrent profile dpi0 < 0 and dmean > 0.
Sensitivity monotonicity_probe(const RhoProfile& profile, std::size_t i, double h);

}  // namespace tsm
