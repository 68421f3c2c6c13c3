#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tsm/loss.hpp"
#include "tsm/markov.hpp"
#include "tsm/stats.hpp"

namespace testsupport {

inline tsm::PriceModel fig2_model(double w) {
  return tsm::PriceModel(/*alpha=*/1.0, /*beta=*/3.5, /*theta=*/1.0,
                         /*pmin=*/1.0, /*pmax=*/2.0, /*lam=*/2.0, w);
}

inline double uniform_in(tsm::RngHandle& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.next_unit();
}

// Random tabular policy whose tail price keeps the chain stable.
inline tsm::Policy random_tabular(tsm::RngHandle& rng, const tsm::PriceModel& m) {
  const double lam_root = m.theta == 1.0 ? m.lambda : std::pow(m.lambda, 1.0 / m.theta);
  const double p_crit = (m.beta_d - lam_root) / m.alpha_d;
  const double stable_hi = std::min(m.p_max, p_crit) - 0.02 * (m.p_max - m.p_min);
  const std::size_t len = 1 + static_cast<std::size_t>(rng.next_u64() % 8);
  std::vector<double> prices(len);
  for (double& p : prices) p = uniform_in(rng, m.p_min, m.p_max);
  const double tail = uniform_in(rng, m.p_min, stable_hi);
  return tsm::Policy::tabular(prices, tail);
}

// Random model with a feasible box and theta drawn from {1} or (0.4, 1).
inline tsm::PriceModel random_model(tsm::RngHandle& rng, bool force_linear) {
  for (;;) {
    const double alpha = uniform_in(rng, 0.5, 2.0);
    const double beta = uniform_in(rng, 2.0, 6.0);
    const double theta = force_linear || rng.next_unit() < 0.5
                             ? 1.0
                             : uniform_in(rng, 0.4, 1.0);
    const double top = beta / alpha;
    const double p_min = uniform_in(rng, 0.05, 0.35) * top;
    const double p_max = uniform_in(rng, 0.5, 0.9) * top;
    const double mu_max = std::pow(beta - alpha * p_min, theta);
    const double lambda = uniform_in(rng, 0.3, 0.9) * mu_max;
    const double w = uniform_in(rng, 0.01, 0.5);
    try {
      return tsm::PriceModel(alpha, beta, theta, p_min, p_max, lambda, w);
    } catch (const std::invalid_argument&) {
      continue;
    }
  }
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace testsupport
