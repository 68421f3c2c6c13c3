#include "tsm/loss_opt.hpp"

#include <algorithm>
#include <cmath>

#include "tsm/golden.hpp"

namespace tsm {

namespace {

// Largest price keeping the chain stable: g(p) > lambda for p < p_crit.
double stability_price(const PriceModel& m) {
  const double root = m.theta == 1.0 ? m.lambda : std::pow(m.lambda, 1.0 / m.theta);
  return (m.beta_d - root) / m.alpha_d;
}

double static_value(const PriceModel& m, double p) {
  return p - m.w_tilde() / (m.g(p) - m.lambda);
}

double light_traffic_scale(const PriceModel& m) {
  // B = (w~ alpha theta)^{1/(theta+1)} (1 + 1/theta)
  return std::pow(m.w_tilde() * m.alpha_d * m.theta, 1.0 / (m.theta + 1.0)) *
         (1.0 + 1.0 / m.theta);
}

}  // namespace

StaticOptimum optimal_static_price(const PriceModel& m, bool force_numeric) {
  const double wt = m.w_tilde();
  if (m.linear() && !force_numeric) {
    const double s = std::sqrt(m.alpha_d * wt);
    if (m.mu_max() >= m.lambda + s) {
      const double p = (m.beta_d - s - m.lambda) / m.alpha_d;
      if (p <= m.p_max) {
        return {p, (m.beta_d - 2.0 * s - m.lambda) / m.alpha_d, true};
      }
    }
  }
  if (!(m.g(m.p_min) > m.lambda)) {
    throw NoStablePrice("optimal_static_price: g(p) <= lambda on the whole box");
  }
  const double p_crit = stability_price(m);
  double hi = m.p_max;
  if (p_crit <= m.p_max) {
    hi = p_crit - 1e-9 * (p_crit - m.p_min);  // stay strictly inside the stable region
  }
  const GoldenResult best =
      golden_section_max([&](double p) { return static_value(m, p); }, m.p_min, hi, 1e-12);
  return {best.x, best.value, false};
}

BoundsReport universal_bounds(const PriceModel& m) {
  BoundsReport out;
  const double lam_root = m.theta == 1.0 ? m.lambda : std::pow(m.lambda, 1.0 / m.theta);
  out.g_inv_bound = (m.beta_d - lam_root) / m.alpha_d;

  // Boxed light-traffic bound: p - w~/g(p) is concave, so clamping the
  // unconstrained maximizer into the box lands on the boxed maximum.
  const double u_star =
      std::pow(m.theta * m.w_tilde() * m.alpha_d, 1.0 / (m.theta + 1.0));
  const double p_unc = (m.beta_d - u_star) / m.alpha_d;
  const double p_box = std::clamp(p_unc, m.p_min, m.p_max);
  out.light_traffic_bound_boxed = p_box - m.w_tilde() / m.g(p_box);

  out.light_traffic_bound_relaxed = (m.beta_d - light_traffic_scale(m)) / m.alpha_d;
  out.combined = std::min(out.g_inv_bound, out.light_traffic_bound_boxed);
  return out;
}

BangBangOptimum optimize_bangbang(const PriceModel& m, double x_max, double grid) {
  if (!m.linear()) {
    throw RequiresLinearModel("optimize_bangbang: bang-bang optimality needs theta = 1");
  }
  if (!(grid > 0.0) || !(x_max >= 0.0)) {
    throw std::invalid_argument("optimize_bangbang: need grid > 0 and x_max >= 0");
  }

  const std::size_t n = static_cast<std::size_t>(std::floor(x_max / grid + 1e-9));
  std::vector<double> xs(n + 1), rel(n + 1), orig(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    xs[i] = static_cast<double>(i) * grid;
    const ObjectivePair pair = evaluate_policy(m, Policy::bang_bang(xs[i]));
    rel[i] = pair.c_rel;
    orig[i] = pair.c;
  }

  auto refine = [&](const std::vector<double>& vals, auto&& f) {
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i) {
      if (vals[i] > vals[best]) best = i;
    }
    const double lo = best == 0 ? 0.0 : xs[best - 1];
    const double hi = best == n ? xs[n] : xs[best + 1];
    GoldenResult res = golden_section_max(f, lo, hi, 1e-6);
    if (vals[best] > res.value) res = {xs[best], vals[best]};
    return res;
  };

  const GoldenResult r = refine(rel, [&](double x) {
    return objective_crel(m, Policy::bang_bang(x));
  });
  const GoldenResult c = refine(orig, [&](double x) {
    return objective_c(m, Policy::bang_bang(x));
  });
  return {r.x, r.value, c.x, c.value};
}

BruteForceResult brute_force_min_pi0(int n_states, const std::vector<double>& levels,
                                     const MomentCap& cap) {
  if (n_states < 2) throw std::invalid_argument("brute_force_min_pi0: need >= 2 states");
  if (levels.empty()) throw std::invalid_argument("brute_force_min_pi0: empty level set");
  for (double v : levels) {
    if (!(v > 0.0)) throw std::invalid_argument("brute_force_min_pi0: levels must be positive");
  }
  std::vector<double> sorted = levels;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const RhoBounds bounds{sorted.back(), sorted.front()};

  const std::size_t slots = static_cast<std::size_t>(n_states - 1);
  std::vector<std::size_t> idx(slots, 0);  // odometer over sorted (descending) levels

  BruteForceResult best;
  bool found = false;
  for (;;) {
    std::vector<double> rho(slots);
    for (std::size_t k = 0; k < slots; ++k) rho[k] = sorted[idx[k]];
    const StationaryDist dist = stationary_truncated(RhoProfile(rho, std::nullopt, bounds));
    const double mean_n = mean_occupancy(dist);
    if (mean_n <= cap.cap + 1e-12) {
      // Descending enumeration + strict improvement = lexicographically
      // largest prefix wins ties.
      if (!found || dist.pi0() < best.pi0) {
        best = {rho, dist.pi0(), mean_n};
        found = true;
      }
    }
    std::size_t k = slots;
    while (k > 0) {
      --k;
      if (++idx[k] < sorted.size()) break;
      idx[k] = 0;
      if (k == 0) {
        if (!found) {
          throw Infeasible("brute_force_min_pi0: no assignment satisfies the moment cap");
        }
        return best;
      }
    }
  }
}

namespace {

// S1 = sum_{j >= i+2} prod_{k=i+2..j} rho_k and
// S2 = sum_{j >= i+2} (j - C) prod_{k=i+2..j} rho_k, with the geometric tail
// folded in closed form when present.
void perturb_series(const RhoProfile& profile, std::size_t i, double cap, double* s1,
                    double* s2) {
  *s1 = 0.0;
  *s2 = 0.0;
  const std::size_t n = profile.prefix().size();
  double prod = 1.0;
  for (std::size_t j = i + 2; j <= n; ++j) {
    prod *= profile.prefix()[j - 1];
    *s1 += prod;
    *s2 += (static_cast<double>(j) - cap) * prod;
  }
  if (profile.tail()) {
    const double r = *profile.tail();
    const double geo = r / (1.0 - r);
    // prod now holds prod_{k=i+2..n}; states beyond n multiply it by r^{j-n}.
    *s1 += prod * geo;
    *s2 += prod * ((static_cast<double>(n) - cap) * geo + r / ((1.0 - r) * (1.0 - r)));
  }
}

}  // namespace

PerturbResult improving_perturbation(const RhoProfile& profile, std::size_t i, double eps,
                             const MomentCap& cap) {
  const std::size_t n = profile.prefix().size();
  if (i < 1 || i + 1 > n) {
    throw PreconditionViolation("improving_perturbation: i and i+1 must lie in the explicit prefix");
  }
  if (!(eps > 0.0)) throw PreconditionViolation("improving_perturbation: eps must be positive");

  const auto [f0, m0] = f_and_m(profile, cap);
  if (std::fabs(m0) > 1e-9) {
    throw PreconditionViolation("improving_perturbation: m(profile) = " + std::to_string(m0) +
                                " is not 0");
  }

  const RhoBounds& b = profile.bounds();
  const double tol = 1e-12 * std::max(1.0, b.hi);
  const double rho_i = profile.rho(i);
  const double rho_next = profile.rho(i + 1);
  if (!(rho_i < b.hi - tol) || !(rho_next > b.lo + tol)) {
    throw PreconditionViolation("improving_perturbation: (i, i+1) already at the bang-bang corner");
  }
  if (rho_i + eps > b.hi + tol) {
    throw PreconditionViolation("improving_perturbation: eps pushes rho_i past the upper bound");
  }

  double s1 = 0.0, s2 = 0.0;
  perturb_series(profile, i, cap.cap, &s1, &s2);
  const double denom = (static_cast<double>(i) + 1.0 - cap.cap) + s2;
  if (std::fabs(denom) < 1e-14) {
    throw PreconditionViolation("improving_perturbation: degenerate m-invariance denominator");
  }

  const double new_prod =
      rho_i * rho_next - eps * (static_cast<double>(i) - cap.cap) / denom;
  const double rho_next_new = new_prod / (rho_i + eps);
  if (!(rho_next_new > 0.0) || rho_next_new < b.lo - tol || rho_next_new > b.hi + tol) {
    throw PreconditionViolation("improving_perturbation: solved rho_{i+1} exits the bounds");
  }

  const RhoProfile perturbed =
      profile.with_rho(i, rho_i + eps).with_rho(i + 1, rho_next_new);
  const auto [f1, m1] = f_and_m(perturbed, cap);
  return {perturbed, f1 - f0, m1};
}

CompetitiveReport competitive_cases(const PriceModel& m, double gamma) {
  if (!(gamma > 1.0)) throw std::invalid_argument("competitive_cases: gamma must exceed 1");
  const double scale = light_traffic_scale(m);
  const double lam_root = m.theta == 1.0 ? m.lambda : std::pow(m.lambda, 1.0 / m.theta);
  const bool heavy = lam_root >= scale;

  CompetitiveReport out;
  out.regime = heavy ? TrafficRegime::HeavyTraffic : TrafficRegime::LightTraffic;
  out.gamma = gamma;

  double target_mu, rate_term, holding_term;
  if (heavy) {
    target_mu = gamma * m.lambda;
    rate_term = std::pow(gamma * m.lambda, 1.0 / m.theta) / m.alpha_d;
    holding_term = m.w_tilde() / ((gamma - 1.0) * m.lambda);
  } else {
    const double b_theta = std::pow(scale, m.theta);
    target_mu = gamma * b_theta;
    rate_term = std::pow(gamma, 1.0 / m.theta) * scale / m.alpha_d;
    holding_term = m.w_tilde() / ((gamma - 1.0) * b_theta);
  }
  if (target_mu > m.mu_max() + 1e-12 * m.mu_max()) {
    throw InfeasibleRate("competitive_cases: target rate " + std::to_string(target_mu) +
                         " exceeds mu_max " + std::to_string(m.mu_max()));
  }
  out.payoff_lower = m.beta_d / m.alpha_d - rate_term - holding_term;
  const double min_reduction = std::max(lam_root, scale) / m.alpha_d;
  out.reduction_ratio_estimate = (rate_term + holding_term) / min_reduction;
  return out;
}

bool bangbang_shaped(const std::vector<double>& rho, double lo, double hi, double tol) {
  int intermediates = 0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (k + 1 < rho.size() && rho[k] < rho[k + 1] - tol) return false;
    if (rho[k] > lo + tol && rho[k] < hi - tol) ++intermediates;
  }
  return intermediates <= 1;
}

}  // namespace tsm
