#include "tsm/queue.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <utility>

#include "tsm/golden.hpp"

namespace tsm {

DemandCurve::DemandCurve(std::function<double(double)> eval, double lo, double hi)
    : eval_(std::move(eval)), lo_(lo), hi_(hi) {
  if (!(lo_ >= 0.0) || !(hi_ > lo_)) {
    throw ConfigInvalid("DemandCurve: need 0 <= p_lo < p_hi");
  }
  validate();
}

void DemandCurve::validate() const {
  constexpr int kGrid = 512;
  const double h = (hi_ - lo_) / kGrid;
  double prev_mu = eval_(lo_);
  if (!(prev_mu >= 0.0) || !std::isfinite(prev_mu)) {
    throw ConfigInvalid("DemandCurve: mu(p_lo) must be finite and non-negative");
  }
  const double scale = std::max(1.0, prev_mu);
  const double tol = 1e-9 * scale;

  bool revenue_fell = false;
  double prev_rev = lo_ * prev_mu;
  for (int k = 1; k <= kGrid; ++k) {
    const double p = lo_ + k * h;
    const double mu = eval_(p);
    if (!std::isfinite(mu) || mu < -tol) {
      throw ConfigInvalid("DemandCurve: mu must stay finite and non-negative");
    }
    if (mu > prev_mu + tol) throw ConfigInvalid("DemandCurve: mu(p) must be non-increasing");
    const double mid = eval_(p - 0.5 * h);
    if (mid + tol < 0.5 * (mu + prev_mu)) {
      throw ConfigInvalid("DemandCurve: mu(p) must be concave");
    }
    const double rev = p * mu;
    if (rev > prev_rev + tol) {
      if (revenue_fell) throw ConfigInvalid("DemandCurve: p*mu(p) must be unimodal");
    } else if (rev < prev_rev - tol) {
      revenue_fell = true;
    }
    prev_mu = mu;
    prev_rev = rev;
  }
}

DemandCurve DemandCurve::linear(double intercept, double slope, double p_lo, double p_hi) {
  if (!(slope > 0.0)) throw ConfigInvalid("DemandCurve::linear: slope must be positive");
  return DemandCurve(
      [intercept, slope](double p) { return std::max(0.0, intercept - slope * p); }, p_lo,
      p_hi);
}

DemandCurve DemandCurve::power(double beta, double alpha, double theta, double p_lo,
                               double p_hi) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(theta > 0.0) || !(theta <= 1.0)) {
    throw ConfigInvalid("DemandCurve::power: need alpha, beta > 0 and theta in (0, 1]");
  }
  return DemandCurve(
      [beta, alpha, theta](double p) {
        return std::pow(std::max(0.0, beta - alpha * p), theta);
      },
      p_lo, p_hi);
}

DemandCurve DemandCurve::table(std::vector<double> prices, std::vector<double> rates) {
  if (prices.size() != rates.size() || prices.size() < 2) {
    throw ConfigInvalid("DemandCurve::table: need matching samples, at least two");
  }
  for (std::size_t k = 1; k < prices.size(); ++k) {
    if (!(prices[k] > prices[k - 1])) {
      throw ConfigInvalid("DemandCurve::table: prices must be strictly increasing");
    }
  }
  const double lo = prices.front();
  const double hi = prices.back();
  auto eval = [prices = std::move(prices), rates = std::move(rates)](double p) {
    if (p <= prices.front()) return rates.front();
    if (p >= prices.back()) return rates.back();
    const auto it = std::upper_bound(prices.begin(), prices.end(), p);
    const std::size_t k = static_cast<std::size_t>(it - prices.begin());
    const double t = (p - prices[k - 1]) / (prices[k] - prices[k - 1]);
    return rates[k - 1] + t * (rates[k] - rates[k - 1]);
  };
  return DemandCurve(std::move(eval), lo, hi);
}

PStar solve_pstar(const DemandCurve& demand, double lambda) {
  if (!(lambda > 0.0)) throw ConfigInvalid("solve_pstar: lambda must be positive");
  if (demand.mu(demand.p_hi()) > lambda) {
    throw InfeasibleDemand("solve_pstar: mu(p) > lambda over the whole domain");
  }
  double feas_lo = demand.p_lo();
  if (demand.mu(feas_lo) > lambda) {
    // mu is non-increasing: bisect for the boundary of {p : mu(p) <= lambda}.
    double lo = demand.p_lo(), hi = demand.p_hi();
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * (demand.p_hi() - demand.p_lo()); ++it) {
      const double mid = 0.5 * (lo + hi);
      (demand.mu(mid) > lambda ? lo : hi) = mid;
    }
    feas_lo = hi;
  }
  const GoldenResult best = golden_section_max(
      [&](double p) { return p * demand.mu(p); }, feas_lo, demand.p_hi(), 1e-12);
  const double mu_star = demand.mu(best.x);
  const PStarRegime regime =
      std::fabs(mu_star - lambda) <= 1e-9 ? PStarRegime::Equality : PStarRegime::Slack;
  return {best.x, mu_star, regime};
}

double delta_schedule(double u, double decay_exponent, double sigma_c_sq) {
  if (!(u > 1.0)) throw ConfigInvalid("delta_schedule: U must exceed 1");
  return decay_exponent * sigma_c_sq * std::log(u) / u;
}

double match_amount(double n, double mu_star, double delta, double u) {
  if (n < mu_star - delta) return 0.0;
  const double m = (n > 0.5 * u) ? mu_star + delta : mu_star - delta;
  return std::min(m, n);
}

double profit_value(ProfitFn fn, double x) {
  return fn == ProfitFn::Identity ? x : std::log1p(x);
}

double profit_upper_bound(const DemandCurve& demand, double lambda, ProfitFn fn) {
  const PStar ps = solve_pstar(demand, lambda);
  return profit_value(fn, ps.p_star * ps.mu_star);
}

ResolvedQueue resolve_config(const QueueConfig& cfg) {
  if (!(cfg.u_threshold > 1.0)) throw ConfigInvalid("QueueConfig: U must exceed 1");
  if (!(cfg.decay_exponent >= 2.0)) {
    throw ConfigInvalid("QueueConfig: decay_exponent must be >= 2");
  }
  if (!(cfg.sigma_c_sq > 0.0)) throw ConfigInvalid("QueueConfig: sigma_c_sq must be positive");

  ResolvedQueue r;
  const PStar ps = solve_pstar(cfg.demand, cfg.lambda);
  r.p_star = ps.p_star;
  r.mu_star = ps.mu_star;
  r.regime = ps.regime;
  r.delta = cfg.delta_override
                ? *cfg.delta_override
                : delta_schedule(cfg.u_threshold, cfg.decay_exponent, cfg.sigma_c_sq);
  if (!(r.delta > 0.0) || r.delta >= r.mu_star) {
    throw ConfigInvalid("QueueConfig: need 0 < delta < mu(p*); got delta = " +
                        std::to_string(r.delta));
  }
  if (0.5 * cfg.u_threshold < r.mu_star + r.delta) {
    throw ConfigInvalid("QueueConfig: U/2 must be at least mu(p*) + delta");
  }
  r.s_bar = cfg.s_bar > 0.0 ? cfg.s_bar : 4.0 * cfg.u_threshold;
  if (!(r.s_bar > cfg.u_threshold)) throw ConfigInvalid("QueueConfig: s_bar must exceed U");

  r.p_eff = r.p_star;
  if (r.regime == PStarRegime::Equality) {
    r.p_eff = std::min(r.p_star * (1.0 + cfg.epsilon_scale), cfg.demand.p_hi());
  }
  r.mu_eff = cfg.demand.mu(r.p_eff);
  if (!(r.mu_eff < cfg.lambda) && r.regime == PStarRegime::Equality) {
    throw ConfigInvalid("QueueConfig: epsilon bump failed to push mu below lambda");
  }
  r.jensen_bound = profit_value(cfg.profit_fn, r.p_star * r.mu_star);
  return r;
}

QueueState step(const QueueState& state, double a, double b, double mu_star, double delta,
                double u, double s_bar) {
  if (a < 0.0 || b < 0.0) throw std::invalid_argument("step: arrivals must be >= 0");
  const double m = match_amount(state.n(), mu_star, delta, u);
  QueueState next;
  next.s = std::min(std::max(state.s + a - m, 0.0), s_bar);
  next.q_c = std::max(state.q_c + b - m, 0.0);
  next.t = state.t + 1;
  return next;
}

namespace {

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

struct Sampler {
  ArrivalKind kind;
  double rate;
  double batch = 0.0;   // BernoulliBatch size
  double prob = 0.0;    // BernoulliBatch success probability

  static Sampler make(ArrivalKind kind, double rate) {
    Sampler s{kind, rate};
    if (kind == ArrivalKind::BernoulliBatch) {
      s.batch = std::ceil(rate) + 1.0;
      s.prob = rate / s.batch;
    }
    return s;
  }

  double draw(RngHandle& rng) const {
    switch (kind) {
      case ArrivalKind::Poisson:
        return static_cast<double>(poisson_sample(rng, rate));
      case ArrivalKind::Deterministic:
        return rate;
      case ArrivalKind::BernoulliBatch:
        return rng.next_unit() < prob ? batch : 0.0;
    }
    return 0.0;
  }
};

}  // namespace

SimReport simulate(const QueueConfig& cfg, std::int64_t horizon, std::int64_t warmup,
                   std::uint64_t seed, std::uint64_t stream_id) {
  constexpr int kBatches = 30;
  if (horizon < 10 * kBatches) throw ConfigInvalid("simulate: horizon too short for batch means");
  if (warmup < 0) throw ConfigInvalid("simulate: warmup must be >= 0");
  const ResolvedQueue r = resolve_config(cfg);

  const Sampler server_arrivals = Sampler::make(cfg.server_arrivals, cfg.lambda);
  const Sampler customer_arrivals = Sampler::make(cfg.customer_arrivals, r.mu_eff);
  RngHandle rng_servers(seed, 2 * stream_id);
  RngHandle rng_customers(seed, 2 * stream_id + 1);

  BatchAccumulator acc_n(horizon, kBatches);
  BatchAccumulator acc_outage(horizon, kBatches);
  BatchAccumulator acc_high(horizon, kBatches);
  BatchAccumulator acc_tail(horizon, kBatches);
  BatchAccumulator acc_profit(horizon, kBatches);
  BatchAccumulator acc_wait(horizon, kBatches);
  const std::int64_t measured = acc_n.capacity();
  const std::int64_t total = warmup + measured;

  double s = 0.0, c = 0.0;
  std::deque<std::pair<std::int64_t, double>> fifo;  // (arrival slot, remaining amount)
  KahanSum cum_b, cum_m;
  const double half_u = 0.5 * cfg.u_threshold;
  const double outage_level = r.mu_star - r.delta;

  for (std::int64_t t = 0; t < total; ++t) {
    const double n = s < c ? s : c;
    const double m = match_amount(n, r.mu_star, r.delta, cfg.u_threshold);
    const bool measure = t >= warmup;

    double waited = 0.0;
    if (m > 0.0) {
      double remaining = m;
      while (remaining > 0.0 && !fifo.empty()) {
        auto& [arrived, amount] = fifo.front();
        const double take = std::min(amount, remaining);
        waited += take * static_cast<double>(t - arrived);
        amount -= take;
        remaining -= take;
        if (amount <= 0.0) fifo.pop_front();
      }
    }

    const double a = server_arrivals.draw(rng_servers);
    const double b = customer_arrivals.draw(rng_customers);
    if (b > 0.0) fifo.emplace_back(t, b);

    s = std::min(std::max(s + a - m, 0.0), r.s_bar);
    c = std::max(c + b - m, 0.0);
    cum_b.add(b);
    cum_m.add(m);

    if (measure) {
      acc_n.add(n);
      acc_outage.add(n < outage_level ? 1.0 : 0.0);
      acc_high.add(n > half_u ? 1.0 : 0.0);
      acc_tail.add(n >= cfg.u_threshold ? 1.0 : 0.0);
      acc_profit.add(profit_value(cfg.profit_fn, r.p_eff * m));
      acc_wait.add(waited, m);
    }
  }

  auto ci = [](const BatchStats& b) { return CiValue{b.overall_mean, b.ci_halfwidth}; };
  SimReport rep;
  rep.profit_rate = ci(acc_profit.finalize());
  rep.outage_prob = ci(acc_outage.finalize());
  rep.mean_n = ci(acc_n.finalize());
  rep.mean_w = ci(acc_wait.finalize());
  rep.frac_high = ci(acc_high.finalize());
  rep.frac_low = 1.0 - rep.frac_high.mean;
  rep.tail_above_u = acc_tail.finalize().overall_mean;
  rep.p_star = r.p_star;
  rep.mu_star = r.mu_star;
  rep.delta = r.delta;
  rep.p_eff = r.p_eff;
  rep.jensen_bound = r.jensen_bound;
  rep.horizon = measured;
  rep.warmup = warmup;
  rep.seed = seed;
  rep.stream_id = stream_id;
  rep.conservation_residual = std::fabs(cum_b.sum - cum_m.sum - c);
  return rep;
}

double tau_star(double mu_star, double delta, const std::function<double(double)>& log_mgf) {
  if (!(delta >= 0.0) || !(delta < mu_star)) {
    throw std::invalid_argument("tau_star: need 0 <= delta < mu_star");
  }
  if (delta == 0.0) return 0.0;
  const double drift = mu_star - delta;
  auto psi = [&](double tau) { return log_mgf(-tau) + tau * drift; };

  double hi = 1.0;
  int expansions = 0;
  while (psi(hi) <= 0.0) {
    hi *= 2.0;
    if (++expansions > 64 || !std::isfinite(psi(hi))) {
      throw NoRoot("tau_star: psi has no sign change in the expanded bracket");
    }
  }
  // psi(0) = 0 with psi'(0) = -delta < 0, so psi < 0 on (0, root); bisect.
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (psi(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::function<double(double)> poisson_log_mgf(double rate) {
  if (!(rate >= 0.0)) throw NegativeRate("poisson_log_mgf: rate must be >= 0");
  return [rate](double sexp) { return rate * std::expm1(sexp); };
}

}  // namespace tsm
