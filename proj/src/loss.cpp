#include "tsm/loss.hpp"

#include <cmath>

namespace tsm {

namespace {
constexpr double kBoxSlack = 1e-12;
}

PriceModel::PriceModel(double alpha, double beta, double theta_, double pmin, double pmax,
                       double lam, double w_)
    : alpha_d(alpha), beta_d(beta), theta(theta_), p_min(pmin), p_max(pmax), lambda(lam), w(w_) {
  if (!(alpha_d > 0.0) || !(beta_d > 0.0)) {
    throw std::invalid_argument("PriceModel: alpha and beta must be positive");
  }
  if (!(theta > 0.0) || !(theta <= 1.0)) {
    throw std::invalid_argument("PriceModel: theta must lie in (0, 1]");
  }
  if (!(0.0 < p_min && p_min < p_max && p_max < beta_d / alpha_d)) {
    throw std::invalid_argument("PriceModel: need 0 < p_min < p_max < beta/alpha");
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("PriceModel: lambda must be positive");
  if (!(w > 0.0)) throw std::invalid_argument("PriceModel: w must be positive");
  if (!(mu_max() > lambda)) {
    throw std::invalid_argument("PriceModel: feasibility needs g(p_min) > lambda");
  }
}

double PriceModel::g(double p) const {
  const double base = beta_d - alpha_d * p;
  return theta == 1.0 ? base : std::pow(base, theta);
}

PriceModel PriceModel::with_w(double w_) const {
  return PriceModel(alpha_d, beta_d, theta, p_min, p_max, lambda, w_);
}

double g_eval(const PriceModel& m, double p) {
  const double slack = kBoxSlack * (m.p_max - m.p_min);
  if (p < m.p_min - slack || p > m.p_max + slack) {
    throw PriceOutOfRange("g_eval: price " + std::to_string(p) + " outside [" +
                          std::to_string(m.p_min) + ", " + std::to_string(m.p_max) + "]");
  }
  return m.g(p);
}

double g_inverse(const PriceModel& m, double mu) {
  const double slack = kBoxSlack * (m.mu_max() - m.mu_min());
  if (mu < m.mu_min() - slack || mu > m.mu_max() + slack) {
    throw RateOutOfRange("g_inverse: rate " + std::to_string(mu) + " outside [" +
                         std::to_string(m.mu_min()) + ", " + std::to_string(m.mu_max()) + "]");
  }
  const double root = m.theta == 1.0 ? mu : std::pow(mu, 1.0 / m.theta);
  return (m.beta_d - root) / m.alpha_d;
}

Policy Policy::static_price(double p) {
  Policy out;
  out.kind_ = Kind::Static;
  out.static_p_ = p;
  return out;
}

Policy Policy::bang_bang(double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::invalid_argument("Policy::bang_bang: x must be finite and >= 0");
  }
  Policy out;
  out.kind_ = Kind::BangBang;
  out.x_ = x;
  return out;
}

Policy Policy::tabular(std::vector<double> prices, std::optional<double> tail_price) {
  if (prices.empty()) throw std::invalid_argument("Policy::tabular: empty price table");
  Policy out;
  out.kind_ = Kind::Tabular;
  out.prices_ = std::move(prices);
  out.tail_price_ = tail_price;
  return out;
}

double Policy::static_p() const {
  if (kind_ != Kind::Static) throw std::logic_error("Policy::static_p: not a static policy");
  return static_p_;
}

double Policy::x() const {
  if (kind_ != Kind::BangBang) throw std::logic_error("Policy::x: not a bang-bang policy");
  return x_;
}

Policy::Schedule Policy::schedule(const PriceModel& m) const {
  Schedule sched;
  switch (kind_) {
    case Kind::Static:
      sched.price = {static_p_};
      sched.tail_price = static_p_;
      break;
    case Kind::BangBang: {
      const std::size_t level = static_cast<std::size_t>(std::ceil(x_));
      sched.price.assign(level + 1, m.p_max);
      if (level >= 1) {
        sched.price[level] =
            m.p_max - (std::ceil(x_) - x_) * (m.p_max - m.p_min);
      }
      sched.tail_price = m.p_min;
      break;
    }
    case Kind::Tabular:
      sched.price.reserve(prices_.size() + 1);
      sched.price.push_back(m.p_max);
      sched.price.insert(sched.price.end(), prices_.begin(), prices_.end());
      sched.tail_price = tail_price_.value_or(prices_.back());
      break;
  }
  const double slack = kBoxSlack * (m.p_max - m.p_min);
  auto check = [&](double p) {
    if (p < m.p_min - slack || p > m.p_max + slack) {
      throw PriceOutOfRange("Policy: price " + std::to_string(p) + " outside the model box");
    }
  };
  for (double p : sched.price) check(p);
  check(sched.tail_price);
  return sched;
}

RhoProfile policy_rates(const PriceModel& m, const Policy& policy) {
  const Policy::Schedule sched = policy.schedule(m);
  std::vector<double> prefix;
  prefix.reserve(sched.cutoff());
  for (std::size_t i = 1; i < sched.price.size(); ++i) {
    prefix.push_back(m.lambda / m.g(sched.price[i]));
  }
  const double tail_rho = m.lambda / m.g(sched.tail_price);
  const RhoBounds bounds{m.lambda / m.mu_max(), m.lambda / m.mu_min()};
  return RhoProfile(std::move(prefix), tail_rho, bounds);  // NonRecurrent if tail_rho >= 1
}

ObjectivePair evaluate_policy(const PriceModel& m, const Policy& policy) {
  const Policy::Schedule sched = policy.schedule(m);
  const RhoProfile profile = policy_rates(m, policy);
  const StationaryDist dist = stationary_truncated(profile);
  const double mean_n = mean_occupancy(dist);
  const double tail_mass = dist.tail_mass();
  const std::size_t cutoff = sched.cutoff();  // == dist.pi.size() - 1

  // C_rel: price averaged under pi itself.
  double crel_price = tail_mass * sched.tail_price;
  for (std::size_t i = 0; i <= cutoff; ++i) crel_price += dist.pi[i] * sched.price[i];

  // C: a departure out of state i leaves i-1 behind, so p_i pairs with pi_{i-1}.
  double c_price = sched.tail_price * (dist.pi[cutoff] + tail_mass);
  for (std::size_t i = 1; i <= cutoff; ++i) c_price += dist.pi[i - 1] * sched.price[i];

  ObjectivePair out;
  out.c = c_price - m.w * mean_n;
  out.c_rel = crel_price - m.w * mean_n;
  out.pi0 = dist.pi0();
  out.mean_n = mean_n;
  return out;
}

double objective_crel(const PriceModel& m, const Policy& policy) {
  return evaluate_policy(m, policy).c_rel;
}

double objective_c(const PriceModel& m, const Policy& policy) {
  return evaluate_policy(m, policy).c;
}

double pi0_payoff_identity(const PriceModel& m, const Policy& policy) {
  if (!m.linear()) {
    throw RequiresLinearModel("pi0_payoff_identity: identity holds for theta = 1 only");
  }
  const Policy::Schedule sched = policy.schedule(m);
  const StationaryDist dist = stationary_truncated(policy_rates(m, policy));
  const double mu0 = m.g(sched.price[0]);
  return (m.beta_d - dist.pi0() * mu0 - m.lambda) / m.alpha_d -
         m.w * mean_occupancy(dist);
}

}  // namespace tsm
