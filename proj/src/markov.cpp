#include "tsm/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsm {

namespace {

constexpr double kLogMax = 709.0;       // just below log(DBL_MAX)
constexpr double kBoundSlack = 1e-9;    // relative slack for box membership

bool in_bounds(double v, const RhoBounds& b) {
  const double slack = kBoundSlack * std::max(1.0, std::max(std::fabs(b.lo), std::fabs(b.hi)));
  return v >= b.lo - slack && v <= b.hi + slack;
}

double logsumexp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

MomentCap::MomentCap(double c) : cap(c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument("MomentCap: cap must be positive and finite");
  }
}

RhoProfile::RhoProfile(std::vector<double> prefix, std::optional<double> tail, RhoBounds bounds)
    : prefix_(std::move(prefix)), tail_(tail), bounds_(bounds) {
  if (!(bounds_.lo > 0.0) || !(bounds_.hi >= bounds_.lo)) {
    throw std::invalid_argument("RhoProfile: bounds must satisfy 0 < lo <= hi");
  }
  for (double r : prefix_) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("RhoProfile: rho entries must be positive and finite");
    }
    if (!in_bounds(r, bounds_)) {
      throw BoundViolation("RhoProfile: rho entry " + std::to_string(r) + " outside [" +
                           std::to_string(bounds_.lo) + ", " + std::to_string(bounds_.hi) + "]");
    }
  }
  if (tail_) {
    if (!(*tail_ > 0.0) || !std::isfinite(*tail_)) {
      throw std::invalid_argument("RhoProfile: tail rho must be positive and finite");
    }
    if (*tail_ >= 1.0) {
      throw NonRecurrent("RhoProfile: tail rho " + std::to_string(*tail_) +
                         " >= 1 breaks positive recurrence");
    }
    if (!in_bounds(*tail_, bounds_)) {
      throw BoundViolation("RhoProfile: tail rho outside bounds");
    }
  } else if (prefix_.empty()) {
    throw std::invalid_argument("RhoProfile: empty profile");
  }
}

// The convenience factories pad the fitted box so finite-difference probes
// have room to move; callers that care about exact bounds pass them directly.
RhoProfile RhoProfile::finite(std::vector<double> prefix) {
  if (prefix.empty()) throw std::invalid_argument("RhoProfile::finite: empty prefix");
  const auto [lo, hi] = std::minmax_element(prefix.begin(), prefix.end());
  const RhoBounds b{*lo * 0.5, *hi * 2.0};
  return RhoProfile(std::move(prefix), std::nullopt, b);
}

RhoProfile RhoProfile::with_tail(std::vector<double> prefix, double tail) {
  double lo = tail, hi = tail;
  for (double r : prefix) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return RhoProfile(std::move(prefix), tail, RhoBounds{lo * 0.5, hi * 2.0});
}

RhoProfile RhoProfile::constant(double tail) {
  return RhoProfile({}, tail, RhoBounds{tail * 0.5, tail * 2.0});
}

double RhoProfile::rho(std::size_t i) const {
  if (i == 0) throw std::invalid_argument("RhoProfile::rho: index starts at 1");
  if (i <= prefix_.size()) return prefix_[i - 1];
  if (tail_) return *tail_;
  throw std::invalid_argument("RhoProfile::rho: index beyond finite chain");
}

RhoProfile RhoProfile::with_rho(std::size_t i, double value) const {
  if (i == 0 || i > prefix_.size()) {
    throw std::invalid_argument("RhoProfile::with_rho: index must lie in the explicit prefix");
  }
  if (!in_bounds(value, bounds_)) {
    throw BoundViolation("RhoProfile::with_rho: value " + std::to_string(value) +
                         " exits [" + std::to_string(bounds_.lo) + ", " +
                         std::to_string(bounds_.hi) + "]");
  }
  std::vector<double> p = prefix_;
  p[i - 1] = value;
  return RhoProfile(std::move(p), tail_, bounds_);
}

double StationaryDist::pi_at(std::size_t i) const {
  if (i < pi.size()) return pi[i];
  if (tail_ratio) {
    return pi.back() * std::pow(*tail_ratio, static_cast<double>(i - (pi.size() - 1)));
  }
  return 0.0;
}

double StationaryDist::explicit_mass() const {
  double s = 0.0;
  for (double p : pi) s += p;
  return s;
}

double StationaryDist::tail_mass() const {
  if (!tail_ratio) return 0.0;
  const double r = *tail_ratio;
  return pi.back() * r / (1.0 - r);
}

namespace {

// Log-domain h products for the explicit states 0..n. Throws Overflow when a
// prefix product leaves the representable range.
std::vector<double> log_h(const RhoProfile& profile) {
  const std::size_t n = profile.prefix().size();
  std::vector<double> lh(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    lh[i] = lh[i - 1] + std::log(profile.prefix()[i - 1]);
    if (lh[i] > kLogMax) {
      throw Overflow("stationary: h_" + std::to_string(i) + " exceeds double range");
    }
  }
  return lh;
}

StationaryDist from_log_h(const RhoProfile& profile, const std::vector<double>& lh) {
  StationaryDist out;
  std::vector<double> terms = lh;
  if (profile.tail()) {
    const double r = *profile.tail();
    terms.push_back(lh.back() + std::log(r / (1.0 - r)));
  }
  const double lz = logsumexp(terms);
  if (lz > kLogMax) throw Overflow("stationary: normalization constant exceeds double range");
  out.z = std::exp(lz);
  out.pi.resize(lh.size());
  for (std::size_t i = 0; i < lh.size(); ++i) out.pi[i] = std::exp(lh[i] - lz);
  if (profile.tail()) out.tail_ratio = *profile.tail();
  out.tail_mass_bound = 0.0;
  return out;
}

}  // namespace

StationaryDist stationary_truncated(const RhoProfile& profile, double tol) {
  if (!(tol > 0.0) || !(tol < 1.0)) {
    throw std::invalid_argument("stationary_truncated: tol must lie in (0, 1)");
  }
  bool any_supercritical = false;
  for (double r : profile.prefix()) any_supercritical |= (r > 1.0);

  if (!any_supercritical) {
    // Direct products; nothing can overflow upward.
    const std::size_t n = profile.prefix().size();
    std::vector<double> h(n + 1, 1.0);
    for (std::size_t i = 1; i <= n; ++i) h[i] = h[i - 1] * profile.prefix()[i - 1];
    double z = 0.0;
    for (double v : h) z += v;
    StationaryDist out;
    if (profile.tail()) {
      const double r = *profile.tail();
      z += h.back() * r / (1.0 - r);
      out.tail_ratio = r;
    }
    out.z = z;
    out.pi.resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) out.pi[i] = h[i] / z;
    out.tail_mass_bound = 0.0;
    return out;
  }
  return from_log_h(profile, log_h(profile));
}

StationaryDist stationary_enumerated(const RhoProfile& profile, double tol) {
  if (!(tol > 0.0) || !(tol < 1.0)) {
    throw std::invalid_argument("stationary_enumerated: tol must lie in (0, 1)");
  }
  if (profile.is_finite()) return stationary_truncated(profile, tol);

  const double r = *profile.tail();
  std::vector<double> lh = log_h(profile);
  const double log_r = std::log(r);
  const double log_tail_factor = std::log(r / (1.0 - r));

  // Extend until the geometric bound on the remaining mass, relative to the
  // partial normalization, drops below tol.
  double lse = logsumexp(lh);
  constexpr std::size_t kMaxStates = 50'000'000;
  while (lh.back() + log_tail_factor - lse >= std::log(tol)) {
    if (lh.size() > kMaxStates) {
      throw Overflow("stationary_enumerated: tail expansion did not contract");
    }
    const double next = lh.back() + log_r;
    lse = std::max(lse, next) + std::log1p(std::exp(std::min(lse, next) - std::max(lse, next)));
    lh.push_back(next);
  }

  StationaryDist out;
  out.z = std::exp(lse);
  if (lse > kLogMax) throw Overflow("stationary_enumerated: normalization exceeds double range");
  out.pi.resize(lh.size());
  for (std::size_t i = 0; i < lh.size(); ++i) out.pi[i] = std::exp(lh[i] - lse);
  out.tail_mass_bound = std::exp(lh.back() + log_tail_factor - lse);
  return out;
}

double mean_occupancy(const StationaryDist& dist) {
  double mean = 0.0;
  for (std::size_t i = 1; i < dist.pi.size(); ++i) mean += static_cast<double>(i) * dist.pi[i];
  if (dist.tail_ratio) {
    const double r = *dist.tail_ratio;
    const double k = static_cast<double>(dist.pi.size() - 1);
    mean += dist.pi.back() * (k * r / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)));
  }
  return mean;
}

std::pair<double, double> f_and_m(const RhoProfile& profile, const MomentCap& cap) {
  const StationaryDist dist = stationary_truncated(profile);
  const double f = dist.z;
  const double m = (mean_occupancy(dist) - cap.cap) * f;
  return {f, m};
}

Sensitivity monotonicity_probe(const RhoProfile& profile, std::size_t i, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("monotonicity_probe: step must be positive");
  const RhoProfile bumped = profile.with_rho(i, profile.rho(i) + h);  // BoundViolation on exit
  const StationaryDist base = stationary_truncated(profile);
  const StationaryDist pert = stationary_truncated(bumped);
  return Sensitivity{(pert.pi0() - base.pi0()) / h,
                     (mean_occupancy(pert) - mean_occupancy(base)) / h};
}

}  // namespace tsm
