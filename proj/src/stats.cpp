#include "tsm/stats.hpp"

#include <cmath>
#include <cstdlib>

namespace tsm {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Hormann's PTRS transformed rejection, valid for rate >= 10.
long poisson_ptrs(RngHandle& rng, double mu) {
  const double b = 0.931 + 2.53 * std::sqrt(mu);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mu = std::log(mu);
  for (;;) {
    const double u = rng.next_unit() - 0.5;
    const double v = rng.next_unit();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        kf * log_mu - mu - std::lgamma(kf + 1.0)) {
      return static_cast<long>(kf);
    }
  }
}

}  // namespace

RngHandle::RngHandle(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id) {
  // Key derivation keeps distinct (seed, stream) pairs far apart in the walk.
  state_ = mix64(mix64(seed + kGolden) ^ (stream_id * 0xD2B74407B1CE6E93ull + 0x8AF8F2B6D55D8D2Dull));
}

std::uint64_t RngHandle::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngHandle::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

long poisson_sample(RngHandle& rng, double rate) {
  if (rate < 0.0 || !std::isfinite(rate)) {
    throw NegativeRate("poisson_sample: rate must be finite and >= 0, got " + std::to_string(rate));
  }
  if (rate == 0.0) return 0;
  if (rate < 10.0) {
    const double limit = std::exp(-rate);
    long k = 0;
    double prod = rng.next_unit();
    while (prod > limit) {
      prod *= rng.next_unit();
      ++k;
    }
    return k;
  }
  return poisson_ptrs(rng, rate);
}

BatchStats batch_ci(const std::vector<double>& series, int n_batches) {
  if (n_batches < 2) throw TooShort("batch_ci: need at least 2 batches");
  const std::int64_t n = static_cast<std::int64_t>(series.size());
  if (n < 2 * static_cast<std::int64_t>(n_batches)) {
    throw TooShort("batch_ci: series length " + std::to_string(n) +
                   " is shorter than 2 x " + std::to_string(n_batches) + " batches");
  }
  const std::int64_t batch_len = n / n_batches;
  BatchStats out;
  out.n_batches = n_batches;
  out.batch_means.resize(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    double sum = 0.0;
    const std::int64_t base = b * batch_len;
    for (std::int64_t j = 0; j < batch_len; ++j) sum += series[base + j];
    out.batch_means[b] = sum / static_cast<double>(batch_len);
  }
  double grand = 0.0;
  for (double m : out.batch_means) grand += m;
  grand /= n_batches;
  double ss = 0.0;
  for (double m : out.batch_means) ss += (m - grand) * (m - grand);
  const double sd = std::sqrt(ss / (n_batches - 1));
  out.overall_mean = grand;
  out.ci_halfwidth = 1.959963984540054 * sd / std::sqrt(static_cast<double>(n_batches));
  return out;
}

BatchAccumulator::BatchAccumulator(std::int64_t total_slots, int n_batches)
    : batch_len_(total_slots / (n_batches > 0 ? n_batches : 1)),
      n_batches_(n_batches),
      value_sums_(static_cast<std::size_t>(n_batches > 0 ? n_batches : 0), 0.0),
      weight_sums_(static_cast<std::size_t>(n_batches > 0 ? n_batches : 0), 0.0) {
  if (n_batches < 2) throw TooShort("BatchAccumulator: need at least 2 batches");
  if (batch_len_ < 1) {
    throw TooShort("BatchAccumulator: " + std::to_string(total_slots) +
                   " slots cannot fill " + std::to_string(n_batches) + " batches");
  }
}

void BatchAccumulator::add(double value, double weight) {
  const std::int64_t idx = count_ / batch_len_;
  if (idx < n_batches_) {
    value_sums_[static_cast<std::size_t>(idx)] += value;
    weight_sums_[static_cast<std::size_t>(idx)] += weight;
  }
  ++count_;
}

BatchStats BatchAccumulator::finalize() const {
  if (count_ < capacity()) {
    throw TooShort("BatchAccumulator: fed " + std::to_string(count_) + " of " +
                   std::to_string(capacity()) + " slots");
  }
  BatchStats out;
  out.n_batches = n_batches_;
  out.batch_means.resize(static_cast<std::size_t>(n_batches_));
  for (int b = 0; b < n_batches_; ++b) {
    const double w = weight_sums_[static_cast<std::size_t>(b)];
    out.batch_means[static_cast<std::size_t>(b)] =
        (w > 0.0) ? value_sums_[static_cast<std::size_t>(b)] / w : 0.0;
  }
  double grand = 0.0;
  for (double m : out.batch_means) grand += m;
  grand /= n_batches_;
  double ss = 0.0;
  for (double m : out.batch_means) ss += (m - grand) * (m - grand);
  const double sd = std::sqrt(ss / (n_batches_ - 1));
  out.overall_mean = grand;
  out.ci_halfwidth = 1.959963984540054 * sd / std::sqrt(static_cast<double>(n_batches_));
  return out;
}

}  // namespace tsm
