#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsm {

struct NegativeRate : std::runtime_error {
  explicit NegativeRate(const std::string& msg) : std::runtime_error(msg) {}
};

struct TooShort : std::runtime_error {
  explicit TooShort(const std::string& msg) : std::runtime_error(msg) {}
};

// Keyed splitmix64 walk. A (seed, stream_id) pair fully determines the output
// sequence, so replications stay reproducible regardless of which thread runs
// them. Pure 64-bit integer arithmetic throughout.
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();
  double next_unit();  // uniform on [0, 1)

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
};

// Poisson draw: product-of-uniforms inversion for rate < 10, PTRS-style
// transformed rejection above.
long poisson_sample(RngHandle& rng, double rate);

struct BatchStats {
  int n_batches = 0;
  std::vector<double> batch_means;
  double overall_mean = 0.0;
  double ci_halfwidth = 0.0;  // 95%, normal approximation on the batch means
};

// Splits the series into n_batches equal batches (trailing remainder dropped)
// and returns the batch-means estimate of the grand mean with a 95% CI.
BatchStats batch_ci(const std::vector<double>& series, int n_batches);

// Streaming batch-means accumulator sized for a known number of slots.
// Values may carry a weight; a batch mean is sum(value)/sum(weight) over the
// batch, so weighted use gives per-served-unit averages.
class BatchAccumulator {
 public:
  BatchAccumulator(std::int64_t total_slots, int n_batches);

  void add(double value, double weight = 1.0);
  BatchStats finalize() const;

  std::int64_t capacity() const { return batch_len_ * n_batches_; }

 private:
  std::int64_t batch_len_;
  int n_batches_;
  std::int64_t count_ = 0;
  std::vector<double> value_sums_;
  std::vector<double> weight_sums_;
};

}  // namespace tsm
