#include <cmath>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "tsm/markov.hpp"
#include "tsm/stats.hpp"

using namespace tsm;

TEST_CASE("constant rho gives the geometric stationary law") {
  const RhoProfile profile = RhoProfile::constant(0.8);
  const StationaryDist dist = stationary_truncated(profile);
  CHECK(dist.pi0() == doctest::Approx(0.2).epsilon(1e-12));
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(dist.pi_at(i) == doctest::Approx(0.2 * std::pow(0.8, double(i))).epsilon(1e-12));
  }
  CHECK(dist.explicit_mass() + dist.tail_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dist.tail_mass_bound == 0.0);
  CHECK(mean_occupancy(dist) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("prefix plus geometric tail: hand-summed normalization") {
  // h = (1, 4/3, 4/3) and the tail contributes (4/3)(0.8/0.2) = 16/3, so Z = 9.
  const RhoProfile profile = RhoProfile::with_tail({4.0 / 3.0, 1.0}, 0.8);
  const StationaryDist dist = stationary_truncated(profile);
  CHECK(dist.z == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(dist.pi0() == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
  // sum i h_i = 4/3 + 8/3 + (4/3)(2*4 + 0.8/0.04) = 124/3.
  CHECK(mean_occupancy(dist) == doctest::Approx(124.0 / 27.0).epsilon(1e-12));
  CHECK(dist.explicit_mass() + dist.tail_mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("finite chain: direct three-state normalization") {
  const RhoProfile profile = RhoProfile::finite({1.5, 0.5});
  const StationaryDist dist = stationary_truncated(profile);
  CHECK(dist.z == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(dist.pi[0] == doctest::Approx(1.0 / 3.25).epsilon(1e-9));
  CHECK(dist.pi[1] == doctest::Approx(1.5 / 3.25).epsilon(1e-9));
  CHECK(dist.pi[2] == doctest::Approx(0.75 / 3.25).epsilon(1e-9));
  CHECK(dist.explicit_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dist.tail_mass_bound == 0.0);
  CHECK(mean_occupancy(dist) == doctest::Approx(3.0 / 3.25).epsilon(1e-12));
}

TEST_CASE("f_and_m on the worked examples") {
  SUBCASE("constant 0.5 with cap 1 sits exactly at the cap") {
    const auto [f, m] = f_and_m(RhoProfile::constant(0.5), MomentCap(1.0));
    CHECK(f == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("finite (1.5, 0.5)") {
    const auto [f, m] = f_and_m(RhoProfile::finite({1.5, 0.5}), MomentCap(1.0));
    CHECK(f == doctest::Approx(3.25).epsilon(1e-12));
    CHECK(m == doctest::Approx(-0.25).epsilon(1e-12));
  }
  SUBCASE("finite (0.5, 1.5)") {
    const auto [f, m] = f_and_m(RhoProfile::finite({0.5, 1.5}), MomentCap(1.0));
    CHECK(f == doctest::Approx(2.25).epsilon(1e-12));
    CHECK(m == doctest::Approx(-0.25).epsilon(1e-12));
  }
}

TEST_CASE("monotonicity probe signs") {
  const RhoProfile finite2 = RhoProfile::finite({0.5, 0.5});
  CHECK(monotonicity_probe(finite2, 1, 1e-4).dpi0 < 0.0);
  CHECK(monotonicity_probe(finite2, 2, 1e-4).dmean > 0.0);

  const RhoProfile tailed = RhoProfile::with_tail({4.0 / 3.0, 1.0}, 0.8);
  const Sensitivity s = monotonicity_probe(tailed, 2, 1e-4);
  CHECK(s.dpi0 < 0.0);
  CHECK(s.dmean > 0.0);
}

TEST_CASE("pi_0 decreasing and E[N] increasing in every rho_i: 100 random profiles") {
  RngHandle rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t len = 1 + rng.next_u64() % 5;
    std::vector<double> prefix(len);
    for (double& r : prefix) r = testsupport::uniform_in(rng, 0.2, 1.6);
    const bool tailed = rng.next_unit() < 0.5;
    RhoProfile profile = tailed
                             ? RhoProfile::with_tail(prefix, testsupport::uniform_in(rng, 0.2, 0.95))
                             : RhoProfile::finite(prefix);
    // Widen the box so the probe step cannot exit it.
    profile = RhoProfile(profile.prefix(), profile.tail(), RhoBounds{0.01, 10.0});
    const std::size_t i = 1 + rng.next_u64() % len;
    const Sensitivity s = monotonicity_probe(profile, i, 1e-5);
    CHECK(s.dpi0 < 0.0);
    CHECK(s.dmean > 0.0);
  }
}

TEST_CASE("enumerated truncation agrees with the closed-form tail per state") {
  const std::vector<RhoProfile> profiles = {
      RhoProfile::constant(0.8),
      RhoProfile::with_tail({4.0 / 3.0, 1.0}, 0.8),
      RhoProfile::with_tail({1.2, 1.4, 1.1}, 0.9),
  };
  for (const RhoProfile& profile : profiles) {
    const StationaryDist closed = stationary_truncated(profile, 1e-12);
    const StationaryDist enumd = stationary_enumerated(profile, 1e-12);
    CHECK(enumd.tail_mass_bound > 0.0);
    CHECK(enumd.tail_mass_bound < 1e-12);
    CHECK(enumd.explicit_mass() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < enumd.pi.size(); i += 7) {
      CHECK(std::fabs(enumd.pi[i] - closed.pi_at(i)) < 1e-9);
    }
    CHECK(mean_occupancy(enumd) == doctest::Approx(mean_occupancy(closed)).epsilon(1e-9));
  }
}

TEST_CASE("detailed balance pi_i = pi_{i-1} rho_i holds including tail states") {
  const RhoProfile profile = RhoProfile::with_tail({1.3, 0.9, 1.1}, 0.7);
  const StationaryDist dist = stationary_truncated(profile);
  for (std::size_t i = 1; i < 9; ++i) {
    const double lhs = dist.pi_at(i);
    const double rhs = dist.pi_at(i - 1) * profile.rho(i);
    CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::max(1.0, std::fabs(rhs)));
  }
}

TEST_CASE("error contracts") {
  CHECK_THROWS_AS(RhoProfile::with_tail({0.5}, 1.0), NonRecurrent);
  CHECK_THROWS_AS(RhoProfile::constant(1.2), NonRecurrent);
  CHECK_THROWS_AS(MomentCap(0.0), std::invalid_argument);
  CHECK_THROWS_AS(MomentCap(-1.0), std::invalid_argument);

  SUBCASE("overflowing prefix product") {
    std::vector<double> prefix(400, 10.0);  // log h_400 = 400 ln 10 >> 709
    CHECK_THROWS_AS(stationary_truncated(RhoProfile::finite(prefix)), Overflow);
  }
  SUBCASE("bound violations") {
    const RhoProfile profile({0.5, 0.5}, std::nullopt, RhoBounds{0.5, 0.5});
    CHECK_THROWS_AS(profile.with_rho(1, 0.7), BoundViolation);
    CHECK_THROWS_AS(monotonicity_probe(profile, 1, 1e-3), BoundViolation);
    CHECK_THROWS_AS(RhoProfile({0.5, 2.0}, std::nullopt, RhoBounds{0.4, 1.0}), BoundViolation);
  }
  SUBCASE("tol domain") {
    CHECK_THROWS_AS(stationary_truncated(RhoProfile::constant(0.5), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(stationary_truncated(RhoProfile::constant(0.5), 1.5), std::invalid_argument);
  }
}
