#include <cmath>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "tsm/loss.hpp"
#include "tsm/loss_opt.hpp"
#include "tsm/markov.hpp"
#include "tsm/stats.hpp"

using namespace tsm;
using testsupport::fig2_model;

TEST_CASE("optimal static price: closed form") {
  SUBCASE("w = 0.05") {
    const StaticOptimum st = optimal_static_price(fig2_model(0.05));
    CHECK(st.closed_form);
    CHECK(st.price == doctest::Approx((3.5 - std::sqrt(0.1) - 2.0)).epsilon(1e-12));
    CHECK(st.value == doctest::Approx((3.5 - 2.0 * std::sqrt(0.1) - 2.0)).epsilon(1e-12));
  }
  SUBCASE("w = 0.1") {
    const StaticOptimum st = optimal_static_price(fig2_model(0.1));
    CHECK(st.price == doctest::Approx((3.5 - std::sqrt(0.2) - 2.0)).epsilon(1e-12));
    CHECK(st.value == doctest::Approx((3.5 - 2.0 * std::sqrt(0.2) - 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("optimal static price: numeric path") {
  SUBCASE("numeric agrees with the closed form") {
    for (double w : {0.05, 0.1}) {
      const StaticOptimum closed = optimal_static_price(fig2_model(w));
      const StaticOptimum numeric = optimal_static_price(fig2_model(w), true);
      CHECK(!numeric.closed_form);
      CHECK(numeric.price == doctest::Approx(closed.price).epsilon(1e-6));
      CHECK(numeric.value == doctest::Approx(closed.value).epsilon(1e-6));
    }
  }
  SUBCASE("vanishing holding weight pushes to the stability boundary") {
    const PriceModel m = fig2_model(5e-13);
    const StaticOptimum closed = optimal_static_price(m);
    CHECK(closed.price == doctest::Approx(1.5).epsilon(1e-4));
    CHECK(closed.value == doctest::Approx(1.5).epsilon(1e-4));
    const StaticOptimum numeric = optimal_static_price(m, true);
    CHECK(numeric.price == doctest::Approx(1.5).epsilon(1e-4));
    CHECK(numeric.value == doctest::Approx(1.5).epsilon(1e-4));
  }
  SUBCASE("concave model optimum stays interior and beats the endpoints") {
    const PriceModel m(1.0, 3.5, 0.6, 1.0, 2.2, 1.0, 0.08);
    const StaticOptimum st = optimal_static_price(m);
    CHECK(!st.closed_form);
    CHECK(st.price >= m.p_min);
    CHECK(st.price <= m.p_max);
    CHECK(st.value >= st.price - m.w_tilde() / (m.g(st.price) - m.lambda) - 1e-12);
    CHECK(st.value + 1e-9 >= m.p_min - m.w_tilde() / (m.g(m.p_min) - m.lambda));
  }
}

TEST_CASE("universal bounds on the reference model") {
  const BoundsReport b = universal_bounds(fig2_model(0.05));
  CHECK(b.g_inv_bound == doctest::Approx(1.5).epsilon(1e-12));
  // Unconstrained argmax 3.18 exceeds p_max, so the boxed bound sits at p_max.
  CHECK(b.light_traffic_bound_boxed == doctest::Approx(2.0 - 0.1 / 1.5).epsilon(1e-12));
  CHECK(b.light_traffic_bound_relaxed == doctest::Approx(3.5 - 2.0 * std::sqrt(0.1)).epsilon(1e-12));
  CHECK(b.combined == doctest::Approx(1.5).epsilon(1e-12));

  // The linear-model combined bound subtracts max(lambda, 2 sqrt(w~ alpha))/alpha.
  const PriceModel m = fig2_model(0.05);
  const double reduction = std::max(m.beta_d / m.alpha_d - b.g_inv_bound,
                                    m.beta_d / m.alpha_d - b.light_traffic_bound_relaxed);
  CHECK(reduction == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("huge holding weight flags an unprofitable model") {
  const BoundsReport b = universal_bounds(fig2_model(2.0));  // w~ = 4
  CHECK(b.light_traffic_bound_relaxed == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("bound report internal ordering for random models") {
  RngHandle rng(55);
  for (int k = 0; k < 30; ++k) {
    const PriceModel m = testsupport::random_model(rng, false);
    const BoundsReport b = universal_bounds(m);
    CHECK(b.combined <= b.g_inv_bound + 1e-12);
    CHECK(b.combined <= b.light_traffic_bound_boxed + 1e-12);
    CHECK(b.combined <= b.light_traffic_bound_relaxed + 1e-12);
    CHECK(b.combined <= m.beta_d / m.alpha_d + 1e-12);
    CHECK(b.light_traffic_bound_boxed <= b.light_traffic_bound_relaxed + 1e-12);
  }
}

TEST_CASE("bang-bang search dominates the static optimum") {
  for (double w : {0.05, 0.1}) {
    const PriceModel m = fig2_model(w);
    const BangBangOptimum bb = optimize_bangbang(m, 20.0, 0.1);
    const StaticOptimum st = optimal_static_price(m);
    CHECK(bb.value_rel >= st.value - 1e-9);
  }
  SUBCASE("heavier holding weight lowers the threshold") {
    const BangBangOptimum light = optimize_bangbang(fig2_model(0.05), 20.0, 0.1);
    const BangBangOptimum heavy = optimize_bangbang(fig2_model(0.1), 20.0, 0.1);
    CHECK(heavy.x_rel <= light.x_rel + 1e-9);
  }
  SUBCASE("dominant holding weight pushes x* to zero") {
    const BangBangOptimum bb = optimize_bangbang(fig2_model(50.0), 10.0, 0.05);
    CHECK(bb.x_rel <= 0.05 + 1e-9);
  }
  SUBCASE("requires the linear model") {
    CHECK_THROWS_AS(optimize_bangbang(PriceModel(1.0, 3.5, 0.5, 1.0, 2.5, 0.9, 0.05)),
                    RequiresLinearModel);
  }
}

TEST_CASE("brute-force pi_0 minimization") {
  SUBCASE("three states, two levels, cap 1") {
    const BruteForceResult res = brute_force_min_pi0(3, {0.5, 1.5}, MomentCap(1.0));
    REQUIRE(res.rho.size() == 2);
    CHECK(res.rho[0] == doctest::Approx(1.5));
    CHECK(res.rho[1] == doctest::Approx(0.5));
    CHECK(res.pi0 == doctest::Approx(1.0 / 3.25).epsilon(1e-9));
  }
  SUBCASE("tight cap is infeasible") {
    CHECK_THROWS_AS(brute_force_min_pi0(3, {0.5, 1.5}, MomentCap(0.4)), Infeasible);
  }
  SUBCASE("single level") {
    const BruteForceResult res = brute_force_min_pi0(3, {0.5}, MomentCap(0.6));
    CHECK(res.rho == std::vector<double>{0.5, 0.5});
    CHECK(res.pi0 == doctest::Approx(1.0 / 1.75).epsilon(1e-9));
  }
  SUBCASE("winners have the bang-bang shape away from grid knife-edges") {
    for (int n_states = 2; n_states <= 5; ++n_states) {
      for (double cap : {0.6, 0.7, 1.2, 1.7, 3.5}) {
        try {
          const BruteForceResult res =
              brute_force_min_pi0(n_states, {0.5, 1.0, 1.5}, MomentCap(cap));
          CHECK(bangbang_shaped(res.rho, 0.5, 1.5));
        } catch (const Infeasible&) {
        }
      }
    }
  }
  // The bang-bang structure is a continuum property; on a discrete level grid a
  // tightly binding cap can reward a non-monotone assignment. cap = 1.8 with
  // four states is such a knife-edge: (1.5, 1.0, 1.5) attains E[N] = 1.8
  // exactly while the monotone (1.5, 1.5, 1.0) overshoots to 1.821.
  SUBCASE("grid quantization can break the shape at a knife-edge cap") {
    const BruteForceResult res = brute_force_min_pi0(4, {0.5, 1.0, 1.5}, MomentCap(1.8));
    CHECK(res.rho == std::vector<double>{1.5, 1.0, 1.5});
    CHECK(res.mean_n == doctest::Approx(1.8).epsilon(1e-12));
    CHECK(!bangbang_shaped(res.rho, 0.5, 1.5));
  }
}

TEST_CASE("improving perturbation") {
  // Cap chosen as E[N] of the profile, so m = 0 by construction.
  const RhoProfile profile({0.5, 1.5}, std::nullopt, RhoBounds{0.5, 1.5});
  const MomentCap cap(2.0 / 2.25);

  SUBCASE("improves f strictly and preserves m") {
    const PerturbResult res = improving_perturbation(profile, 1, 1e-3, cap);
    CHECK(res.delta_f > 0.0);
    CHECK(std::fabs(res.m_new) <= 1e-8);
  }
  SUBCASE("delta_f vanishes continuously with eps") {
    const double big = improving_perturbation(profile, 1, 1e-3, cap).delta_f;
    const double small = improving_perturbation(profile, 1, 1e-6, cap).delta_f;
    CHECK(small > 0.0);
    CHECK(small < big);
    CHECK(small / big == doctest::Approx(1e-3).epsilon(0.05));
  }
  SUBCASE("bang-bang ordered profiles admit no perturbation") {
    const RhoProfile ordered({1.5, 0.5}, std::nullopt, RhoBounds{0.5, 1.5});
    const MomentCap cap2(3.0 / 3.25);
    CHECK_THROWS_AS(improving_perturbation(ordered, 1, 1e-3, cap2), PreconditionViolation);
  }
  SUBCASE("m != 0 violates the precondition") {
    CHECK_THROWS_AS(improving_perturbation(profile, 1, 1e-3, MomentCap(2.0)), PreconditionViolation);
  }
  SUBCASE("indices outside the explicit prefix are rejected") {
    CHECK_THROWS_AS(improving_perturbation(profile, 2, 1e-3, cap), PreconditionViolation);
    CHECK_THROWS_AS(improving_perturbation(profile, 0, 1e-3, cap), PreconditionViolation);
  }
  SUBCASE("geometric tails are folded into the series") {
    const RhoProfile tailed({0.9, 1.2, 0.8}, 0.6, RhoBounds{0.5, 1.5});
    const MomentCap cap_t(mean_occupancy(stationary_truncated(tailed)));
    const PerturbResult res = improving_perturbation(tailed, 1, 1e-4, cap_t);
    CHECK(res.delta_f > 0.0);
    CHECK(std::fabs(res.m_new) <= 1e-8);
  }
}

TEST_CASE("improving perturbation raises f on random m = 0 profiles") {
  RngHandle rng(77);
  int done = 0;
  while (done < 30) {
    const std::size_t len = 3 + rng.next_u64() % 3;
    std::vector<double> prefix(len);
    for (double& r : prefix) r = testsupport::uniform_in(rng, 0.35, 1.55);
    const RhoProfile profile(prefix, std::nullopt, RhoBounds{0.3, 1.6});
    std::size_t i = 0;
    for (std::size_t k = 1; k < len; ++k) {
      if (prefix[k - 1] < 1.55 && prefix[k] > 0.35) {
        i = k;
        break;
      }
    }
    if (i == 0) continue;
    const MomentCap cap(mean_occupancy(stationary_truncated(profile)));
    const PerturbResult res = improving_perturbation(profile, i, 1e-4, cap);
    CHECK(res.delta_f > 0.0);
    CHECK(std::fabs(res.m_new) <= 1e-8);
    ++done;
  }
}

TEST_CASE("competitive cases") {
  SUBCASE("heavy traffic worked example") {
    const CompetitiveReport rep = competitive_cases(fig2_model(0.05), 1.2);
    CHECK(rep.regime == TrafficRegime::HeavyTraffic);
    CHECK(rep.payoff_lower == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(rep.reduction_ratio_estimate == doctest::Approx(1.325).epsilon(1e-12));
  }
  SUBCASE("required rate above mu_max is infeasible") {
    CHECK_THROWS_AS(competitive_cases(fig2_model(0.05), 1.3), InfeasibleRate);
  }
  SUBCASE("light traffic case") {
    const PriceModel m(1.0, 3.5, 1.0, 1.0, 2.0, 0.5, 2.0);  // w~ = 1, B = 2 > lambda
    const CompetitiveReport rep = competitive_cases(m, 1.2);
    CHECK(rep.regime == TrafficRegime::LightTraffic);
    CHECK(rep.payoff_lower == doctest::Approx(3.5 - 2.4 - 1.0 / 0.4).epsilon(1e-12));
  }
  SUBCASE("reduction splits into the gamma factor plus the holding term") {
    for (double gamma : {1.05, 1.2}) {
      const PriceModel m = fig2_model(0.05);
      const CompetitiveReport rep = competitive_cases(m, gamma);
      const double reduction = m.beta_d / m.alpha_d - rep.payoff_lower;
      const double min_reduction = std::max(m.lambda, 2.0 * std::sqrt(m.w_tilde())) / m.alpha_d;
      const double holding = m.w_tilde() / ((gamma - 1.0) * m.lambda);
      CHECK(reduction <= gamma * min_reduction + holding + 1e-12);
    }
  }
  SUBCASE("gamma must exceed one") {
    CHECK_THROWS_AS(competitive_cases(fig2_model(0.05), 1.0), std::invalid_argument);
  }
}

TEST_CASE("bangbang_shaped recognizer") {
  CHECK(bangbang_shaped({1.5, 1.5, 1.0, 0.5}, 0.5, 1.5));
  CHECK(bangbang_shaped({1.5, 0.5}, 0.5, 1.5));
  CHECK(bangbang_shaped({0.5, 0.5}, 0.5, 1.5));
  CHECK(!bangbang_shaped({0.5, 1.5}, 0.5, 1.5));
  CHECK(!bangbang_shaped({1.5, 1.0, 1.0, 0.5}, 0.5, 1.5));
}
