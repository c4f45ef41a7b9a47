#include <doctest.h>

#include <cmath>

#include "pena/bounds.hpp"
#include "pena/rng.hpp"

using namespace pena;

TEST_CASE("pena_poisson_bound closed forms") {
  CHECK(pena_poisson_bound(1.0, 1.0) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(pena_poisson_bound(1e-12, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pena_poisson_bound(3.0, 0.0) == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(pena_poisson_bound(-1.0, 1.0), Error);
  // continuity of the v2 -> 0 limit
  CHECK(pena_poisson_bound(3.0, 1e-12) == doctest::Approx(std::exp(-3.0)).epsilon(1e-9));
}

TEST_CASE("pena_gauss_bound closed forms") {
  CHECK(pena_gauss_bound(1.0, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(pena_gauss_bound(1e-9, 1.0) == doctest::Approx(1.0));
  CHECK(pena_gauss_bound(2.0, 4.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK_THROWS_AS(pena_gauss_bound(1.0, 0.0), Error);
}

TEST_CASE("ratio_bound closed forms") {
  CHECK(ratio_bound(1.0, 1.0, 1.0, 2.0, RatioScale::half) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(ratio_bound(0.0, 1.0, 1.0, 2.0, RatioScale::half) == doctest::Approx(1.0));
  CHECK(ratio_bound(1.0, 0.0, 2.0, 1.0, RatioScale::quarter) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK_THROWS_AS(ratio_bound(1.0, -10.0, 1.0, 1.0, RatioScale::half), Error);
  CHECK_THROWS_AS(ratio_bound(1.0, 1.0, 0.0, 1.0, RatioScale::half), Error);
}

TEST_CASE("freedman_bound closed forms and asymptote") {
  CHECK(freedman_bound(1.0, 1.0, 0.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(freedman_bound(1.0, 1.0, 1.0) == doctest::Approx(std::exp(-0.25)).epsilon(1e-12));
  // large x: bound approaches exp(-x/(2c))
  const double x = 100.0;
  const double ratio = freedman_bound(x, 1.0, 1.0) / std::exp(-x / 2.0);
  CHECK(ratio == doctest::Approx(std::exp(0.5)).epsilon(0.02));
}

TEST_CASE("bt_self_normalized_bound closed forms") {
  CHECK(bt_self_normalized_bound(1.0, 0.0, 1.0, 2.0) ==
        doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(bt_self_normalized_bound(1e-9, 1.0, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(bt_self_normalized_bound(1.0, 1.0, 1.0, 1e-12) ==
        doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("optimal lambda and the achieved-infimum identity") {
  const auto r1 = optimal_lambda(1.0, 1.0);
  CHECK(r1.lambda_star == doctest::Approx(0.5));
  CHECK(r1.achieved == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));

  const auto r2 = optimal_lambda(3.0, 1.0);
  CHECK(r2.lambda_star == doctest::Approx(0.75));
  CHECK(r2.achieved == doctest::Approx(4.0 * std::exp(-3.0)).epsilon(1e-12));

  // identity on a 100-point random grid
  PhiloxStream rng(2718, 0);
  for (int i = 0; i < 100; ++i) {
    const double x = 0.05 + 5.0 * rng.uniform01();
    const double v2 = 0.05 + 5.0 * rng.uniform01();
    const auto r = optimal_lambda(x, v2);
    REQUIRE(r.lambda_star > 0.0);
    REQUIRE(r.lambda_star < 1.0);
    REQUIRE(std::fabs(r.achieved - pena_poisson_bound(x, v2)) < 1e-12);
  }
}

TEST_CASE("monotonicity and dominance on a 50x50 grid") {
  for (int i = 1; i <= 50; ++i) {
    for (int j = 1; j <= 50; ++j) {
      const double x = 0.1 * i;
      const double v2 = 0.1 * j;
      const double pp = pena_poisson_bound(x, v2);
      const double pg = pena_gauss_bound(x, v2);
      const double fr = freedman_bound(x, v2, 0.5);
      REQUIRE(pp > 0.0);
      REQUIRE(pp <= 1.0);
      REQUIRE(pg > 0.0);
      REQUIRE(pg <= 1.0);
      // dominance: the Poissonian bound is the weaker one; Freedman with c>0
      // also dominates the Gaussian bound
      REQUIRE(pp >= pg - 1e-15);
      REQUIRE(fr >= pg - 1e-15);
      // monotone in x (nonincreasing) and in v2 (nondecreasing)
      if (i > 1) {
        REQUIRE(pena_poisson_bound(0.1 * (i - 1), v2) >= pp - 1e-15);
        REQUIRE(pena_gauss_bound(0.1 * (i - 1), v2) >= pg - 1e-15);
        REQUIRE(freedman_bound(0.1 * (i - 1), v2, 0.5) >= fr - 1e-15);
      }
      if (j > 1) {
        REQUIRE(pena_poisson_bound(x, 0.1 * (j - 1)) <= pp + 1e-15);
        REQUIRE(pena_gauss_bound(x, 0.1 * (j - 1)) <= pg + 1e-15);
        REQUIRE(freedman_bound(x, 0.1 * (j - 1), 0.5) <= fr + 1e-15);
      }
    }
  }
}

TEST_CASE("grid scan emits one row per (x, v2, bound)") {
  const auto rows = bound_grid_scan({1.0, 2.0}, {1.0}, 1.0);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].name == "pena_poisson");
  CHECK(rows[0].value == doctest::Approx(2.0 * std::exp(-1.0)));
}

TEST_CASE("all_bounds evaluates a full query consistently") {
  TailQuery q;
  q.x = 1.0;
  q.v2 = 2.0;
  q.alpha = 1.0;
  q.beta = 1.0;
  q.c = 1.0;
  q.a = 0.0;
  q.b = 1.0;
  q.y = 2.0;
  const AllBounds b = all_bounds(q);
  CHECK(b.pena_poisson == doctest::Approx(pena_poisson_bound(1.0, 2.0)));
  CHECK(b.pena_gauss == doctest::Approx(std::exp(-0.25)).epsilon(1e-12));
  CHECK(b.ratio_half == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(b.ratio_quarter == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(b.bt_self_normalized == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(b.freedman == doctest::Approx(std::exp(-1.0 / 6.0)).epsilon(1e-12));
}
