#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "psbp/diagnostics.hpp"
#include "psbp/rng.hpp"
#include "psbp/stats.hpp"
#include "support/oracles.hpp"

using psbp::normal_cdf;
using psbp::normal_inv_cdf;
using psbp::normal_pdf;
using psbp::normal_sf;

TEST_CASE("normal cdf matches quadrature of the density") {
  for (const double x : {-6.0, -3.0, -1.0, -0.2, 0.0, 0.4, 1.3, 2.7, 5.5}) {
    const double tail = normal_cdf(-8.0);
    const double integral =
        oracles::integrate([](double t) { return normal_pdf(t); }, -8.0, x);
    CHECK(normal_cdf(x) == doctest::Approx(integral + tail).epsilon(1e-12));
  }
}

TEST_CASE("normal cdf hits pinned reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-13));
  CHECK(normal_cdf(-1.959963984540054) == doctest::Approx(0.025).epsilon(1e-13));
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
}

TEST_CASE("cdf and survival are complementary and symmetric") {
  for (const double x : {-9.0, -2.5, -0.3, 0.0, 0.7, 3.1, 9.0}) {
    CHECK(normal_cdf(x) + normal_sf(x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(normal_sf(x) == doctest::Approx(normal_cdf(-x)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(normal_cdf(std::nan("")), std::domain_error);
}

TEST_CASE("log survival agrees with the direct log in range") {
  for (const double x : {-5.0, 0.0, 3.0, 10.0, 25.0, 35.5}) {
    CHECK(psbp::log_normal_sf(x) ==
          doctest::Approx(std::log(normal_sf(x))).epsilon(1e-12));
  }
}

TEST_CASE("log survival stays smooth and accurate in the far tail") {
  const double a = psbp::log_normal_sf(35.999);
  const double b = psbp::log_normal_sf(36.001);
  CHECK(std::fabs(a - b) < 0.08);
  for (const double x : {37.0, 40.0, 60.0, 80.0}) {
    const long double lx = x;
    const long double ref =
        std::log(0.5L * std::erfc(lx / std::sqrt(2.0L)));
    CHECK(psbp::log_normal_sf(x) ==
          doctest::Approx(static_cast<double>(ref)).epsilon(1e-10));
  }
}

TEST_CASE("log density matches the explicit formula") {
  for (const double y : {-3.0, 0.0, 2.5}) {
    for (const double m : {-1.0, 4.0}) {
      for (const double prec : {0.25, 2.0}) {
        const double d = y - m;
        const double ref = 0.5 * std::log(prec / (2.0 * M_PI)) -
                           0.5 * prec * d * d;
        CHECK(psbp::log_normal_pdf(y, m, prec) ==
              doctest::Approx(ref).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("quantile inverts the cdf") {
  for (const double p : {1e-12, 1e-6, 0.001, 0.025, 0.2, 0.5, 0.8, 0.975,
                         0.999999, 1.0 - 1e-10}) {
    const double x = normal_inv_cdf(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-11));
  }
  CHECK(normal_inv_cdf(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_inv_cdf(0.5) == doctest::Approx(0.0).scale(1e-15));
}

TEST_CASE("quantile matches a bisection inverse oracle") {
  for (const double p : {0.01, 0.1, 0.3, 0.6, 0.9, 0.99}) {
    double lo = -10.0;
    double hi = 10.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (normal_cdf(mid) < p)
        lo = mid;
      else
        hi = mid;
    }
    CHECK(normal_inv_cdf(p) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
  }
}

TEST_CASE("quantile round trips deep tail arguments") {
  for (const double x : {-8.0, -3.0, -1.0}) {
    CHECK(normal_inv_cdf(normal_cdf(x)) == doctest::Approx(x).epsilon(1e-9));
    // Positive arguments go through the precise lower tail of the mirror.
    CHECK(-normal_inv_cdf(normal_sf(-x)) == doctest::Approx(-x).epsilon(1e-9));
  }
  const double far = normal_inv_cdf(1e-300);
  CHECK(std::isfinite(far));
  CHECK(far == doctest::Approx(-37.0471).epsilon(1e-3));
  CHECK_THROWS_AS(normal_inv_cdf(0.0), std::domain_error);
  CHECK_THROWS_AS(normal_inv_cdf(1.0), std::domain_error);
  CHECK_THROWS_AS(normal_inv_cdf(-0.5), std::domain_error);
}

TEST_CASE("truncated normal honors the cut on both sides") {
  psbp::RngStream rng(3, 5);
  for (int i = 0; i < 2000; ++i) {
    const double above =
        psbp::sample_truncated_normal(-1.0, 2.0, psbp::TruncSide::kAtOrAboveZero, rng);
    CHECK(above >= 0.0);
    const double below =
        psbp::sample_truncated_normal(1.5, 0.5, psbp::TruncSide::kBelowZero, rng);
    CHECK(below < 0.0);
  }
}

TEST_CASE("half-normal mean is sqrt(2/pi)") {
  psbp::RngStream rng(3, 6);
  const int n = 50000;
  double above = 0.0;
  double below = 0.0;
  for (int i = 0; i < n; ++i) {
    above += psbp::sample_truncated_normal(0.0, 1.0,
                                           psbp::TruncSide::kAtOrAboveZero, rng);
    below += psbp::sample_truncated_normal(0.0, 1.0,
                                           psbp::TruncSide::kBelowZero, rng);
  }
  const double half_mean = std::sqrt(2.0 / M_PI);
  CHECK(above / n == doctest::Approx(half_mean).epsilon(0.015));
  CHECK(below / n == doctest::Approx(-half_mean).epsilon(0.015));
}

TEST_CASE("truncated draws match the conditional cdf") {
  const double mean = -0.7;
  const double prec = 1.8;
  const double sd = 1.0 / std::sqrt(prec);
  psbp::RngStream rng(3, 7);
  const int n = 20000;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i)
    x[i] = psbp::sample_truncated_normal(mean, prec,
                                         psbp::TruncSide::kAtOrAboveZero, rng);
  const double alpha = -mean / sd;
  const double denom = normal_sf(alpha);
  const auto cdf = [&](double v) {
    if (v < 0.0) return 0.0;
    return (normal_cdf((v - mean) / sd) - normal_cdf(alpha)) / denom;
  };
  CHECK(psbp::ks_distance(x, cdf) < 0.015);
}

TEST_CASE("extreme truncation lands in the hazard-rate window") {
  psbp::RngStream rng(3, 8);
  for (int i = 0; i < 2000; ++i) {
    const double v = psbp::sample_truncated_normal(
        -400.0, 1.0, psbp::TruncSide::kAtOrAboveZero, rng);
    REQUIRE(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v < 0.05);
  }
  for (int i = 0; i < 2000; ++i) {
    const double v = psbp::sample_truncated_normal(
        350.0, 4.0, psbp::TruncSide::kBelowZero, rng);
    REQUIRE(std::isfinite(v));
    CHECK(v < 0.0);
    CHECK(v > -0.05);
  }
}
