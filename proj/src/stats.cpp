#include "psbp/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace psbp {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kSqrtHalf = 0.70710678118654752440;

// Tail branch of Wichura's AS241 quantile, driven directly by log(p) so it
// keeps full accuracy when p itself would underflow. Valid for p <= 0.02425.
double horner8(double r, const double (&c)[8]) {
  double v = c[0];
  for (int i = 1; i < 8; ++i) v = v * r + c[i];
  return v;
}

double tail_quantile_from_log(double log_p) {
  double r = std::sqrt(-log_p);
  double num;
  double den;
  if (r <= 5.0) {
    r -= 1.6;
    static constexpr double kNum[8] = {
        7.74545014278341407640e-4, 2.27238449892691845833e-2,
        2.41780725177450611770e-1, 1.27045825245236838258,
        3.64784832476320460504,    5.76949722146069140550,
        4.63033784615654529590,    1.42343711074968357734};
    static constexpr double kDen[8] = {
        1.05075007164441684324e-9, 5.47593808499534494600e-4,
        1.51986665636164571966e-2, 1.48103976427480074590e-1,
        6.89767334985100004550e-1, 1.67638483018380384940,
        2.05319162663775882187,    1.0};
    num = horner8(r, kNum);
    den = horner8(r, kDen);
  } else {
    r -= 5.0;
    static constexpr double kNum[8] = {
        2.01033439929228813265e-7, 2.71155556874348757815e-5,
        1.24266094738807843860e-3, 2.65321895265761230930e-2,
        2.96560571828504891230e-1, 1.78482653991729133580,
        5.46378491116411436990,    6.65790464350110377720};
    static constexpr double kDen[8] = {
        2.04426310338993978564e-15, 1.42151175831644588870e-7,
        1.84631831751005468180e-5,  7.86869131145613259100e-4,
        1.48753612908506148525e-2,  1.36929880922735805310e-1,
        5.99832206555887937690e-1,  1.0};
    num = horner8(r, kNum);
    den = horner8(r, kDen);
  }
  return -num / den;
}

}  // namespace

double normal_cdf(double x) {
  if (!std::isfinite(x)) throw std::domain_error("normal_cdf: non-finite x");
  return 0.5 * std::erfc(-x * kSqrtHalf);
}

double normal_sf(double x) {
  if (!std::isfinite(x)) throw std::domain_error("normal_sf: non-finite x");
  return 0.5 * std::erfc(x * kSqrtHalf);
}

double log_normal_sf(double x) {
  if (!std::isfinite(x))
    throw std::domain_error("log_normal_sf: non-finite x");
  if (x <= 36.0) {
    const double q = 0.5 * std::erfc(x * kSqrtHalf);
    return std::log(q);
  }
  // Beyond erfc's range: log Q(x) = -x^2/2 - log(x sqrt(2 pi)) + log series.
  const double x2 = x * x;
  const double series =
      1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - 0.5 * kLogTwoPi - std::log(x) + std::log(series);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x - 0.5 * kLogTwoPi);
}

double log_normal_pdf(double x, double mean, double precision) {
  const double d = x - mean;
  return 0.5 * (std::log(precision) - kLogTwoPi) - 0.5 * precision * d * d;
}

double normal_inv_cdf(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::domain_error("normal_inv_cdf: p must lie in (0, 1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    static constexpr double kNum[8] = {
        2.5090809287301226727e3, 3.3430575583588128105e4,
        6.7265770927008700853e4, 4.5921953931549871457e4,
        1.3731693765509461125e4, 1.9715909503065514427e3,
        1.3314166789178437745e2, 3.3871328727963666080};
    static constexpr double kDen[8] = {
        5.2264952788528545610e3, 2.8729085735721942674e4,
        3.9307895800092710610e4, 2.1213794301586595867e4,
        5.3941960214247511077e3, 6.8718700749205790830e2,
        4.2313330701600911252e1, 1.0};
    return q * horner8(r, kNum) / horner8(r, kDen);
  }
  const double tail = q < 0.0 ? p : 1.0 - p;
  const double v = tail_quantile_from_log(std::log(tail));
  return q < 0.0 ? v : -v;
}

double sample_truncated_normal(double mean, double precision, TruncSide side,
                               RngStream& rng) {
  if (!std::isfinite(mean) || !(precision > 0.0) || !std::isfinite(precision))
    throw std::domain_error("sample_truncated_normal: bad mean/precision");
  const double sd = 1.0 / std::sqrt(precision);

  // Draw w ~ N(0,1) restricted to w >= alpha by inverting the survival
  // function; everything stays in log space so alpha deep in the upper tail
  // still produces finite, correctly distributed values.
  const auto upper_tail = [&](double alpha) {
    const double log_q_alpha = log_normal_sf(alpha);
    const double u = rng.uniform();
    const double log_q = log_q_alpha + std::log1p(-u);
    if (log_q < -3.7) return -tail_quantile_from_log(log_q);
    return normal_inv_cdf(1.0 - std::exp(log_q));
  };

  if (side == TruncSide::kAtOrAboveZero) {
    const double alpha = -mean / sd;
    const double x = mean + sd * upper_tail(alpha);
    return x < 0.0 ? 0.0 : x;
  }
  for (;;) {
    const double w = upper_tail(mean / sd);
    const double x = mean - sd * w;
    if (x < 0.0) return x;
  }
}

}  // namespace psbp
