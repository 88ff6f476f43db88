#pragma once

#include "psbp/rng.hpp"

namespace psbp {

// Standard normal CDF, relative error below 1e-12 over the full double range.
double normal_cdf(double x);

// Upper tail 1 - Phi(x), accurate without cancellation for large x.
double normal_sf(double x);

// log(1 - Phi(x)), finite for all finite x (asymptotic series in the far
// tail where the survival value itself underflows).
double log_normal_sf(double x);

double normal_pdf(double x);
double log_normal_pdf(double x, double mean, double precision);

// Quantile of the standard normal, p in (0, 1). Throws std::domain_error
// outside the open interval.
double normal_inv_cdf(double p);

enum class TruncSide { kBelowZero, kAtOrAboveZero };

// Draw from N(mean, 1/precision) truncated to x < 0 or x >= 0. Inverse-CDF
// in survival space, switching to a log-space complement when the
// truncation point sits deep in the tail, so draws stay finite and exact
// for arbitrarily extreme means. Consumes one uniform per draw.
double sample_truncated_normal(double mean, double precision, TruncSide side,
                               RngStream& rng);

}  // namespace psbp
