#pragma once

#include <functional>
#include <vector>

namespace psbp {

// Effective sample size by Geyer's initial positive sequence estimator.
double effective_sample_size(const std::vector<double>& chain);

// Standard error of the chain mean by non-overlapping batch means.
double batch_means_se(const std::vector<double>& chain, int batches = 50);

// Empirical quantile with linear interpolation on the sorted sample.
double quantile(std::vector<double> values, double p);

// Two-sample z-score for equality of means; se_sq are squared standard
// errors of each mean.
double mean_z_score(double mean_a, double se_sq_a, double mean_b,
                    double se_sq_b);

// Kolmogorov-Smirnov distance between a sample and a reference CDF.
double ks_distance(std::vector<double> sample,
                   const std::function<double(double)>& cdf);

}  // namespace psbp
