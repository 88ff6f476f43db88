#include "psbp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psbp {

double effective_sample_size(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= n;
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = chain[i] - mean;
  const auto gamma = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += centered[i] * centered[i + k];
    return s / n;
  };
  const double g0 = gamma(0);
  if (!(g0 > 0.0)) return static_cast<double>(n);
  // Geyer: sum lag pairs while their sum stays positive.
  double tau = g0;
  for (std::size_t k = 1; k + 1 < n; k += 2) {
    const double pair = gamma(k) + gamma(k + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::max(1.0, n * g0 / tau);
}

double batch_means_se(const std::vector<double>& chain, int batches) {
  const std::size_t n = chain.size();
  if (batches < 2 || n < static_cast<std::size_t>(2 * batches))
    throw std::invalid_argument("batch_means_se: chain too short");
  const std::size_t len = n / batches;
  std::vector<double> means(batches, 0.0);
  for (int b = 0; b < batches; ++b) {
    for (std::size_t i = 0; i < len; ++i) means[b] += chain[b * len + i];
    means[b] /= len;
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= batches;
  double var = 0.0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= (batches - 1);
  return std::sqrt(var / batches);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("quantile: p outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * (values.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= values.size()) return values.back();
  const double frac = pos - i;
  return values[i] * (1.0 - frac) + values[i + 1] * frac;
}

double mean_z_score(double mean_a, double se_sq_a, double mean_b,
                    double se_sq_b) {
  return (mean_a - mean_b) / std::sqrt(se_sq_a + se_sq_b);
}

double ks_distance(std::vector<double> sample,
                   const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::fabs(f - i / n));
    d = std::max(d, std::fabs(f - (i + 1) / n));
  }
  return d;
}

}  // namespace psbp
