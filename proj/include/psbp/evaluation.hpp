#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "psbp/data.hpp"
#include "psbp/model.hpp"
#include "psbp/sampler.hpp"

namespace psbp {

struct PpcThresholds {
  double lo = -24.0;
  double hi = 36.0;
};

// The four replicate statistics: mean, standard deviation, disruption
// probability (y < lo or y >= hi), and its complement.
std::array<double, 4> ppc_stats(const std::vector<double>& y,
                                const PpcThresholds& thr);
extern const char* const kPpcStatNames[4];

struct PpcStatistic {
  std::string name;
  double observed = 0.0;
  double rep_mean = 0.0;
  double rep_lower = 0.0;  // central 95% replicate interval
  double rep_upper = 0.0;
  std::vector<double> hist_edges;
  std::vector<std::int64_t> hist_counts;
};

struct PpcReport {
  std::vector<PpcStatistic> statistics;
  std::size_t replicates = 0;
};

// One replicate dataset per retained draw, simulated on the observed
// design. Throws std::domain_error on an empty draw set.
PpcReport ppc_statistics(const Dataset& data,
                         const std::vector<PosteriorDraw>& draws,
                         const ModelSpec& spec, const PpcThresholds& thr = {},
                         std::uint64_t seed = 1);

// Frequentist linear baseline: y ~ N(x beta, sigma2) with airline, route,
// airline-route, month and legs dummies plus linear dev_start, duration and
// log-weight terms. Rank-deficient designs are handled by a rank-revealing
// QR; sigma2 = RSS / (n - rank).
struct LinearBaseline {
  std::vector<double> beta;
  double sigma2 = 1.0;
  int rank = 0;
};

LinearBaseline fit_linear_baseline(const Dataset& train,
                                   const ModelSpec& spec);
std::vector<double> lm_design_row(const ShipmentRecord& rec,
                                  const ModelSpec& spec);
double lm_predict(const LinearBaseline& lm, const ShipmentRecord& rec,
                  const ModelSpec& spec);

// Plug-in parametric replicates from the fitted linear model.
PpcReport ppc_linear(const LinearBaseline& lm, const Dataset& data,
                     const ModelSpec& spec, std::size_t replicates,
                     const PpcThresholds& thr = {}, std::uint64_t seed = 1);

struct ResidualReport {
  double rmse = 0.0;
  double mae = 0.0;
  double log_likelihood = 0.0;
};

ResidualReport residual_metrics(const Dataset& data,
                                const std::vector<PosteriorDraw>& draws,
                                const ModelSpec& spec);
ResidualReport residual_metrics_lm(const Dataset& data,
                                   const LinearBaseline& lm,
                                   const ModelSpec& spec);

// Held-out log-likelihood of one record: log of the draw-averaged density.
double predictive_log_likelihood(const ShipmentRecord& rec,
                                 const std::vector<PosteriorDraw>& draws,
                                 const ModelSpec& spec);

struct CvOptions {
  int folds = 3;
  std::uint64_t seed = 9;
  SamplerConfig sampler;
};

struct CvReport {
  std::vector<std::string> blocks;
  std::vector<double> fold_log_lik;
  std::vector<std::size_t> fold_sizes;
  double total_neg_log_lik = 0.0;  // equals -(sum of fold_log_lik)
};

// Fold labels in [0, folds), stratified by airline-route pair: each pair's
// records are shuffled with a stream derived from the seed and dealt
// round-robin, so pair groups split as evenly as they can.
std::vector<int> stratified_folds(const Dataset& data, int folds,
                                  std::uint64_t seed);

// K-fold predictive score. Each fold's chain stream is derived from a
// content hash of its training records, so identical training content gives
// identical fits. Pass fold_assignment to override the stratified default.
CvReport cross_validate(const Dataset& data, const ModelSpec& config,
                        const CvOptions& opt,
                        const std::vector<int>* fold_assignment = nullptr);

struct EliminationStep {
  PredictorBlock dropped;
  double score_before = 0.0;
  double score_after = 0.0;
  bool kept_removed = false;
};

struct EliminationResult {
  std::vector<PredictorBlock> blocks;
  std::vector<EliminationStep> trail;
  double score = 0.0;
};

// Single backward pass: drop each block in turn, keep the drop when the
// negative log-likelihood score improves, otherwise restore it.
EliminationResult backward_eliminate(
    const std::vector<PredictorBlock>& start,
    const std::function<double(const std::vector<PredictorBlock>&)>& score);

}  // namespace psbp
