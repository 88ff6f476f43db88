#pragma once

#include <optional>
#include <string>
#include <vector>

#include "psbp/data.hpp"
#include "psbp/model.hpp"
#include "psbp/sampler.hpp"

namespace psbp {

struct GridSpec {
  double lo = -96.0;
  double hi = 168.0;
  int points = 1001;
};

// One retained draw's mixture resolved at a predictor setting.
struct MixtureSnapshot {
  std::vector<double> weights;
  std::vector<double> mu;
  std::vector<double> phi;
};

// Pointwise posterior summary of a conditional density. cdf integrates the
// mean density by trapezoid. mixtures carries the per-draw closed forms
// when the estimate was built from posterior draws; loss and ratio
// summaries use them exactly instead of grid integration.
struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> cdf;
  std::vector<MixtureSnapshot> mixtures;
};

DensityEstimate estimate_from_snapshots(std::vector<MixtureSnapshot> snaps,
                                        const GridSpec& grid);

// Posterior predictive density at one setting. Throws std::domain_error on
// an empty draw set.
DensityEstimate predictive_density(const ShipmentRecord& x,
                                   const std::vector<PosteriorDraw>& draws,
                                   const ModelSpec& spec,
                                   const GridSpec& grid = {});

enum class LossKind { kExpectation, kThreshold, kQuadratic };

struct LossSpec {
  LossKind kind = LossKind::kExpectation;
  double scale = 1.0;  // the business cost constant
  double tau = 18.0;   // threshold for LossKind::kThreshold
};

struct IntervalSummary {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Posterior mean and central 95% interval of the loss, computed in closed
// form per draw from the stored mixtures.
IntervalSummary expected_loss(const DensityEstimate& density,
                              const LossSpec& loss);

struct ServiceCandidate {
  std::string id;
  ShipmentRecord setting;  // dev_start is forced to zero when ranking
};

struct RankedService {
  std::string id;
  IntervalSummary loss;
};

// Candidates ordered by ascending posterior mean loss; ties break on id.
std::vector<RankedService> optimal_service(
    const std::vector<ServiceCandidate>& candidates,
    const std::vector<PosteriorDraw>& draws, const ModelSpec& spec,
    const LossSpec& loss);

// Fields present are held fixed; absent fields are completed from the
// empirical records of the pool when marginalizing.
struct PartialSetting {
  std::optional<std::string> airline;
  std::optional<std::string> route;
  std::optional<std::string> month;
  std::optional<int> legs;
  std::optional<double> dev_start_days;
  std::optional<double> dur_days;
  std::optional<double> wgt_kg;
  std::optional<double> pcs;
};

// Density of y given the fixed fields, the rest integrated over their
// empirical distribution in pool (at most sample_cap records, subsampled
// deterministically from seed when the pool is larger).
DensityEstimate marginal_density(const PartialSetting& given,
                                 const Dataset& pool,
                                 const std::vector<PosteriorDraw>& draws,
                                 const ModelSpec& spec,
                                 const GridSpec& grid = {},
                                 std::size_t sample_cap = 2000,
                                 std::uint64_t seed = 1);

// Airline-specific baseline: the airline keeps its own effect, every other
// categorical block is averaged over its dictionary levels (unweighted,
// pinned zeros included) and continuous predictors sit at training means.
DensityEstimate baseline_distribution(const std::string& airline,
                                      const Dataset& train,
                                      const std::vector<PosteriorDraw>& draws,
                                      const ModelSpec& spec,
                                      const GridSpec& grid = {});

struct RatioSummary {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool from_draws = false;
};

// Newsvendor overage/underage ratio 1/F(0) - 1. Per-draw closed form when
// the estimate carries mixtures, otherwise interpolated from the grid cdf.
// Throws std::domain_error when F(0) is zero.
RatioSummary overage_underage_ratio(const DensityEstimate& baseline);

}  // namespace psbp
