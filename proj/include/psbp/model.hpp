#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "psbp/bspline.hpp"
#include "psbp/data.hpp"
#include "psbp/record.hpp"

namespace psbp {

// Predictor blocks of the weight model. The kernel atoms are separate.
enum class PredictorBlock {
  kAirline,
  kRoute,
  kAirlineRoute,
  kMonth,
  kLegs,
  kAirlineLegs,
  kDevStart,
  kDuration,
  kLogWgt,
  kLogPcs,
};

const char* block_name(PredictorBlock b);
PredictorBlock block_from_name(const std::string& name);

// Blocks of the selected model: interaction with legs and the pieces spline
// are left out by default but can be enabled through the config.
std::vector<PredictorBlock> default_blocks();

// Default knot layouts for the four smooth terms.
SplineLayout default_spline_layout();

struct PriorConfig {
  double zeta_mu = -2.64;      // kernel mean center
  double xi_mu = 1.0 / 189.6;  // kernel mean precision multiplier
  double a_phi = 1.25;
  double b_phi = 47.5;
  double c_eps = 6.0;  // hyperprior on block precisions
  double d_eps = 5.0;
  double spline_prior_mean = 0.0;
  double spline_prior_precision = 1.0;  // fixed, no hyperprior
};

struct CategoryDict {
  std::vector<std::string> levels;  // sorted ascending; [0] is the reference
  std::unordered_map<std::string, int> index;

  void build(const std::vector<std::string>& values);
  // -1 for a level unseen at build time (effect zero); throws
  // std::out_of_range instead when strict is set.
  int lookup(const std::string& v, bool strict) const;
};

struct IntDict {
  std::vector<int> levels;
  std::unordered_map<int, int> index;

  void build(const std::vector<int>& values);
  int lookup(int v, bool strict) const;
};

// Interaction levels over observed index pairs. Levels touching either
// reference index are pinned to zero by the identification constraints.
struct PairDict {
  std::vector<std::pair<int, int>> levels;
  std::map<std::pair<int, int>, int> index;
  std::vector<char> pinned;

  void build(const std::vector<std::pair<int, int>>& values);
  int lookup(int a, int b) const;  // -1 when the pair was not observed
  std::size_t free_count() const;
};

struct ModelSpec {
  int components = 50;
  std::vector<PredictorBlock> blocks = default_blocks();
  SplineLayout splines = default_spline_layout();
  PriorConfig prior;
  bool strict_categories = false;

  CategoryDict airline;
  CategoryDict route;
  CategoryDict month;
  IntDict legs;
  PairDict airline_route;
  PairDict airline_legs;

  bool has(PredictorBlock b) const;
};

// Dictionary construction from the training data. Components must lie in
// [2, 200]; throws std::invalid_argument otherwise.
ModelSpec make_model_spec(const Dataset& data, const ModelSpec& config);

// Weight-model coefficients. level is theta^1 with length L; the final
// entry corresponds to the remainder stick, is pinned at zero and never
// updated. eps holds the sampled block precisions in block order: level,
// airline, route, airline-route, month, legs, airline-legs.
struct WeightCoefficients {
  std::vector<double> level;
  std::vector<double> airline;
  std::vector<double> route;
  std::vector<double> airline_route;
  std::vector<double> month;
  std::vector<double> legs;
  std::vector<double> airline_legs;
  std::vector<double> dev_start;
  std::vector<double> duration;
  std::vector<double> log_wgt;
  std::vector<double> log_pcs;
  std::array<double, 7> eps{};
};

WeightCoefficients make_prior_mean_coefficients(const ModelSpec& spec);

// Prior mean of theta^1 for 0-based stick index l: Phi^-1(1/(L - l)).
double level_prior_mean(int l, int components);

struct MixtureKernel {
  std::vector<double> mu;
  std::vector<double> phi;
};

// Per-record design information resolved against the dictionaries: category
// indices (-1 when the block is disabled or the level unseen) and dense
// spline rows for the enabled smooth terms.
struct DesignPoint {
  int airline = -1;
  int route = -1;
  int pair = -1;
  int month = -1;
  int legs = -1;
  int airline_legs = -1;
  std::vector<double> dev_row;
  std::vector<double> dur_row;
  std::vector<double> wgt_row;
  std::vector<double> pcs_row;
};

DesignPoint make_design_point(const ShipmentRecord& rec, const ModelSpec& spec);

// Everything in the linear predictor except the stick intercept theta^1_l.
double shared_predictor(const DesignPoint& x, const WeightCoefficients& theta);

// gamma_l(x) for 0-based stick index l.
double gamma_predictor(const ShipmentRecord& rec, int l,
                       const WeightCoefficients& theta, const ModelSpec& spec);

// Probit stick values Phi(gamma_l), clamped to [1e-300, 1 - 1e-16].
double stick_value(double gamma);

// Stick-breaking weights from the predictors gamma_1..gamma_L. The final
// entry of gamma is ignored: the last stick takes the remaining mass, so
// the weights form an exact simplex by construction.
std::vector<double> stick_breaking_weights(const std::vector<double>& gamma);

// Weights at a design point: gamma_l = theta.level[l] + shared predictor.
void mixture_weights(const DesignPoint& x, const WeightCoefficients& theta,
                     int components, std::vector<double>& out);

double mixture_density(double y, const std::vector<double>& weights,
                       const MixtureKernel& kernel);
double mixture_cdf(double y, const std::vector<double>& weights,
                   const MixtureKernel& kernel);

}  // namespace psbp
