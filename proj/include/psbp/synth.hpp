#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psbp/data.hpp"

namespace psbp {

// Generating truth for synthetic benchmarks: a finite probit stick-breaking
// mixture whose weights vary by categorical cell. Effect vectors align with
// the level lists; entry 0 is the reference and must be zero. Continuous
// predictors are generated but carry no effect, so each cell has an exact
// known density.
struct SynthSpec {
  std::vector<std::string> airlines = {"A1", "A2"};
  std::vector<std::string> routes = {"R1", "R2"};
  std::vector<std::string> months = {"m01"};
  std::vector<int> legs = {1};
  int records_per_cell = 125;

  std::vector<double> true_mu = {0.0, 24.0, 48.0};
  std::vector<double> true_phi = {1.0 / 9.0, 1.0 / 16.0, 1.0 / 25.0};
  std::vector<double> level = {0.2, 0.4};  // stick intercepts, length L-1
  std::vector<double> airline_effect = {0.0, 0.8};
  std::vector<double> route_effect = {0.0, -0.6};
  std::vector<double> month_effect;  // empty means all zero
  std::vector<double> legs_effect;

  double dev_sd = 1.0;       // clipped to the default knot span
  double dur_lo = 1.0;
  double dur_hi = 10.0;
  double log_wgt_mean = 4.5;
  double log_wgt_sd = 0.8;
  double log_pcs_mean = 2.0;
  double log_pcs_sd = 0.7;
};

struct SynthCellTruth {
  std::string airline;
  std::string route;
  std::string month;
  int legs = 1;
  std::vector<double> weights;
};

struct SynthTruth {
  std::vector<double> mu;
  std::vector<double> phi;
  std::vector<SynthCellTruth> cells;
};

double truth_density(const SynthTruth& truth, std::size_t cell, double y);

struct SynthResult {
  Dataset data;
  SynthTruth truth;
};

SynthResult synth_generate(const SynthSpec& spec, std::uint64_t seed);

}  // namespace psbp
