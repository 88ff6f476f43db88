#pragma once

#include <cstddef>
#include <vector>

#include "psbp/record.hpp"

namespace psbp {

// Knot layout for one smooth term. `knots` lists boundary and interior
// knots in strictly increasing order; the extended vector replicates each
// end knot `end_replication` times in total (0 means replicate to the
// order, the clamped default).
struct KnotSpec {
  std::vector<double> knots;
  int order = 4;
  int end_replication = 0;

  int replication() const { return end_replication > 0 ? end_replication : order; }
  std::vector<double> extended_knots() const;
  std::size_t basis_count() const;
  double span_begin() const { return knots.front(); }
  double span_end() const { return knots.back(); }
};

// All basis functions at x. Outside [span_begin, span_end] the row is all
// zeros; the right endpoint counts as inside. Throws std::invalid_argument
// for malformed specs (order < 1, fewer than two knots, non-increasing).
std::vector<double> basis_eval(const KnotSpec& spec, double x);

// Concatenated spline design row over the four continuous predictors, in
// order: dev_start_days, dur_days, log(wgt), log(pcs).
struct SplineLayout {
  KnotSpec dev_start;
  KnotSpec duration;
  KnotSpec log_wgt;
  KnotSpec log_pcs;
};

std::vector<double> design_row(const ShipmentRecord& rec,
                               const SplineLayout& layout);

}  // namespace psbp
