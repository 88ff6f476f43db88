#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "psbp/data.hpp"
#include "psbp/model.hpp"
#include "psbp/rng.hpp"

namespace psbp {

struct SamplerConfig {
  std::int64_t iterations = 20000;
  std::int64_t burn_in = 10000;
  std::int64_t thinning = 10;
  int label_moves_per_sweep = -1;  // -1: one per adjacent pair (L - 1)
  int workers = 1;
  std::uint64_t seed = 1;
  std::uint64_t stream_id = 0;
};

// Records resolved against the dictionaries, plus per-level membership
// lists so block updates run in one pass over their own records.
struct PreparedData {
  std::vector<double> y;
  std::vector<DesignPoint> x;
  std::vector<std::vector<int>> by_airline;
  std::vector<std::vector<int>> by_route;
  std::vector<std::vector<int>> by_pair;
  std::vector<std::vector<int>> by_month;
  std::vector<std::vector<int>> by_legs;
  std::vector<std::vector<int>> by_airline_legs;

  std::size_t n() const { return y.size(); }
};

PreparedData prepare_data(const Dataset& data, const ModelSpec& spec);

// Full Gibbs state. Labels s are 0-based; the latent row z[j] covers stick
// positions 0..min(s_j, L-2), negative below the label and non-negative at
// it. iteration counts completed sweeps.
struct ChainState {
  std::int64_t iteration = 0;
  MixtureKernel kernel;
  WeightCoefficients theta;
  std::vector<int> s;
  std::vector<std::vector<double>> z;
  RngStream rng{0, 0};
};

ChainState init_chain_state(const PreparedData& data, const ModelSpec& spec,
                            const SamplerConfig& cfg);

// Blocked draws from the full conditionals, in the fixed sweep order below.
void update_kernel_params(ChainState& st, const PreparedData& data,
                          const ModelSpec& spec);
void update_indicators(ChainState& st, const PreparedData& data,
                       const ModelSpec& spec, int workers = 1);
void update_augmentation(ChainState& st, const PreparedData& data,
                         const ModelSpec& spec, int workers = 1);
void update_weight_coefficients(ChainState& st, const PreparedData& data,
                                const ModelSpec& spec);
void update_hyper_precisions(ChainState& st, const PreparedData& data,
                             const ModelSpec& spec);

// Deterministic part of swapping adjacent labels (l, l+1): kernel atoms,
// stick intercepts when both sticks exist, labels, and the z entries whose
// constraints are unchanged. Applying it twice restores the state exactly.
void apply_label_swap(ChainState& st, int l);

// Metropolis move proposing the swap above; the z entries of relabeled
// observations are redrawn from their truncated-normal conditionals on
// acceptance. Returns whether the proposal was accepted. force_accept is a
// test hook that skips the ratio.
bool label_switch_move(ChainState& st, const PreparedData& data,
                       const ModelSpec& spec, int l,
                       bool force_accept = false);

struct SweepCounters {
  std::int64_t label_attempted = 0;
  std::int64_t label_accepted = 0;
};

// One full sweep: kernel, indicators, augmentation, weight coefficients,
// hyper precisions, label moves.
void sweep(ChainState& st, const PreparedData& data, const ModelSpec& spec,
           const SamplerConfig& cfg, SweepCounters* counters = nullptr);

struct PosteriorDraw {
  std::vector<double> mu;
  std::vector<double> phi;
  WeightCoefficients theta;
};

struct FitResult {
  std::vector<PosteriorDraw> draws;
  ChainState state;
  SweepCounters counters;
};

using SweepCallback = std::function<void(const FitResult&)>;

// Runs the chain to cfg.iterations, retaining every thinning-th draw after
// burn_in. Pass a previous FitResult to resume exactly where it stopped;
// the completed run is bit-identical to an uninterrupted one. The callback,
// when given, fires after every sweep (checkpoint hook).
FitResult run_chain(const PreparedData& data, const ModelSpec& spec,
                    const SamplerConfig& cfg,
                    const FitResult* resume = nullptr,
                    const SweepCallback& after_sweep = nullptr);

// Throws std::logic_error when a structural invariant is violated: sizes,
// z sign pattern, pinned reference coefficients, positive precisions.
void check_state_invariants(const ChainState& st, const PreparedData& data,
                            const ModelSpec& spec);

}  // namespace psbp
