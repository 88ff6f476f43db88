#include "psbp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "psbp/model.hpp"
#include "psbp/rng.hpp"
#include "psbp/stats.hpp"

namespace psbp {

namespace {

double effect_at(const std::vector<double>& effects, std::size_t idx,
                 std::size_t levels, const char* what) {
  if (effects.empty()) return 0.0;
  if (effects.size() != levels)
    throw std::invalid_argument(std::string("synth: ") + what +
                                " effect length does not match levels");
  if (effects[0] != 0.0)
    throw std::invalid_argument(std::string("synth: ") + what +
                                " reference effect must be zero");
  return effects[idx];
}

void validate(const SynthSpec& spec) {
  const std::size_t L = spec.true_mu.size();
  if (L < 1 || spec.true_phi.size() != L)
    throw std::invalid_argument("synth: mu and phi must align and be nonempty");
  for (double p : spec.true_phi)
    if (!(p > 0.0)) throw std::invalid_argument("synth: phi must be positive");
  if (spec.level.size() + 1 != L)
    throw std::invalid_argument("synth: level must have length L - 1");
  if (spec.airlines.empty() || spec.routes.empty() || spec.months.empty() ||
      spec.legs.empty())
    throw std::invalid_argument("synth: empty cell dimension");
  if (spec.records_per_cell < 1)
    throw std::invalid_argument("synth: records_per_cell must be positive");
  if (!(spec.dur_hi > spec.dur_lo))
    throw std::invalid_argument("synth: duration range is empty");
}

}  // namespace

double truth_density(const SynthTruth& truth, std::size_t cell, double y) {
  if (cell >= truth.cells.size())
    throw std::out_of_range("truth_density: cell index out of range");
  const auto& w = truth.cells[cell].weights;
  double f = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l)
    f += w[l] * std::exp(log_normal_pdf(y, truth.mu[l], truth.phi[l]));
  return f;
}

SynthResult synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  validate(spec);
  const std::size_t L = spec.true_mu.size();

  SynthResult out;
  out.truth.mu = spec.true_mu;
  out.truth.phi = spec.true_phi;

  RngStream rng(seed, 0xD47A);
  std::vector<double> gamma(L, 0.0);
  for (std::size_t ia = 0; ia < spec.airlines.size(); ++ia) {
    for (std::size_t ir = 0; ir < spec.routes.size(); ++ir) {
      for (std::size_t im = 0; im < spec.months.size(); ++im) {
        for (std::size_t ig = 0; ig < spec.legs.size(); ++ig) {
          const double shared =
              effect_at(spec.airline_effect, ia, spec.airlines.size(),
                        "airline") +
              effect_at(spec.route_effect, ir, spec.routes.size(), "route") +
              effect_at(spec.month_effect, im, spec.months.size(), "month") +
              effect_at(spec.legs_effect, ig, spec.legs.size(), "legs");
          for (std::size_t l = 0; l + 1 < L; ++l)
            gamma[l] = spec.level[l] + shared;

          SynthCellTruth cell;
          cell.airline = spec.airlines[ia];
          cell.route = spec.routes[ir];
          cell.month = spec.months[im];
          cell.legs = spec.legs[ig];
          cell.weights = stick_breaking_weights(gamma);
          out.truth.cells.push_back(cell);

          for (int r = 0; r < spec.records_per_cell; ++r) {
            const double u = rng.uniform();
            std::size_t comp = L - 1;
            double acc = 0.0;
            for (std::size_t l = 0; l < L; ++l) {
              acc += cell.weights[l];
              if (u < acc) {
                comp = l;
                break;
              }
            }

            ShipmentRecord rec;
            rec.airline = cell.airline;
            rec.route = cell.route;
            rec.month = cell.month;
            rec.legs = cell.legs;
            rec.y_hours = rng.normal(spec.true_mu[comp], spec.true_phi[comp]);
            rec.dev_start_days =
                std::clamp(rng.normal() * spec.dev_sd, -3.0, 3.0);
            rec.dur_days =
                spec.dur_lo + rng.uniform() * (spec.dur_hi - spec.dur_lo);
            rec.wgt_kg =
                std::exp(spec.log_wgt_mean + spec.log_wgt_sd * rng.normal());
            rec.pcs = std::max(
                1.0,
                std::exp(spec.log_pcs_mean + spec.log_pcs_sd * rng.normal()));
            rec.log_wgt = std::log(rec.wgt_kg);
            rec.log_pcs = std::log(rec.pcs);
            out.data.records.push_back(rec);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace psbp
