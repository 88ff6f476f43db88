#include "psbp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "psbp/diagnostics.hpp"
#include "psbp/rng.hpp"
#include "psbp/stats.hpp"

namespace psbp {

namespace {

std::vector<double> make_grid(const GridSpec& grid) {
  if (grid.points < 2)
    throw std::invalid_argument("grid needs at least two points");
  if (!(grid.hi > grid.lo))
    throw std::invalid_argument("grid upper bound must exceed lower bound");
  std::vector<double> g(grid.points);
  const double step = (grid.hi - grid.lo) / (grid.points - 1);
  for (int i = 0; i < grid.points; ++i) g[i] = grid.lo + step * i;
  g.back() = grid.hi;
  return g;
}

IntervalSummary summarize(const std::vector<double>& values) {
  IntervalSummary s;
  double m = 0.0;
  for (double v : values) m += v;
  s.mean = m / values.size();
  s.lower = quantile(values, 0.025);
  s.upper = quantile(values, 0.975);
  return s;
}

double snapshot_loss(const MixtureSnapshot& snap, const LossSpec& loss) {
  const std::size_t L = snap.weights.size();
  double v = 0.0;
  switch (loss.kind) {
    case LossKind::kExpectation:
      for (std::size_t l = 0; l < L; ++l) v += snap.weights[l] * snap.mu[l];
      break;
    case LossKind::kThreshold:
      for (std::size_t l = 0; l < L; ++l)
        v += snap.weights[l] *
             normal_sf((loss.tau - snap.mu[l]) * std::sqrt(snap.phi[l]));
      break;
    case LossKind::kQuadratic:
      for (std::size_t l = 0; l < L; ++l)
        v += snap.weights[l] *
             (snap.mu[l] * snap.mu[l] + 1.0 / snap.phi[l]);
      break;
  }
  return loss.scale * v;
}

std::vector<double> per_draw_losses(const std::vector<MixtureSnapshot>& snaps,
                                    const LossSpec& loss) {
  std::vector<double> out(snaps.size());
  for (std::size_t d = 0; d < snaps.size(); ++d)
    out[d] = snapshot_loss(snaps[d], loss);
  return out;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i)
    s += 0.5 * (f[i - 1] + f[i]) * (x[i] - x[i - 1]);
  return s;
}

// cdf value at y by linear interpolation on the grid, clamped to the ends.
double grid_cdf_at(const DensityEstimate& d, double y) {
  const auto& g = d.grid;
  if (y <= g.front()) return d.cdf.front();
  if (y >= g.back()) return d.cdf.back();
  const auto it = std::upper_bound(g.begin(), g.end(), y);
  const std::size_t i = it - g.begin();
  const double t = (y - g[i - 1]) / (g[i] - g[i - 1]);
  return d.cdf[i - 1] * (1.0 - t) + d.cdf[i] * t;
}

MixtureKernel snapshot_kernel(const MixtureSnapshot& snap) {
  return MixtureKernel{snap.mu, snap.phi};
}

}  // namespace

DensityEstimate estimate_from_snapshots(std::vector<MixtureSnapshot> snaps,
                                        const GridSpec& grid) {
  if (snaps.empty())
    throw std::domain_error("density estimate needs at least one draw");
  for (const auto& s : snaps)
    if (s.weights.empty() || s.weights.size() != s.mu.size() ||
        s.mu.size() != s.phi.size())
      throw std::invalid_argument("misaligned mixture snapshot");

  DensityEstimate est;
  est.grid = make_grid(grid);
  const std::size_t points = est.grid.size();
  const std::size_t n_draws = snaps.size();

  std::vector<double> values(points * n_draws);
  est.mean.assign(points, 0.0);
  for (std::size_t d = 0; d < n_draws; ++d) {
    const MixtureKernel kernel = snapshot_kernel(snaps[d]);
    for (std::size_t i = 0; i < points; ++i) {
      const double f = mixture_density(est.grid[i], snaps[d].weights, kernel);
      values[i * n_draws + d] = f;
      est.mean[i] += f;
    }
  }
  for (double& m : est.mean) m /= n_draws;

  est.lower.resize(points);
  est.upper.resize(points);
  std::vector<double> column(n_draws);
  for (std::size_t i = 0; i < points; ++i) {
    std::copy(values.begin() + i * n_draws,
              values.begin() + (i + 1) * n_draws, column.begin());
    est.lower[i] = quantile(column, 0.025);
    est.upper[i] = quantile(column, 0.975);
  }

  est.cdf.assign(points, 0.0);
  for (std::size_t i = 1; i < points; ++i)
    est.cdf[i] = est.cdf[i - 1] + 0.5 * (est.mean[i - 1] + est.mean[i]) *
                                      (est.grid[i] - est.grid[i - 1]);

  est.mixtures = std::move(snaps);
  return est;
}

DensityEstimate predictive_density(const ShipmentRecord& x,
                                   const std::vector<PosteriorDraw>& draws,
                                   const ModelSpec& spec,
                                   const GridSpec& grid) {
  if (draws.empty())
    throw std::domain_error("predictive density needs posterior draws");
  const DesignPoint dp = make_design_point(x, spec);
  std::vector<MixtureSnapshot> snaps(draws.size());
  for (std::size_t d = 0; d < draws.size(); ++d) {
    mixture_weights(dp, draws[d].theta, spec.components, snaps[d].weights);
    snaps[d].mu = draws[d].mu;
    snaps[d].phi = draws[d].phi;
  }
  return estimate_from_snapshots(std::move(snaps), grid);
}

IntervalSummary expected_loss(const DensityEstimate& density,
                              const LossSpec& loss) {
  if (!(loss.scale > 0.0))
    throw std::invalid_argument("loss scale must be positive");
  if (!density.mixtures.empty())
    return summarize(per_draw_losses(density.mixtures, loss));

  // Grid fallback: integrate the mean density, no draw spread available.
  if (density.grid.size() < 2)
    throw std::invalid_argument("density estimate has no usable grid");
  const std::size_t points = density.grid.size();
  std::vector<double> integrand(points);
  double v = 0.0;
  switch (loss.kind) {
    case LossKind::kExpectation:
      for (std::size_t i = 0; i < points; ++i)
        integrand[i] = density.grid[i] * density.mean[i];
      v = trapezoid(density.grid, integrand);
      break;
    case LossKind::kThreshold:
      v = density.cdf.back() - grid_cdf_at(density, loss.tau);
      break;
    case LossKind::kQuadratic:
      for (std::size_t i = 0; i < points; ++i)
        integrand[i] = density.grid[i] * density.grid[i] * density.mean[i];
      v = trapezoid(density.grid, integrand);
      break;
  }
  v *= loss.scale;
  return IntervalSummary{v, v, v};
}

std::vector<RankedService> optimal_service(
    const std::vector<ServiceCandidate>& candidates,
    const std::vector<PosteriorDraw>& draws, const ModelSpec& spec,
    const LossSpec& loss) {
  if (draws.empty())
    throw std::domain_error("service ranking needs posterior draws");
  std::vector<RankedService> ranked;
  ranked.reserve(candidates.size());
  std::vector<double> losses(draws.size());
  std::vector<double> w;
  for (const auto& cand : candidates) {
    ShipmentRecord setting = cand.setting;
    setting.dev_start_days = 0.0;
    const DesignPoint dp = make_design_point(setting, spec);
    for (std::size_t d = 0; d < draws.size(); ++d) {
      mixture_weights(dp, draws[d].theta, spec.components, w);
      losses[d] = snapshot_loss(
          MixtureSnapshot{w, draws[d].mu, draws[d].phi}, loss);
    }
    ranked.push_back(RankedService{cand.id, summarize(losses)});
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedService& a, const RankedService& b) {
              if (a.loss.mean != b.loss.mean) return a.loss.mean < b.loss.mean;
              return a.id < b.id;
            });
  return ranked;
}

DensityEstimate marginal_density(const PartialSetting& given,
                                 const Dataset& pool,
                                 const std::vector<PosteriorDraw>& draws,
                                 const ModelSpec& spec, const GridSpec& grid,
                                 std::size_t sample_cap, std::uint64_t seed) {
  if (draws.empty())
    throw std::domain_error("marginal density needs posterior draws");
  if (pool.records.empty())
    throw std::domain_error("marginal density needs a completion pool");
  if (sample_cap == 0)
    throw std::invalid_argument("sample_cap must be positive");

  std::vector<std::size_t> idx(pool.records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (idx.size() > sample_cap) {
    RngStream rng(seed, 0xCAFE);
    for (std::size_t i = 0; i < sample_cap; ++i) {
      const std::size_t j = i + rng.uniform_index(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(sample_cap);
    std::sort(idx.begin(), idx.end());
  }

  std::vector<DesignPoint> points;
  points.reserve(idx.size());
  for (std::size_t i : idx) {
    ShipmentRecord rec = pool.records[i];
    if (given.airline) rec.airline = *given.airline;
    if (given.route) rec.route = *given.route;
    if (given.month) rec.month = *given.month;
    if (given.legs) rec.legs = *given.legs;
    if (given.dev_start_days) rec.dev_start_days = *given.dev_start_days;
    if (given.dur_days) rec.dur_days = *given.dur_days;
    if (given.wgt_kg) {
      if (!(*given.wgt_kg > 0.0))
        throw std::invalid_argument("marginal density: wgt_kg must be positive");
      rec.wgt_kg = *given.wgt_kg;
      rec.log_wgt = std::log(rec.wgt_kg);
    }
    if (given.pcs) {
      if (!(*given.pcs > 0.0))
        throw std::invalid_argument("marginal density: pcs must be positive");
      rec.pcs = *given.pcs;
      rec.log_pcs = std::log(rec.pcs);
    }
    points.push_back(make_design_point(rec, spec));
  }

  // Kernels do not depend on the predictors, so integrating over the pool
  // reduces to averaging the weight vectors before forming one mixture.
  std::vector<MixtureSnapshot> snaps(draws.size());
  std::vector<double> w;
  for (std::size_t d = 0; d < draws.size(); ++d) {
    std::vector<double> avg(spec.components, 0.0);
    for (const auto& dp : points) {
      mixture_weights(dp, draws[d].theta, spec.components, w);
      for (int l = 0; l < spec.components; ++l) avg[l] += w[l];
    }
    for (double& a : avg) a /= points.size();
    snaps[d].weights = std::move(avg);
    snaps[d].mu = draws[d].mu;
    snaps[d].phi = draws[d].phi;
  }
  return estimate_from_snapshots(std::move(snaps), grid);
}

DensityEstimate baseline_distribution(const std::string& airline,
                                      const Dataset& train,
                                      const std::vector<PosteriorDraw>& draws,
                                      const ModelSpec& spec,
                                      const GridSpec& grid) {
  if (draws.empty())
    throw std::domain_error("baseline distribution needs posterior draws");
  if (train.records.empty())
    throw std::domain_error("baseline distribution needs training records");
  const int a_idx = spec.airline.lookup(airline, true);

  double dev = 0.0, dur = 0.0, lw = 0.0, lp = 0.0;
  for (const auto& rec : train.records) {
    dev += rec.dev_start_days;
    dur += rec.dur_days;
    lw += rec.log_wgt;
    lp += rec.log_pcs;
  }
  const double n = static_cast<double>(train.records.size());
  dev /= n;
  dur /= n;
  lw /= n;
  lp /= n;

  const auto mean_of = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
  };

  std::vector<double> dev_row, dur_row, wgt_row, pcs_row;
  if (spec.has(PredictorBlock::kDevStart))
    dev_row = basis_eval(spec.splines.dev_start, dev);
  if (spec.has(PredictorBlock::kDuration))
    dur_row = basis_eval(spec.splines.duration, dur);
  if (spec.has(PredictorBlock::kLogWgt))
    wgt_row = basis_eval(spec.splines.log_wgt, lw);
  if (spec.has(PredictorBlock::kLogPcs))
    pcs_row = basis_eval(spec.splines.log_pcs, lp);

  const auto dot = [](const std::vector<double>& row,
                      const std::vector<double>& coef) {
    double s = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) s += row[i] * coef[i];
    return s;
  };

  std::vector<MixtureSnapshot> snaps(draws.size());
  std::vector<double> gamma(spec.components, 0.0);
  for (std::size_t d = 0; d < draws.size(); ++d) {
    const WeightCoefficients& th = draws[d].theta;
    double shared = 0.0;
    if (spec.has(PredictorBlock::kAirline)) shared += th.airline[a_idx];
    if (spec.has(PredictorBlock::kRoute)) shared += mean_of(th.route);
    if (spec.has(PredictorBlock::kAirlineRoute))
      shared += mean_of(th.airline_route);
    if (spec.has(PredictorBlock::kMonth)) shared += mean_of(th.month);
    if (spec.has(PredictorBlock::kLegs)) shared += mean_of(th.legs);
    if (spec.has(PredictorBlock::kAirlineLegs))
      shared += mean_of(th.airline_legs);
    shared += dot(dev_row, th.dev_start) + dot(dur_row, th.duration) +
              dot(wgt_row, th.log_wgt) + dot(pcs_row, th.log_pcs);

    for (int l = 0; l + 1 < spec.components; ++l)
      gamma[l] = th.level[l] + shared;
    snaps[d].weights = stick_breaking_weights(gamma);
    snaps[d].mu = draws[d].mu;
    snaps[d].phi = draws[d].phi;
  }
  return estimate_from_snapshots(std::move(snaps), grid);
}

RatioSummary overage_underage_ratio(const DensityEstimate& baseline) {
  RatioSummary out;
  if (!baseline.mixtures.empty()) {
    std::vector<double> ratios(baseline.mixtures.size());
    for (std::size_t d = 0; d < baseline.mixtures.size(); ++d) {
      const auto& snap = baseline.mixtures[d];
      const double f0 = mixture_cdf(0.0, snap.weights, snapshot_kernel(snap));
      if (!(f0 > 0.0))
        throw std::domain_error(
            "overage ratio undefined: no on-time mass at zero");
      ratios[d] = 1.0 / f0 - 1.0;
    }
    const IntervalSummary s = summarize(ratios);
    out.mean = s.mean;
    out.lower = s.lower;
    out.upper = s.upper;
    out.from_draws = true;
    return out;
  }
  if (baseline.grid.size() < 2)
    throw std::invalid_argument("density estimate has no usable grid");
  const double f0 = grid_cdf_at(baseline, 0.0);
  if (!(f0 > 0.0))
    throw std::domain_error("overage ratio undefined: no on-time mass at zero");
  out.mean = out.lower = out.upper = 1.0 / f0 - 1.0;
  out.from_draws = false;
  return out;
}

}  // namespace psbp
