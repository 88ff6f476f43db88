#include "psbp/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "psbp/stats.hpp"

namespace psbp {

namespace {

constexpr double kStickFloor = 1e-300;
constexpr double kStickCeil = 1.0 - 1e-16;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

const char* block_name(PredictorBlock b) {
  switch (b) {
    case PredictorBlock::kAirline: return "airline";
    case PredictorBlock::kRoute: return "route";
    case PredictorBlock::kAirlineRoute: return "airline_route";
    case PredictorBlock::kMonth: return "month";
    case PredictorBlock::kLegs: return "legs";
    case PredictorBlock::kAirlineLegs: return "airline_legs";
    case PredictorBlock::kDevStart: return "dev_start";
    case PredictorBlock::kDuration: return "duration";
    case PredictorBlock::kLogWgt: return "log_wgt";
    case PredictorBlock::kLogPcs: return "log_pcs";
  }
  throw std::logic_error("block_name: unknown block");
}

PredictorBlock block_from_name(const std::string& name) {
  static const std::vector<PredictorBlock> all = {
      PredictorBlock::kAirline,     PredictorBlock::kRoute,
      PredictorBlock::kAirlineRoute, PredictorBlock::kMonth,
      PredictorBlock::kLegs,        PredictorBlock::kAirlineLegs,
      PredictorBlock::kDevStart,    PredictorBlock::kDuration,
      PredictorBlock::kLogWgt,      PredictorBlock::kLogPcs};
  for (auto b : all)
    if (name == block_name(b)) return b;
  throw std::invalid_argument("unknown predictor block: " + name);
}

std::vector<PredictorBlock> default_blocks() {
  return {PredictorBlock::kAirline,      PredictorBlock::kRoute,
          PredictorBlock::kAirlineRoute, PredictorBlock::kMonth,
          PredictorBlock::kLegs,         PredictorBlock::kDevStart,
          PredictorBlock::kDuration,     PredictorBlock::kLogWgt};
}

SplineLayout default_spline_layout() {
  SplineLayout layout;
  layout.dev_start = {{-3, -2, -1, 0, 1, 2, 3}, 4, 0};
  layout.duration = {{1, 2, 4, 6, 8, 10}, 4, 0};
  layout.log_wgt = {{2, 4, 6, 8}, 4, 0};
  layout.log_pcs = {{1, 3, 5}, 4, 0};
  return layout;
}

void CategoryDict::build(const std::vector<std::string>& values) {
  std::set<std::string> uniq(values.begin(), values.end());
  levels.assign(uniq.begin(), uniq.end());
  index.clear();
  for (std::size_t i = 0; i < levels.size(); ++i)
    index[levels[i]] = static_cast<int>(i);
}

int CategoryDict::lookup(const std::string& v, bool strict) const {
  const auto it = index.find(v);
  if (it != index.end()) return it->second;
  if (strict) throw std::out_of_range("unknown category level: " + v);
  return -1;
}

void IntDict::build(const std::vector<int>& values) {
  std::set<int> uniq(values.begin(), values.end());
  levels.assign(uniq.begin(), uniq.end());
  index.clear();
  for (std::size_t i = 0; i < levels.size(); ++i)
    index[levels[i]] = static_cast<int>(i);
}

int IntDict::lookup(int v, bool strict) const {
  const auto it = index.find(v);
  if (it != index.end()) return it->second;
  if (strict)
    throw std::out_of_range("unknown category level: " + std::to_string(v));
  return -1;
}

void PairDict::build(const std::vector<std::pair<int, int>>& values) {
  std::set<std::pair<int, int>> uniq(values.begin(), values.end());
  levels.assign(uniq.begin(), uniq.end());
  index.clear();
  pinned.clear();
  pinned.reserve(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    index[levels[i]] = static_cast<int>(i);
    pinned.push_back(levels[i].first == 0 || levels[i].second == 0 ? 1 : 0);
  }
}

int PairDict::lookup(int a, int b) const {
  const auto it = index.find({a, b});
  return it == index.end() ? -1 : it->second;
}

std::size_t PairDict::free_count() const {
  std::size_t n = 0;
  for (char p : pinned)
    if (!p) ++n;
  return n;
}

bool ModelSpec::has(PredictorBlock b) const {
  return std::find(blocks.begin(), blocks.end(), b) != blocks.end();
}

ModelSpec make_model_spec(const Dataset& data, const ModelSpec& config) {
  if (config.components < 2 || config.components > 200)
    throw std::invalid_argument("components must lie in [2, 200]");
  if (data.records.empty())
    throw std::invalid_argument("cannot build a model spec from no records");
  ModelSpec spec = config;
  std::vector<std::string> airlines, routes, months;
  std::vector<int> legs;
  for (const auto& r : data.records) {
    airlines.push_back(r.airline);
    routes.push_back(r.route);
    months.push_back(r.month);
    legs.push_back(r.legs);
  }
  spec.airline.build(airlines);
  spec.route.build(routes);
  spec.month.build(months);
  spec.legs.build(legs);
  std::vector<std::pair<int, int>> ar, al;
  for (const auto& r : data.records) {
    ar.emplace_back(spec.airline.lookup(r.airline, true),
                    spec.route.lookup(r.route, true));
    al.emplace_back(spec.airline.lookup(r.airline, true),
                    spec.legs.lookup(r.legs, true));
  }
  spec.airline_route.build(ar);
  spec.airline_legs.build(al);
  return spec;
}

double level_prior_mean(int l, int components) {
  if (l >= components - 1) return 0.0;
  return normal_inv_cdf(1.0 / static_cast<double>(components - l));
}

WeightCoefficients make_prior_mean_coefficients(const ModelSpec& spec) {
  WeightCoefficients theta;
  const int L = spec.components;
  theta.level.assign(L, 0.0);
  for (int l = 0; l + 1 < L; ++l) theta.level[l] = level_prior_mean(l, L);
  theta.airline.assign(spec.airline.levels.size(), 0.0);
  theta.route.assign(spec.route.levels.size(), 0.0);
  theta.airline_route.assign(spec.airline_route.levels.size(), 0.0);
  theta.month.assign(spec.month.levels.size(), 0.0);
  theta.legs.assign(spec.legs.levels.size(), 0.0);
  theta.airline_legs.assign(spec.airline_legs.levels.size(), 0.0);
  theta.dev_start.assign(
      spec.has(PredictorBlock::kDevStart) ? spec.splines.dev_start.basis_count() : 0,
      spec.prior.spline_prior_mean);
  theta.duration.assign(
      spec.has(PredictorBlock::kDuration) ? spec.splines.duration.basis_count() : 0,
      spec.prior.spline_prior_mean);
  theta.log_wgt.assign(
      spec.has(PredictorBlock::kLogWgt) ? spec.splines.log_wgt.basis_count() : 0,
      spec.prior.spline_prior_mean);
  theta.log_pcs.assign(
      spec.has(PredictorBlock::kLogPcs) ? spec.splines.log_pcs.basis_count() : 0,
      spec.prior.spline_prior_mean);
  theta.eps.fill(spec.prior.c_eps / spec.prior.d_eps);
  return theta;
}

DesignPoint make_design_point(const ShipmentRecord& rec,
                              const ModelSpec& spec) {
  DesignPoint x;
  const bool strict = spec.strict_categories;
  if (spec.has(PredictorBlock::kAirline) ||
      spec.has(PredictorBlock::kAirlineRoute) ||
      spec.has(PredictorBlock::kAirlineLegs)) {
    const int a = spec.airline.lookup(rec.airline, strict);
    if (spec.has(PredictorBlock::kAirline)) x.airline = a;
    if (spec.has(PredictorBlock::kAirlineRoute) && a >= 0) {
      const int r = spec.route.lookup(rec.route, strict);
      if (r >= 0) x.pair = spec.airline_route.lookup(a, r);
    }
    if (spec.has(PredictorBlock::kAirlineLegs) && a >= 0) {
      const int g = spec.legs.lookup(rec.legs, strict);
      if (g >= 0) x.airline_legs = spec.airline_legs.lookup(a, g);
    }
  }
  if (spec.has(PredictorBlock::kRoute))
    x.route = spec.route.lookup(rec.route, strict);
  if (spec.has(PredictorBlock::kMonth))
    x.month = spec.month.lookup(rec.month, strict);
  if (spec.has(PredictorBlock::kLegs))
    x.legs = spec.legs.lookup(rec.legs, strict);
  if (spec.has(PredictorBlock::kDevStart))
    x.dev_row = basis_eval(spec.splines.dev_start, rec.dev_start_days);
  if (spec.has(PredictorBlock::kDuration))
    x.dur_row = basis_eval(spec.splines.duration, rec.dur_days);
  if (spec.has(PredictorBlock::kLogWgt))
    x.wgt_row = basis_eval(spec.splines.log_wgt, rec.log_wgt);
  if (spec.has(PredictorBlock::kLogPcs))
    x.pcs_row = basis_eval(spec.splines.log_pcs, rec.log_pcs);
  return x;
}

double shared_predictor(const DesignPoint& x, const WeightCoefficients& theta) {
  double g = 0.0;
  if (x.airline >= 0) g += theta.airline[x.airline];
  if (x.route >= 0) g += theta.route[x.route];
  if (x.pair >= 0) g += theta.airline_route[x.pair];
  if (x.month >= 0) g += theta.month[x.month];
  if (x.legs >= 0) g += theta.legs[x.legs];
  if (x.airline_legs >= 0) g += theta.airline_legs[x.airline_legs];
  if (!x.dev_row.empty()) g += dot(x.dev_row, theta.dev_start);
  if (!x.dur_row.empty()) g += dot(x.dur_row, theta.duration);
  if (!x.wgt_row.empty()) g += dot(x.wgt_row, theta.log_wgt);
  if (!x.pcs_row.empty()) g += dot(x.pcs_row, theta.log_pcs);
  return g;
}

double gamma_predictor(const ShipmentRecord& rec, int l,
                       const WeightCoefficients& theta,
                       const ModelSpec& spec) {
  if (l < 0 || l >= spec.components)
    throw std::domain_error("gamma_predictor: stick index out of range");
  return theta.level[l] + shared_predictor(make_design_point(rec, spec), theta);
}

double stick_value(double gamma) {
  const double u = normal_cdf(gamma);
  return std::min(std::max(u, kStickFloor), kStickCeil);
}

std::vector<double> stick_breaking_weights(const std::vector<double>& gamma) {
  if (gamma.empty())
    throw std::domain_error("stick_breaking_weights: empty gamma");
  const std::size_t L = gamma.size();
  std::vector<double> w(L);
  double remaining = 1.0;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    const double u = stick_value(gamma[l]);
    w[l] = u * remaining;
    remaining *= 1.0 - u;
  }
  w[L - 1] = remaining;
  return w;
}

void mixture_weights(const DesignPoint& x, const WeightCoefficients& theta,
                     int components, std::vector<double>& out) {
  const double shared = shared_predictor(x, theta);
  out.resize(components);
  double remaining = 1.0;
  for (int l = 0; l + 1 < components; ++l) {
    const double u = stick_value(theta.level[l] + shared);
    out[l] = u * remaining;
    remaining *= 1.0 - u;
  }
  out[components - 1] = remaining;
}

double mixture_density(double y, const std::vector<double>& weights,
                       const MixtureKernel& kernel) {
  double f = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    f += weights[l] * std::exp(log_normal_pdf(y, kernel.mu[l], kernel.phi[l]));
  return f;
}

double mixture_cdf(double y, const std::vector<double>& weights,
                   const MixtureKernel& kernel) {
  double f = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    f += weights[l] *
         normal_cdf((y - kernel.mu[l]) * std::sqrt(kernel.phi[l]));
  return f;
}

}  // namespace psbp
