#include "psbp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>

#include "psbp/archive.hpp"
#include "psbp/diagnostics.hpp"
#include "psbp/rng.hpp"
#include "psbp/stats.hpp"

namespace psbp {

namespace {

double log_mixture_density(double y, const std::vector<double>& w,
                           const std::vector<double>& mu,
                           const std::vector<double>& phi) {
  double mx = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(w.size());
  for (std::size_t l = 0; l < w.size(); ++l) {
    terms[l] = (w[l] > 0.0 ? std::log(w[l]) + log_normal_pdf(y, mu[l], phi[l])
                           : -std::numeric_limits<double>::infinity());
    mx = std::max(mx, terms[l]);
  }
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

double log_mean_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s / v.size());
}

PpcStatistic summarize_stat(const char* name, double observed,
                            const std::vector<double>& reps) {
  PpcStatistic st;
  st.name = name;
  st.observed = observed;
  double m = 0.0;
  for (double v : reps) m += v;
  st.rep_mean = m / reps.size();
  st.rep_lower = quantile(reps, 0.025);
  st.rep_upper = quantile(reps, 0.975);

  const int bins = 20;
  const double lo = *std::min_element(reps.begin(), reps.end());
  const double hi = *std::max_element(reps.begin(), reps.end());
  if (!(hi > lo)) {
    st.hist_edges = {lo, hi};
    st.hist_counts = {static_cast<std::int64_t>(reps.size())};
    return st;
  }
  st.hist_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b)
    st.hist_edges[b] = lo + (hi - lo) * b / bins;
  st.hist_counts.assign(bins, 0);
  for (double v : reps) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::min(b, bins - 1);
    ++st.hist_counts[b];
  }
  return st;
}

PpcReport summarize_ppc(const std::array<double, 4>& observed,
                        const std::array<std::vector<double>, 4>& reps,
                        std::size_t replicates) {
  PpcReport report;
  report.replicates = replicates;
  for (int k = 0; k < 4; ++k)
    report.statistics.push_back(
        summarize_stat(kPpcStatNames[k], observed[k], reps[k]));
  return report;
}

}  // namespace

const char* const kPpcStatNames[4] = {"mean", "sd", "disruption_rate",
                                      "on_time_rate"};

std::array<double, 4> ppc_stats(const std::vector<double>& y,
                                const PpcThresholds& thr) {
  if (y.empty()) throw std::invalid_argument("ppc_stats: empty sample");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= y.size();
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  const double sd = y.size() > 1 ? std::sqrt(var / (y.size() - 1)) : 0.0;
  double disrupted = 0.0;
  for (double v : y)
    if (v < thr.lo || v >= thr.hi) disrupted += 1.0;
  disrupted /= y.size();
  return {mean, sd, disrupted, 1.0 - disrupted};
}

PpcReport ppc_statistics(const Dataset& data,
                         const std::vector<PosteriorDraw>& draws,
                         const ModelSpec& spec, const PpcThresholds& thr,
                         std::uint64_t seed) {
  if (draws.empty()) throw std::domain_error("ppc needs posterior draws");
  if (data.records.empty()) throw std::domain_error("ppc needs records");

  std::vector<DesignPoint> points;
  std::vector<double> y_obs;
  points.reserve(data.size());
  y_obs.reserve(data.size());
  for (const auto& rec : data.records) {
    points.push_back(make_design_point(rec, spec));
    y_obs.push_back(rec.y_hours);
  }
  const std::array<double, 4> observed = ppc_stats(y_obs, thr);

  const RngStream root(seed, 0x99C5);
  std::array<std::vector<double>, 4> reps;
  for (auto& r : reps) r.reserve(draws.size());
  std::vector<double> w;
  std::vector<double> y_rep(points.size());
  for (std::size_t d = 0; d < draws.size(); ++d) {
    RngStream sub = root.derive(d);
    const auto& mu = draws[d].mu;
    const auto& phi = draws[d].phi;
    for (std::size_t j = 0; j < points.size(); ++j) {
      mixture_weights(points[j], draws[d].theta, spec.components, w);
      const double u = sub.uniform();
      std::size_t comp = w.size() - 1;
      double acc = 0.0;
      for (std::size_t l = 0; l < w.size(); ++l) {
        acc += w[l];
        if (u < acc) {
          comp = l;
          break;
        }
      }
      y_rep[j] = sub.normal(mu[comp], phi[comp]);
    }
    const std::array<double, 4> stat = ppc_stats(y_rep, thr);
    for (int k = 0; k < 4; ++k) reps[k].push_back(stat[k]);
  }
  return summarize_ppc(observed, reps, draws.size());
}

std::vector<double> lm_design_row(const ShipmentRecord& rec,
                                  const ModelSpec& spec) {
  std::vector<double> row;
  row.push_back(1.0);
  const auto dummies = [&row](int idx, std::size_t levels) {
    for (std::size_t i = 1; i < levels; ++i)
      row.push_back(idx == static_cast<int>(i) ? 1.0 : 0.0);
  };
  const auto pair_dummies = [&row](const PairDict& dict, int idx) {
    for (std::size_t i = 0; i < dict.levels.size(); ++i) {
      if (dict.pinned[i]) continue;
      row.push_back(idx == static_cast<int>(i) ? 1.0 : 0.0);
    }
  };
  if (spec.has(PredictorBlock::kAirline))
    dummies(spec.airline.lookup(rec.airline, spec.strict_categories),
            spec.airline.levels.size());
  if (spec.has(PredictorBlock::kRoute))
    dummies(spec.route.lookup(rec.route, spec.strict_categories),
            spec.route.levels.size());
  if (spec.has(PredictorBlock::kAirlineRoute)) {
    const int a = spec.airline.lookup(rec.airline, false);
    const int r = spec.route.lookup(rec.route, false);
    pair_dummies(spec.airline_route,
                 (a >= 0 && r >= 0) ? spec.airline_route.lookup(a, r) : -1);
  }
  if (spec.has(PredictorBlock::kMonth))
    dummies(spec.month.lookup(rec.month, spec.strict_categories),
            spec.month.levels.size());
  if (spec.has(PredictorBlock::kLegs))
    dummies(spec.legs.lookup(rec.legs, spec.strict_categories),
            spec.legs.levels.size());
  if (spec.has(PredictorBlock::kAirlineLegs)) {
    const int a = spec.airline.lookup(rec.airline, false);
    const int g = spec.legs.lookup(rec.legs, false);
    pair_dummies(spec.airline_legs,
                 (a >= 0 && g >= 0) ? spec.airline_legs.lookup(a, g) : -1);
  }
  if (spec.has(PredictorBlock::kDevStart)) row.push_back(rec.dev_start_days);
  if (spec.has(PredictorBlock::kDuration)) row.push_back(rec.dur_days);
  if (spec.has(PredictorBlock::kLogWgt)) row.push_back(rec.log_wgt);
  if (spec.has(PredictorBlock::kLogPcs)) row.push_back(rec.log_pcs);
  return row;
}

LinearBaseline fit_linear_baseline(const Dataset& train,
                                   const ModelSpec& spec) {
  if (train.records.empty())
    throw std::domain_error("linear baseline needs training records");
  const std::size_t n = train.size();
  const std::vector<double> first = lm_design_row(train.records[0], spec);
  const std::size_t p = first.size();
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd Y(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::vector<double> row =
        j == 0 ? first : lm_design_row(train.records[j], spec);
    for (std::size_t k = 0; k < p; ++k) X(j, k) = row[k];
    Y(j) = train.records[j].y_hours;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::VectorXd beta = qr.solve(Y);
  const int rank = static_cast<int>(qr.rank());
  if (static_cast<std::size_t>(rank) >= n)
    throw std::domain_error("linear baseline: no residual degrees of freedom");
  const double rss = (Y - X * beta).squaredNorm();

  LinearBaseline lm;
  lm.beta.assign(beta.data(), beta.data() + p);
  lm.rank = rank;
  lm.sigma2 = rss / (n - rank);
  return lm;
}

double lm_predict(const LinearBaseline& lm, const ShipmentRecord& rec,
                  const ModelSpec& spec) {
  const std::vector<double> row = lm_design_row(rec, spec);
  if (row.size() != lm.beta.size())
    throw std::invalid_argument("lm_predict: design width mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) s += row[k] * lm.beta[k];
  return s;
}

PpcReport ppc_linear(const LinearBaseline& lm, const Dataset& data,
                     const ModelSpec& spec, std::size_t replicates,
                     const PpcThresholds& thr, std::uint64_t seed) {
  if (replicates == 0)
    throw std::invalid_argument("ppc_linear: replicates must be positive");
  if (data.records.empty()) throw std::domain_error("ppc needs records");

  std::vector<double> pred;
  std::vector<double> y_obs;
  pred.reserve(data.size());
  y_obs.reserve(data.size());
  for (const auto& rec : data.records) {
    pred.push_back(lm_predict(lm, rec, spec));
    y_obs.push_back(rec.y_hours);
  }
  const std::array<double, 4> observed = ppc_stats(y_obs, thr);
  const double sd = std::sqrt(lm.sigma2);

  const RngStream root(seed, 0x11E4);
  std::array<std::vector<double>, 4> reps;
  for (auto& r : reps) r.reserve(replicates);
  std::vector<double> y_rep(pred.size());
  for (std::size_t r = 0; r < replicates; ++r) {
    RngStream sub = root.derive(r);
    for (std::size_t j = 0; j < pred.size(); ++j)
      y_rep[j] = pred[j] + sd * sub.normal();
    const std::array<double, 4> stat = ppc_stats(y_rep, thr);
    for (int k = 0; k < 4; ++k) reps[k].push_back(stat[k]);
  }
  return summarize_ppc(observed, reps, replicates);
}

ResidualReport residual_metrics(const Dataset& data,
                                const std::vector<PosteriorDraw>& draws,
                                const ModelSpec& spec) {
  if (draws.empty())
    throw std::domain_error("residual metrics need posterior draws");
  if (data.records.empty())
    throw std::domain_error("residual metrics need records");

  ResidualReport rep;
  double sse = 0.0, sae = 0.0;
  std::vector<double> w;
  std::vector<double> log_f(draws.size());
  for (const auto& rec : data.records) {
    const DesignPoint dp = make_design_point(rec, spec);
    double pred = 0.0;
    for (std::size_t d = 0; d < draws.size(); ++d) {
      mixture_weights(dp, draws[d].theta, spec.components, w);
      double m = 0.0;
      for (std::size_t l = 0; l < w.size(); ++l) m += w[l] * draws[d].mu[l];
      pred += m;
      log_f[d] = log_mixture_density(rec.y_hours, w, draws[d].mu, draws[d].phi);
    }
    pred /= draws.size();
    const double e = rec.y_hours - pred;
    sse += e * e;
    sae += std::fabs(e);
    rep.log_likelihood += log_mean_exp(log_f);
  }
  rep.rmse = std::sqrt(sse / data.size());
  rep.mae = sae / data.size();
  return rep;
}

ResidualReport residual_metrics_lm(const Dataset& data,
                                   const LinearBaseline& lm,
                                   const ModelSpec& spec) {
  if (data.records.empty())
    throw std::domain_error("residual metrics need records");
  if (!(lm.sigma2 > 0.0))
    throw std::domain_error("linear baseline has degenerate variance");
  ResidualReport rep;
  double sse = 0.0, sae = 0.0;
  for (const auto& rec : data.records) {
    const double pred = lm_predict(lm, rec, spec);
    const double e = rec.y_hours - pred;
    sse += e * e;
    sae += std::fabs(e);
    rep.log_likelihood += log_normal_pdf(rec.y_hours, pred, 1.0 / lm.sigma2);
  }
  rep.rmse = std::sqrt(sse / data.size());
  rep.mae = sae / data.size();
  return rep;
}

double predictive_log_likelihood(const ShipmentRecord& rec,
                                 const std::vector<PosteriorDraw>& draws,
                                 const ModelSpec& spec) {
  if (draws.empty())
    throw std::domain_error("predictive likelihood needs posterior draws");
  const DesignPoint dp = make_design_point(rec, spec);
  std::vector<double> w;
  std::vector<double> log_f(draws.size());
  for (std::size_t d = 0; d < draws.size(); ++d) {
    mixture_weights(dp, draws[d].theta, spec.components, w);
    log_f[d] = log_mixture_density(rec.y_hours, w, draws[d].mu, draws[d].phi);
  }
  return log_mean_exp(log_f);
}

std::vector<int> stratified_folds(const Dataset& data, int folds,
                                  std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stratified_folds: folds < 2");
  std::map<std::string, std::vector<int>> groups;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const auto& rec = data.records[j];
    groups[rec.airline + '\x1f' + rec.route].push_back(static_cast<int>(j));
  }
  std::vector<int> assign(data.size(), 0);
  const RngStream root(seed, 0xF01D);
  for (auto& [key, idx] : groups) {
    RngStream sub = root.derive(fnv1a64(key));
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
      const std::size_t j = i + sub.uniform_index(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    const int offset = static_cast<int>(sub.uniform_index(folds));
    for (std::size_t i = 0; i < idx.size(); ++i)
      assign[idx[i]] = static_cast<int>((i + offset) % folds);
  }
  return assign;
}

namespace {

std::uint64_t training_content_hash(const Dataset& train) {
  std::string buf;
  for (const auto& rec : train.records) {
    buf += format_double(rec.y_hours);
    buf += '|';
    buf += rec.airline;
    buf += '|';
    buf += rec.route;
    buf += '|';
    buf += rec.month;
    buf += '|';
    buf += std::to_string(rec.legs);
    buf += '|';
    buf += format_double(rec.dev_start_days);
    buf += '|';
    buf += format_double(rec.dur_days);
    buf += '|';
    buf += format_double(rec.wgt_kg);
    buf += '|';
    buf += format_double(rec.pcs);
    buf += '\n';
  }
  return fnv1a64(buf);
}

}  // namespace

CvReport cross_validate(const Dataset& data, const ModelSpec& config,
                        const CvOptions& opt,
                        const std::vector<int>* fold_assignment) {
  if (opt.folds < 2) throw std::invalid_argument("cross_validate: folds < 2");
  if (data.size() < static_cast<std::size_t>(opt.folds))
    throw std::invalid_argument("cross_validate: fewer records than folds");

  std::vector<int> assign;
  if (fold_assignment != nullptr) {
    assign = *fold_assignment;
    if (assign.size() != data.size())
      throw std::invalid_argument("cross_validate: assignment size mismatch");
    for (int a : assign)
      if (a < 0 || a >= opt.folds)
        throw std::invalid_argument("cross_validate: fold label out of range");
  } else {
    assign = stratified_folds(data, opt.folds, opt.seed);
  }

  CvReport report;
  for (PredictorBlock b : config.blocks) report.blocks.push_back(block_name(b));
  report.fold_log_lik.assign(opt.folds, 0.0);
  report.fold_sizes.assign(opt.folds, 0);

  for (int f = 0; f < opt.folds; ++f) {
    Dataset train;
    std::vector<std::size_t> test_idx;
    for (std::size_t j = 0; j < data.size(); ++j) {
      if (assign[j] == f)
        test_idx.push_back(j);
      else
        train.records.push_back(data.records[j]);
    }
    if (train.records.empty())
      throw std::invalid_argument("cross_validate: empty training fold");
    report.fold_sizes[f] = test_idx.size();
    if (test_idx.empty()) continue;

    const ModelSpec fold_spec = make_model_spec(train, config);
    const PreparedData prepared = prepare_data(train, fold_spec);
    SamplerConfig cfg = opt.sampler;
    cfg.stream_id = training_content_hash(train);
    const FitResult fit = run_chain(prepared, fold_spec, cfg);

    double ll = 0.0;
    for (std::size_t j : test_idx)
      ll += predictive_log_likelihood(data.records[j], fit.draws, fold_spec);
    report.fold_log_lik[f] = ll;
  }
  for (double ll : report.fold_log_lik) report.total_neg_log_lik -= ll;
  return report;
}

EliminationResult backward_eliminate(
    const std::vector<PredictorBlock>& start,
    const std::function<double(const std::vector<PredictorBlock>&)>& score) {
  EliminationResult result;
  result.blocks = start;
  result.score = score(result.blocks);
  for (PredictorBlock b : start) {
    std::vector<PredictorBlock> candidate;
    for (PredictorBlock kept : result.blocks)
      if (kept != b) candidate.push_back(kept);
    if (candidate.size() == result.blocks.size()) continue;
    const double after = score(candidate);
    EliminationStep step;
    step.dropped = b;
    step.score_before = result.score;
    step.score_after = after;
    step.kept_removed = after < result.score;
    result.trail.push_back(step);
    if (step.kept_removed) {
      result.blocks = std::move(candidate);
      result.score = after;
    }
  }
  return result;
}

}  // namespace psbp
