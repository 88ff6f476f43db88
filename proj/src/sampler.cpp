#include "psbp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "psbp/stats.hpp"

namespace psbp {

namespace {

constexpr std::uint64_t kTagIndicator = 0x1c0de5a17e5f00d1ULL;
constexpr std::uint64_t kTagAugment = 0x7ab1e5ca77e2b00fULL;

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (workers <= 1 || n < 2) {
    body(0, n);
    return;
  }
  const std::size_t k = std::min<std::size_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(k);
  const std::size_t chunk = (n + k - 1) / k;
  for (std::size_t w = 0; w < k; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

std::vector<double> shared_all(const ChainState& st, const PreparedData& data,
                               int workers = 1) {
  std::vector<double> shared(data.n());
  parallel_for(data.n(), workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j)
      shared[j] = shared_predictor(data.x[j], st.theta);
  });
  return shared;
}

int z_len(int s_j, int L) { return std::min(s_j + 1, L - 1); }

double spline_dot(const std::vector<double>& row,
                  const std::vector<double>& coef) {
  double v = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) v += row[i] * coef[i];
  return v;
}

// Gibbs draw for one categorical block: independent normal conditionals per
// free level under the latent regression, prior N(0, eps_prec).
void update_categorical_block(ChainState& st,
                              const std::vector<std::vector<int>>& members,
                              std::vector<double>& coef, double eps_prec,
                              const std::vector<char>* pinned,
                              const std::vector<double>& level_prefix,
                              std::vector<double>& shared) {
  const int L = static_cast<int>(st.kernel.mu.size());
  for (std::size_t c = 1; c < coef.size(); ++c) {
    if (pinned && (*pinned)[c]) continue;
    double count = 0.0;
    double resid = 0.0;
    for (int j : members[c]) {
      const int len = z_len(st.s[j], L);
      double zsum = 0.0;
      for (int p = 0; p < len; ++p) zsum += st.z[j][p];
      resid += zsum - level_prefix[len] - len * (shared[j] - coef[c]);
      count += len;
    }
    const double prec = eps_prec + count;
    const double mean = resid / prec;
    const double value = st.rng.normal(mean, prec);
    const double delta = value - coef[c];
    coef[c] = value;
    for (int j : members[c]) shared[j] += delta;
  }
}

void update_spline_block(ChainState& st, const PreparedData& data,
                         std::vector<double> DesignPoint::*row_member,
                         std::vector<double>& coef, const ModelSpec& spec,
                         const std::vector<double>& level_prefix,
                         std::vector<double>& shared) {
  const int L = spec.components;
  const int k = static_cast<int>(coef.size());
  if (k == 0) return;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  for (std::size_t j = 0; j < data.n(); ++j) {
    const std::vector<double>& row = data.x[j].*row_member;
    const int len = z_len(st.s[j], L);
    double zsum = 0.0;
    for (int p = 0; p < len; ++p) zsum += st.z[j][p];
    const double own = spline_dot(row, coef);
    const double resid = zsum - level_prefix[len] - len * (shared[j] - own);
    for (int a = 0; a < k; ++a) {
      rhs[a] += resid * row[a];
      for (int b = 0; b <= a; ++b) M(a, b) += len * row[a] * row[b];
    }
  }
  M = M.selfadjointView<Eigen::Lower>();
  M.diagonal().array() += spec.prior.spline_prior_precision;
  rhs.array() += spec.prior.spline_prior_precision * spec.prior.spline_prior_mean;
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("spline block update: posterior not SPD");
  const Eigen::VectorXd mean = llt.solve(rhs);
  Eigen::VectorXd eta(k);
  for (int a = 0; a < k; ++a) eta[a] = st.rng.normal();
  const Eigen::VectorXd draw =
      mean + llt.matrixU().solve(eta);  // U = chol upper, U^-1 eta ~ N(0, M^-1)
  std::vector<double> fresh(coef.size());
  for (int a = 0; a < k; ++a) fresh[a] = draw[a];
  for (std::size_t j = 0; j < data.n(); ++j) {
    const std::vector<double>& row = data.x[j].*row_member;
    shared[j] += spline_dot(row, fresh) - spline_dot(row, coef);
  }
  coef = fresh;
}

std::vector<double> level_prefix_sums(const std::vector<double>& level) {
  std::vector<double> prefix(level.size() + 1, 0.0);
  for (std::size_t l = 0; l < level.size(); ++l)
    prefix[l + 1] = prefix[l] + level[l];
  return prefix;
}

double gamma_rate_for_block(const std::vector<double>& coef,
                            const std::vector<char>* pinned) {
  double ss = 0.0;
  for (std::size_t c = 1; c < coef.size(); ++c) {
    if (pinned && (*pinned)[c]) continue;
    ss += coef[c] * coef[c];
  }
  return ss;
}

std::size_t free_count_for_block(const std::vector<double>& coef,
                                 const std::vector<char>* pinned) {
  if (coef.empty()) return 0;
  if (!pinned) return coef.size() - 1;
  std::size_t n = 0;
  for (std::size_t c = 1; c < coef.size(); ++c)
    if (!(*pinned)[c]) ++n;
  return n;
}

}  // namespace

PreparedData prepare_data(const Dataset& data, const ModelSpec& spec) {
  PreparedData out;
  out.y.reserve(data.size());
  out.x.reserve(data.size());
  out.by_airline.resize(spec.airline.levels.size());
  out.by_route.resize(spec.route.levels.size());
  out.by_pair.resize(spec.airline_route.levels.size());
  out.by_month.resize(spec.month.levels.size());
  out.by_legs.resize(spec.legs.levels.size());
  out.by_airline_legs.resize(spec.airline_legs.levels.size());
  for (const auto& rec : data.records) {
    const int j = static_cast<int>(out.y.size());
    out.y.push_back(rec.y_hours);
    out.x.push_back(make_design_point(rec, spec));
    const DesignPoint& x = out.x.back();
    if (x.airline >= 0) out.by_airline[x.airline].push_back(j);
    if (x.route >= 0) out.by_route[x.route].push_back(j);
    if (x.pair >= 0) out.by_pair[x.pair].push_back(j);
    if (x.month >= 0) out.by_month[x.month].push_back(j);
    if (x.legs >= 0) out.by_legs[x.legs].push_back(j);
    if (x.airline_legs >= 0) out.by_airline_legs[x.airline_legs].push_back(j);
  }
  return out;
}

ChainState init_chain_state(const PreparedData& data, const ModelSpec& spec,
                            const SamplerConfig& cfg) {
  if (data.n() == 0) throw std::invalid_argument("init: no observations");
  const int L = spec.components;
  ChainState st;
  st.rng = RngStream(cfg.seed, cfg.stream_id);
  st.iteration = 0;

  std::vector<double> sorted(data.y);
  std::sort(sorted.begin(), sorted.end());
  st.kernel.mu.resize(L);
  st.kernel.phi.assign(L, spec.prior.a_phi / spec.prior.b_phi);
  for (int l = 0; l < L; ++l) {
    const double p = (l + 0.5) / L;
    const double pos = p * (sorted.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - i;
    st.kernel.mu[l] = i + 1 < sorted.size()
                          ? sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
                          : sorted[i];
  }

  st.theta = make_prior_mean_coefficients(spec);

  st.s.resize(data.n());
  for (std::size_t j = 0; j < data.n(); ++j) {
    int best = 0;
    for (int l = 1; l < L; ++l)
      if (std::fabs(data.y[j] - st.kernel.mu[l]) <
          std::fabs(data.y[j] - st.kernel.mu[best]))
        best = l;
    st.s[j] = best;
  }

  const std::vector<double> shared = shared_all(st, data);
  st.z.resize(data.n());
  for (std::size_t j = 0; j < data.n(); ++j) {
    const int len = z_len(st.s[j], L);
    st.z[j].resize(len);
    for (int p = 0; p < len; ++p) {
      const TruncSide side = p == st.s[j] ? TruncSide::kAtOrAboveZero
                                          : TruncSide::kBelowZero;
      st.z[j][p] = sample_truncated_normal(st.theta.level[p] + shared[j], 1.0,
                                           side, st.rng);
    }
  }
  return st;
}

void update_kernel_params(ChainState& st, const PreparedData& data,
                          const ModelSpec& spec) {
  const int L = spec.components;
  const PriorConfig& pr = spec.prior;
  std::vector<double> count(L, 0.0), sum(L, 0.0), sumsq(L, 0.0);
  for (std::size_t j = 0; j < data.n(); ++j) {
    const int l = st.s[j];
    count[l] += 1.0;
    sum[l] += data.y[j];
    sumsq[l] += data.y[j] * data.y[j];
  }
  for (int l = 0; l < L; ++l) {
    const double n = count[l];
    const double xi_post = pr.xi_mu + n;
    double a_post = pr.a_phi + 0.5 * n;
    double b_post = pr.b_phi;
    double mean_post = pr.zeta_mu;
    if (n > 0.0) {
      const double ybar = sum[l] / n;
      const double ssw = std::max(0.0, sumsq[l] - n * ybar * ybar);
      const double dev = ybar - pr.zeta_mu;
      b_post += 0.5 * (ssw + pr.xi_mu * n * dev * dev / xi_post);
      mean_post = (pr.xi_mu * pr.zeta_mu + sum[l]) / xi_post;
    }
    const double phi = st.rng.gamma(a_post, b_post);
    st.kernel.phi[l] = phi;
    st.kernel.mu[l] = st.rng.normal(mean_post, xi_post * phi);
  }
}

void update_indicators(ChainState& st, const PreparedData& data,
                       const ModelSpec& spec, int workers) {
  const int L = spec.components;
  const std::uint64_t sweep_tag =
      kTagIndicator ^ static_cast<std::uint64_t>(st.iteration);
  std::vector<double> lognorm(L), halfphi(L);
  for (int l = 0; l < L; ++l) {
    lognorm[l] = 0.5 * std::log(st.kernel.phi[l]);
    halfphi[l] = 0.5 * st.kernel.phi[l];
  }
  parallel_for(data.n(), workers, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> score(L);
    for (std::size_t j = lo; j < hi; ++j) {
      const double shared = shared_predictor(data.x[j], st.theta);
      const double y = data.y[j];
      double log_remaining = 0.0;
      double best = -HUGE_VAL;
      for (int l = 0; l < L; ++l) {
        double log_w;
        if (l + 1 < L) {
          const double u = stick_value(st.theta.level[l] + shared);
          log_w = std::log(u) + log_remaining;
          log_remaining += std::log1p(-u);
        } else {
          log_w = log_remaining;
        }
        const double d = y - st.kernel.mu[l];
        score[l] = log_w + lognorm[l] - halfphi[l] * d * d;
        if (score[l] > best) best = score[l];
      }
      double total = 0.0;
      for (int l = 0; l < L; ++l) {
        score[l] = score[l] - best > -745.0 ? std::exp(score[l] - best) : 0.0;
        total += score[l];
      }
      RngStream sub = st.rng.derive(sweep_tag, j);
      const double target = sub.uniform() * total;
      double acc = 0.0;
      int pick = L - 1;
      for (int l = 0; l < L; ++l) {
        acc += score[l];
        if (target < acc) {
          pick = l;
          break;
        }
      }
      st.s[j] = pick;
    }
  });
}

void update_augmentation(ChainState& st, const PreparedData& data,
                         const ModelSpec& spec, int workers) {
  const int L = spec.components;
  const std::uint64_t sweep_tag =
      kTagAugment ^ static_cast<std::uint64_t>(st.iteration);
  parallel_for(data.n(), workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      const double shared = shared_predictor(data.x[j], st.theta);
      const int len = z_len(st.s[j], L);
      st.z[j].resize(len);
      RngStream sub = st.rng.derive(sweep_tag, j);
      for (int p = 0; p < len; ++p) {
        const TruncSide side = p == st.s[j] ? TruncSide::kAtOrAboveZero
                                            : TruncSide::kBelowZero;
        st.z[j][p] = sample_truncated_normal(st.theta.level[p] + shared, 1.0,
                                             side, sub);
      }
    }
  });
}

void update_weight_coefficients(ChainState& st, const PreparedData& data,
                                const ModelSpec& spec) {
  const int L = spec.components;
  const double eps_level = st.theta.eps[0];
  std::vector<double> shared = shared_all(st, data);

  for (int l = 0; l + 1 < L; ++l) {
    double n_l = 0.0;
    double resid = 0.0;
    for (std::size_t j = 0; j < data.n(); ++j) {
      if (st.s[j] >= l) {
        resid += st.z[j][l] - shared[j];
        n_l += 1.0;
      }
    }
    const double prec = eps_level + n_l;
    const double mean = (eps_level * level_prior_mean(l, L) + resid) / prec;
    st.theta.level[l] = st.rng.normal(mean, prec);
  }
  st.theta.level[L - 1] = 0.0;

  std::vector<double> prefix = level_prefix_sums(st.theta.level);
  if (spec.has(PredictorBlock::kAirline))
    update_categorical_block(st, data.by_airline, st.theta.airline,
                             st.theta.eps[1], nullptr, prefix, shared);
  if (spec.has(PredictorBlock::kRoute))
    update_categorical_block(st, data.by_route, st.theta.route,
                             st.theta.eps[2], nullptr, prefix, shared);
  if (spec.has(PredictorBlock::kAirlineRoute))
    update_categorical_block(st, data.by_pair, st.theta.airline_route,
                             st.theta.eps[3], &spec.airline_route.pinned,
                             prefix, shared);
  if (spec.has(PredictorBlock::kMonth))
    update_categorical_block(st, data.by_month, st.theta.month,
                             st.theta.eps[4], nullptr, prefix, shared);
  if (spec.has(PredictorBlock::kLegs))
    update_categorical_block(st, data.by_legs, st.theta.legs,
                             st.theta.eps[5], nullptr, prefix, shared);
  if (spec.has(PredictorBlock::kAirlineLegs))
    update_categorical_block(st, data.by_airline_legs,
                             st.theta.airline_legs, st.theta.eps[6],
                             &spec.airline_legs.pinned, prefix, shared);
  if (spec.has(PredictorBlock::kDevStart))
    update_spline_block(st, data, &DesignPoint::dev_row, st.theta.dev_start,
                        spec, prefix, shared);
  if (spec.has(PredictorBlock::kDuration))
    update_spline_block(st, data, &DesignPoint::dur_row, st.theta.duration,
                        spec, prefix, shared);
  if (spec.has(PredictorBlock::kLogWgt))
    update_spline_block(st, data, &DesignPoint::wgt_row, st.theta.log_wgt,
                        spec, prefix, shared);
  if (spec.has(PredictorBlock::kLogPcs))
    update_spline_block(st, data, &DesignPoint::pcs_row, st.theta.log_pcs,
                        spec, prefix, shared);
}

void update_hyper_precisions(ChainState& st, const PreparedData& data,
                             const ModelSpec& spec) {
  (void)data;
  const int L = spec.components;
  const PriorConfig& pr = spec.prior;

  double ss = 0.0;
  for (int l = 0; l + 1 < L; ++l) {
    const double d = st.theta.level[l] - level_prior_mean(l, L);
    ss += d * d;
  }
  st.theta.eps[0] =
      st.rng.gamma(pr.c_eps + 0.5 * (L - 1), pr.d_eps + 0.5 * ss);

  const auto draw_block = [&](int slot, const std::vector<double>& coef,
                              const std::vector<char>* pinned) {
    const double free = static_cast<double>(free_count_for_block(coef, pinned));
    const double rate = gamma_rate_for_block(coef, pinned);
    st.theta.eps[slot] =
        st.rng.gamma(pr.c_eps + 0.5 * free, pr.d_eps + 0.5 * rate);
  };
  if (spec.has(PredictorBlock::kAirline)) draw_block(1, st.theta.airline, nullptr);
  if (spec.has(PredictorBlock::kRoute)) draw_block(2, st.theta.route, nullptr);
  if (spec.has(PredictorBlock::kAirlineRoute))
    draw_block(3, st.theta.airline_route, &spec.airline_route.pinned);
  if (spec.has(PredictorBlock::kMonth)) draw_block(4, st.theta.month, nullptr);
  if (spec.has(PredictorBlock::kLegs)) draw_block(5, st.theta.legs, nullptr);
  if (spec.has(PredictorBlock::kAirlineLegs))
    draw_block(6, st.theta.airline_legs, &spec.airline_legs.pinned);
}

void apply_label_swap(ChainState& st, int l) {
  const int L = static_cast<int>(st.kernel.mu.size());
  if (l < 0 || l + 1 >= L)
    throw std::domain_error("apply_label_swap: pair index out of range");
  std::swap(st.kernel.mu[l], st.kernel.mu[l + 1]);
  std::swap(st.kernel.phi[l], st.kernel.phi[l + 1]);
  if (l + 2 < L) std::swap(st.theta.level[l], st.theta.level[l + 1]);
  for (std::size_t j = 0; j < st.s.size(); ++j) {
    if (st.s[j] == l)
      st.s[j] = l + 1;
    else if (st.s[j] == l + 1)
      st.s[j] = l;
    else if (st.s[j] >= l + 2 && l + 2 < L)
      std::swap(st.z[j][l], st.z[j][l + 1]);
  }
}

bool label_switch_move(ChainState& st, const PreparedData& data,
                       const ModelSpec& spec, int l, bool force_accept) {
  const int L = spec.components;
  if (l < 0 || l + 1 >= L)
    throw std::domain_error("label_switch_move: pair index out of range");

  double log_ratio = 0.0;
  std::vector<int> affected;
  for (std::size_t j = 0; j < data.n(); ++j)
    if (st.s[j] == l || st.s[j] == l + 1) affected.push_back(static_cast<int>(j));

  if (l + 2 == L) {
    // Swap with the remainder component: only the labels and atoms move.
    for (int j : affected) {
      const double u = stick_value(
          st.theta.level[l] + shared_predictor(data.x[j], st.theta));
      const double term = std::log(u) - std::log1p(-u);
      log_ratio += st.s[j] == l + 1 ? term : -term;
    }
  } else {
    const double eps_level = st.theta.eps[0];
    const double m_l = level_prior_mean(l, L);
    const double m_next = level_prior_mean(l + 1, L);
    const double a = st.theta.level[l];
    const double b = st.theta.level[l + 1];
    log_ratio += log_normal_pdf(a, m_next, eps_level) +
                 log_normal_pdf(b, m_l, eps_level) -
                 log_normal_pdf(a, m_l, eps_level) -
                 log_normal_pdf(b, m_next, eps_level);
    for (int j : affected) {
      const double shared = shared_predictor(data.x[j], st.theta);
      if (st.s[j] == l) {
        const double u_next = stick_value(st.theta.level[l + 1] + shared);
        log_ratio += std::log1p(-u_next);
      } else {
        const double u = stick_value(st.theta.level[l] + shared);
        log_ratio -= std::log1p(-u);
      }
    }
  }

  const double u = st.rng.uniform();
  const bool accept =
      force_accept || log_ratio >= 0.0 || (u > 0.0 && std::log(u) < log_ratio);
  if (!accept) return false;

  apply_label_swap(st, l);
  for (int j : affected) {
    const double shared = shared_predictor(data.x[j], st.theta);
    const int len = z_len(st.s[j], L);
    st.z[j].resize(len);
    st.z[j][l] = sample_truncated_normal(
        st.theta.level[l] + shared, 1.0,
        st.s[j] == l ? TruncSide::kAtOrAboveZero : TruncSide::kBelowZero,
        st.rng);
    if (st.s[j] == l + 1 && l + 1 < L - 1)
      st.z[j][l + 1] = sample_truncated_normal(st.theta.level[l + 1] + shared,
                                               1.0, TruncSide::kAtOrAboveZero,
                                               st.rng);
  }
  return true;
}

void sweep(ChainState& st, const PreparedData& data, const ModelSpec& spec,
           const SamplerConfig& cfg, SweepCounters* counters) {
  const int L = spec.components;
  update_kernel_params(st, data, spec);
  update_indicators(st, data, spec, cfg.workers);
  update_augmentation(st, data, spec, cfg.workers);
  update_weight_coefficients(st, data, spec);
  update_hyper_precisions(st, data, spec);
  const int moves =
      cfg.label_moves_per_sweep < 0 ? L - 1 : cfg.label_moves_per_sweep;
  for (int m = 0; m < moves; ++m) {
    const int l = static_cast<int>(st.rng.uniform_index(L - 1));
    const bool ok = label_switch_move(st, data, spec, l);
    if (counters) {
      ++counters->label_attempted;
      counters->label_accepted += ok ? 1 : 0;
    }
  }
}

FitResult run_chain(const PreparedData& data, const ModelSpec& spec,
                    const SamplerConfig& cfg, const FitResult* resume,
                    const SweepCallback& after_sweep) {
  if (cfg.iterations < 1)
    throw std::invalid_argument("run_chain: iterations must be positive");
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations)
    throw std::invalid_argument("run_chain: burn-in must lie in [0, iterations)");
  if (cfg.thinning < 1)
    throw std::invalid_argument("run_chain: thinning must be positive");

  FitResult fit;
  if (resume) {
    fit = *resume;
  } else {
    fit.state = init_chain_state(data, spec, cfg);
  }
  for (std::int64_t t = fit.state.iteration + 1; t <= cfg.iterations; ++t) {
    fit.state.iteration = t;
    sweep(fit.state, data, spec, cfg, &fit.counters);
    if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thinning == 0)
      fit.draws.push_back(
          {fit.state.kernel.mu, fit.state.kernel.phi, fit.state.theta});
    if (after_sweep) after_sweep(fit);
  }
  return fit;
}

void check_state_invariants(const ChainState& st, const PreparedData& data,
                            const ModelSpec& spec) {
  const int L = spec.components;
  const auto fail = [](const std::string& what) {
    throw std::logic_error("chain state invariant violated: " + what);
  };
  if (static_cast<int>(st.kernel.mu.size()) != L ||
      static_cast<int>(st.kernel.phi.size()) != L)
    fail("kernel size");
  if (static_cast<int>(st.theta.level.size()) != L) fail("level size");
  if (st.s.size() != data.n() || st.z.size() != data.n()) fail("state size");
  for (double p : st.kernel.phi)
    if (!(p > 0.0)) fail("non-positive kernel precision");
  for (double e : st.theta.eps)
    if (!(e > 0.0)) fail("non-positive block precision");
  if (st.theta.level[L - 1] != 0.0) fail("remainder stick intercept not zero");
  if (!st.theta.airline.empty() && st.theta.airline[0] != 0.0)
    fail("airline reference effect not zero");
  if (!st.theta.route.empty() && st.theta.route[0] != 0.0)
    fail("route reference effect not zero");
  if (!st.theta.month.empty() && st.theta.month[0] != 0.0)
    fail("month reference effect not zero");
  if (!st.theta.legs.empty() && st.theta.legs[0] != 0.0)
    fail("legs reference effect not zero");
  for (std::size_t c = 0; c < st.theta.airline_route.size(); ++c)
    if (spec.airline_route.pinned[c] && st.theta.airline_route[c] != 0.0)
      fail("pinned airline-route effect not zero");
  for (std::size_t c = 0; c < st.theta.airline_legs.size(); ++c)
    if (spec.airline_legs.pinned[c] && st.theta.airline_legs[c] != 0.0)
      fail("pinned airline-legs effect not zero");
  for (std::size_t j = 0; j < data.n(); ++j) {
    if (st.s[j] < 0 || st.s[j] >= L) fail("label out of range");
    const int len = z_len(st.s[j], L);
    if (static_cast<int>(st.z[j].size()) != len) fail("latent row length");
    for (int p = 0; p < len; ++p) {
      if (p == st.s[j] && st.z[j][p] < 0.0) fail("latent sign at label");
      if (p != st.s[j] && st.z[j][p] >= 0.0) fail("latent sign below label");
    }
  }
}

}  // namespace psbp
