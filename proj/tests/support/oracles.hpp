#pragma once

// Independent reference implementations used to check the library against.
// Everything here is written from the textbook definitions, deliberately
// avoiding the code paths under test.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "psbp/data.hpp"
#include "psbp/rng.hpp"

namespace oracles {

// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double integrate_rec(const std::function<double(double)>& f, double a,
                            double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return integrate_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         integrate_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return integrate_rec(f, a, b, fa, fm, fb, simpson(f, a, b, fa, fm, fb), tol,
                       48);
}

// Regularized lower incomplete gamma P(a, x): series for x < a + 1,
// continued fraction otherwise.
inline double reg_lower_gamma(double a, double x) {
  if (x <= 0.0) return 0.0;
  const double log_gamma_a = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 500; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma_a);
  }
  // Lentz continued fraction for the upper tail Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - log_gamma_a) * h;
  return 1.0 - q;
}

inline double gamma_cdf(double x, double shape, double rate) {
  return reg_lower_gamma(shape, rate * x);
}

// Fixed-point support filter written as the bluntest possible loop.
inline psbp::Dataset brute_force_clean(const psbp::Dataset& data,
                                       int min_pair, int min_route) {
  psbp::Dataset cur = data;
  for (;;) {
    std::map<std::pair<std::string, std::string>, int> pair_count;
    std::map<std::string, int> route_count;
    for (const auto& r : cur.records) {
      ++pair_count[{r.airline, r.route}];
      ++route_count[r.route];
    }
    psbp::Dataset next;
    for (const auto& r : cur.records)
      if (pair_count[{r.airline, r.route}] >= min_pair &&
          route_count[r.route] >= min_route)
        next.records.push_back(r);
    if (next.records.size() == cur.records.size()) return cur;
    cur = std::move(next);
  }
}

inline bool same_records(const psbp::Dataset& a, const psbp::Dataset& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.y_hours != y.y_hours || x.airline != y.airline ||
        x.route != y.route || x.month != y.month || x.legs != y.legs ||
        x.dev_start_days != y.dev_start_days || x.dur_days != y.dur_days ||
        x.wgt_kg != y.wgt_kg || x.pcs != y.pcs)
      return false;
  }
  return true;
}

// Random shipment tables for the support-filter tests: a handful of
// airlines and routes with wildly uneven cell counts.
inline psbp::Dataset random_dataset(std::uint64_t seed) {
  psbp::RngStream rng(seed, 0x0DD5);
  const int n_air = 2 + static_cast<int>(rng.uniform_index(5));
  const int n_route = 3 + static_cast<int>(rng.uniform_index(10));
  psbp::Dataset data;
  for (int a = 0; a < n_air; ++a) {
    for (int r = 0; r < n_route; ++r) {
      const int count = static_cast<int>(rng.uniform_index(30));
      for (int i = 0; i < count; ++i) {
        psbp::ShipmentRecord rec;
        rec.airline = "A" + std::to_string(a);
        rec.route = "R" + std::to_string(r);
        rec.month = "m" + std::to_string(1 + rng.uniform_index(3));
        rec.legs = 1 + static_cast<int>(rng.uniform_index(2));
        rec.y_hours = rng.normal() * 20.0;
        rec.dev_start_days = rng.normal();
        rec.dur_days = 1.0 + rng.uniform() * 9.0;
        rec.wgt_kg = std::exp(4.0 + rng.normal());
        rec.pcs = 1.0 + rng.uniform_index(40);
        rec.log_wgt = std::log(rec.wgt_kg);
        rec.log_pcs = std::log(rec.pcs);
        data.records.push_back(rec);
      }
    }
  }
  return data;
}

// Two-mode benchmark where the mode weights bend smoothly with dev_start:
// a straight line in dev cannot track the conditional mean, a smooth
// weight term can.
inline psbp::Dataset curved_bimodal_dataset(std::uint64_t seed, int n) {
  psbp::RngStream rng(seed, 0xB18D);
  const double mu[2] = {0.0, 48.0};
  const double sd[2] = {3.0, 5.0};
  psbp::Dataset data;
  for (int i = 0; i < n; ++i) {
    psbp::ShipmentRecord rec;
    const bool a2 = rng.uniform() < 0.5;
    const bool r2 = rng.uniform() < 0.5;
    rec.airline = a2 ? "A2" : "A1";
    rec.route = r2 ? "R2" : "R1";
    rec.month = "m01";
    rec.legs = 1;
    rec.dev_start_days = -3.0 + 6.0 * rng.uniform();
    rec.dur_days = 1.0 + 9.0 * rng.uniform();
    rec.wgt_kg = std::exp(4.5 + 0.6 * rng.normal());
    rec.pcs = std::max(1.0, std::exp(2.0 + 0.5 * rng.normal()));
    rec.log_wgt = std::log(rec.wgt_kg);
    rec.log_pcs = std::log(rec.pcs);

    const double gamma = 0.3 + (a2 ? 0.5 : 0.0) - (r2 ? 0.4 : 0.0) +
                         1.2 * std::sin(1.5 * rec.dev_start_days);
    const double p0 = 0.5 * std::erfc(-gamma * 0.70710678118654752440);
    const int comp = rng.uniform() < p0 ? 0 : 1;
    rec.y_hours = mu[comp] + sd[comp] * rng.normal();
    data.records.push_back(rec);
  }
  return data;
}

}  // namespace oracles
