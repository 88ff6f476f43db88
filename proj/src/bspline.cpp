#include "psbp/bspline.hpp"

#include <algorithm>
#include <stdexcept>

namespace psbp {

namespace {

void validate(const KnotSpec& spec) {
  if (spec.order < 1)
    throw std::invalid_argument("KnotSpec: order must be at least 1");
  if (spec.knots.size() < 2)
    throw std::invalid_argument("KnotSpec: need at least two knots");
  for (std::size_t i = 1; i < spec.knots.size(); ++i)
    if (!(spec.knots[i - 1] < spec.knots[i]))
      throw std::invalid_argument("KnotSpec: knots must strictly increase");
  if (spec.replication() > spec.order)
    throw std::invalid_argument("KnotSpec: end replication exceeds order");
}

}  // namespace

std::vector<double> KnotSpec::extended_knots() const {
  const int extra = replication() - 1;
  std::vector<double> ext;
  ext.reserve(knots.size() + 2 * static_cast<std::size_t>(extra));
  ext.insert(ext.end(), extra, knots.front());
  ext.insert(ext.end(), knots.begin(), knots.end());
  ext.insert(ext.end(), extra, knots.back());
  return ext;
}

std::size_t KnotSpec::basis_count() const {
  const std::size_t ext = knots.size() + 2 * (replication() - 1);
  if (ext < static_cast<std::size_t>(order) + 1)
    throw std::invalid_argument("KnotSpec: too few knots for order");
  return ext - static_cast<std::size_t>(order);
}

std::vector<double> basis_eval(const KnotSpec& spec, double x) {
  validate(spec);
  const std::vector<double> t = spec.extended_knots();
  const int k = spec.order;
  const std::size_t n = spec.basis_count();
  std::vector<double> row(n, 0.0);
  if (x < t.front() || x > t.back()) return row;

  // Locate the non-empty interval containing x; the right boundary belongs
  // to the last non-empty interval so the row still sums to one there.
  std::size_t j;
  if (x >= t.back()) {
    j = t.size() - 2;
    while (j > 0 && !(t[j] < t[j + 1])) --j;
  } else {
    j = static_cast<std::size_t>(
            std::upper_bound(t.begin(), t.end(), x) - t.begin()) - 1;
  }
  if (j + 1 >= t.size() || !(t[j] < t[j + 1])) return row;

  // Cox-de Boor over the full table, 0/0 treated as 0 at repeated knots.
  std::vector<double> b(t.size() - 1, 0.0);
  b[j] = 1.0;
  for (int d = 1; d < k; ++d) {
    const std::size_t top = t.size() - static_cast<std::size_t>(d) - 1;
    for (std::size_t i = 0; i < top; ++i) {
      double v = 0.0;
      const double dl = t[i + d] - t[i];
      if (dl > 0.0) v += b[i] * (x - t[i]) / dl;
      const double dr = t[i + d + 1] - t[i + 1];
      if (dr > 0.0) v += b[i + 1] * (t[i + d + 1] - x) / dr;
      b[i] = v;
    }
    b[top] = 0.0;
  }
  std::copy(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n),
            row.begin());
  return row;
}

std::vector<double> design_row(const ShipmentRecord& rec,
                               const SplineLayout& layout) {
  std::vector<double> out;
  const auto append = [&out](std::vector<double> part) {
    out.insert(out.end(), part.begin(), part.end());
  };
  append(basis_eval(layout.dev_start, rec.dev_start_days));
  append(basis_eval(layout.duration, rec.dur_days));
  append(basis_eval(layout.log_wgt, rec.log_wgt));
  append(basis_eval(layout.log_pcs, rec.log_pcs));
  return out;
}

}  // namespace psbp
