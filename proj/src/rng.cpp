#include "psbp/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "psbp/stats.hpp"

namespace psbp {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b,
                             std::uint64_t c, std::uint64_t d) {
  std::uint64_t x = a;
  std::uint64_t h = splitmix64(x);
  x ^= rotl(b, 17);
  h ^= splitmix64(x);
  x ^= rotl(c, 31);
  h ^= splitmix64(x);
  x ^= rotl(d, 47);
  h ^= splitmix64(x);
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t x = seed ^ rotl(stream_id, 23) ^ 0x6a09e667f3bcc909ULL;
  (void)splitmix64(x);
  x ^= stream_id;
  for (auto& w : s_) w = splitmix64(x);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::domain_error("uniform_index: n must be positive");
  // Lemire's multiply-reject method.
  for (;;) {
    const std::uint64_t x = next_u64();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    const std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo >= n || lo >= (0 - n) % n)
      return static_cast<std::uint64_t>(m >> 64);
  }
}

double RngStream::normal() {
  // Offset keeps u strictly inside (0, 1) so the quantile stays finite.
  const double u =
      (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  return normal_inv_cdf(u);
}

double RngStream::normal(double mean, double precision) {
  return mean + normal() / std::sqrt(precision);
}

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::domain_error("gamma: shape and rate must be positive");
  double boost = 1.0;
  double a = shape;
  if (a < 1.0) {
    // G(a) = G(a+1) * U^(1/a)
    double u = uniform();
    while (u <= 0.0) u = uniform();
    boost = std::pow(u, 1.0 / a);
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x)
      return boost * d * v / rate;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return boost * d * v / rate;
  }
}

RngStream RngStream::derive(std::uint64_t tag_a, std::uint64_t tag_b) const {
  const std::uint64_t child_seed = mix_key(seed_, stream_id_, tag_a, tag_b);
  const std::uint64_t child_stream = mix_key(tag_b, tag_a, stream_id_, seed_);
  return RngStream(child_seed, child_stream);
}

}  // namespace psbp
