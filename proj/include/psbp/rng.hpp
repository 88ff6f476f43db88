#pragma once

#include <array>
#include <cstdint>

namespace psbp {

// Reproducible random stream keyed by (seed, stream_id). Equal keys give
// equal sequences on every platform; distinct stream ids give statistically
// independent streams. Derived substreams let data-parallel loops draw
// per-observation variates without depending on worker count or schedule.
//
// Generator: xoshiro256++ seeded through splitmix64 mixing of the key.
// Not thread safe; each execution context owns its stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();

  // Uniform integer in [0, n), unbiased.
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via the inverse CDF; consumes exactly one uniform.
  double normal();
  double normal(double mean, double precision);

  // Gamma(shape, rate) by Marsaglia-Tsang squeeze.
  double gamma(double shape, double rate);

  // Independent substream keyed by (this stream's identity, tag_a, tag_b).
  RngStream derive(std::uint64_t tag_a, std::uint64_t tag_b = 0) const;

  // State capture for bit-exact checkpoint resume.
  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_;
};

}  // namespace psbp
