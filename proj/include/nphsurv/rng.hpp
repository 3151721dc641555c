#pragma once

#include <cstdint>
#include <random>

namespace nphsurv {

// Deterministic random stream addressed by (seed, stream_id). The engine is
// std::mt19937_64 keyed through std::seed_seq, both of which are fully
// specified by the standard, and variates are derived here rather than via
// <random> distributions, so sequences are identical across platforms and
// standard libraries. A stream is single-owner; parallel work uses distinct
// stream ids.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform();

  // Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unit-rate exponential, -log(U).
  double exponential();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace nphsurv
