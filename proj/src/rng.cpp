#include "nphsurv/rng.hpp"

#include <cmath>

namespace nphsurv {
namespace {

std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t stream_id) {
  // Fixed tag word keeps these streams apart from any other seed_seq use.
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x6e706873u};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(keyed_engine(seed, stream_id)) {}

double RngStream::uniform() {
  constexpr double kScale = 0x1.0p-53;
  return (static_cast<double>(engine_() >> 11) + 0.5) * kScale;
}

double RngStream::exponential() { return -std::log(uniform()); }

}  // namespace nphsurv
