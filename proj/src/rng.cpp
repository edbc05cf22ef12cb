#include "dualwave/rng.hpp"

#include "dualwave/common.hpp"

namespace dualwave {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t id, StreamPurpose purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

}  // namespace

Stream::Stream(std::uint64_t master_seed, std::uint64_t stream_id, StreamPurpose purpose)
    : engine_(seeded_engine(master_seed, stream_id, purpose)) {}

double Stream::uniform() {
  // 53 random mantissa bits; never returns 1.0.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Stream::angle() { return kTwoPi * uniform(); }

double Stream::normal() { return normal_(engine_); }

double Stream::exponential(double rate) {
  // 1 - u lies in (0, 1], so the log is finite.
  return -std::log1p(-uniform()) / rate;
}

}  // namespace dualwave
