#pragma once

#include <cstdint>
#include <random>

namespace dualwave {

/// Independent substreams carved out of one master seed. Each ensemble member
/// draws from streams keyed by its own id, so results do not depend on how
/// members are scheduled across workers.
enum class StreamPurpose : std::uint32_t {
  dynamics = 1,
  ste = 2,
  initial = 3,
  events = 4,
  diagnostics = 5,
  test = 6,
};

class Stream {
 public:
  Stream(std::uint64_t master_seed, std::uint64_t stream_id,
         StreamPurpose purpose = StreamPurpose::test);

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [0, 2π).
  double angle();
  double normal();
  double exponential(double rate);
  std::uint64_t bits() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dualwave
