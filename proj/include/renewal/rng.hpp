#pragma once

#include <cstdint>
#include <random>

namespace renewal {

/// Stream of uniforms on [0, 1) with 53-bit resolution.
///
/// Every random quantity in the library is produced from an explicit stream;
/// there is no shared generator. Replica `i` of a run seeded with `s` uses
/// `UniformStream::for_replica(s, i)`, so results do not depend on how
/// replicas are scheduled across threads.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for replica `replica` of sub-experiment `channel`.
  static UniformStream for_replica(std::uint64_t seed, std::uint64_t replica,
                                   std::uint64_t channel = 0) {
    return UniformStream(mix(seed ^ mix(replica ^ mix(channel + 0x9e3779b97f4a7c15ULL))));
  }

  double next() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double operator()() { return next(); }

  std::uint64_t draws() const noexcept { return draws_; }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace renewal
