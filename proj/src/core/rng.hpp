#ifndef QOE_CORE_RNG_HPP
#define QOE_CORE_RNG_HPP

#include <cstdint>

namespace qoe {

// splitmix64 generator. The standard <random> distributions are not
// bit-identical across library implementations, and every seeded output of
// this project is contractually reproducible, so draws are produced here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Inclusive range via 128-bit multiply-shift.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    const uint64_t r = static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * span) >> 64);
    return lo + static_cast<int64_t>(r);
  }

  // Derives an independent child seed, used to fan one top-level seed out to
  // subsystems and per-tree streams.
  static uint64_t derive(uint64_t seed, uint64_t purpose) {
    Rng mixer(seed ^ (0xD1B54A32D192ED03ULL * (purpose + 1)));
    return mixer.next_u64();
  }

 private:
  uint64_t state_;
};

}  // namespace qoe

#endif  // QOE_CORE_RNG_HPP
