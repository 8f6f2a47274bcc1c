#pragma once

// Counter-based randomness: every (seed, stream) pair gets its own SplitMix64
// sequence, so results do not depend on which thread draws them.

#include <cstdint>

#include <gmpxx.h>

#include "ietlab/exact_real.hpp"

namespace ietlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// k / 2^53 for uniform k in [0, 2^53).
  std::uint64_t next_dyadic53() { return next() >> 11; }
  double uniform() { return static_cast<double>(next_dyadic53()) * 0x1.0p-53; }
  /// The same draw as uniform(), as an exact rational.
  static ExactReal exact_of(std::uint64_t k53) {
    mpz_class den = 1;
    den <<= 53;
    return ExactReal(mpq_class(mpz_class(static_cast<unsigned long>(k53)), den));
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ietlab
