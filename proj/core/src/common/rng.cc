#include "promptlens/common/rng.h"

#include <limits>

#include "promptlens/common/hash.h"

namespace promptlens {

Rng::Rng(uint64_t seed, std::string_view salt)
    : engine_(seed ^ (Fnv1a64(salt) * 0x9e3779b97f4a7c15ULL)) {}

size_t Rng::UniformIndex(size_t n) {
  // Rejection sampling removes modulo bias.
  const uint64_t bound = static_cast<uint64_t>(n);
  const uint64_t limit =
      std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % bound;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<size_t>(x % bound);
}

bool Rng::Bernoulli(double p) {
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return u < p;
}

}  // namespace promptlens
