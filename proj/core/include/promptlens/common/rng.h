#ifndef PROMPTLENS_COMMON_RNG_H_
#define PROMPTLENS_COMMON_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace promptlens {

// std::mt19937_64's output sequence is fixed by the standard, but the
// standard distributions are not, so bounded draws go through UniformIndex to
// keep generated artifacts byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}
  Rng(uint64_t seed, std::string_view salt);

  uint64_t Next() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  size_t UniformIndex(size_t n);

  bool Bernoulli(double p);

 private:
  std::mt19937_64 engine_;
};

}  // namespace promptlens

#endif  // PROMPTLENS_COMMON_RNG_H_
