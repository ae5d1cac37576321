#ifndef MTE_RNG_HPP_
#define MTE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace mte {

// Splittable counter-based generator (splitmix64 finalizer). Streams are a
// pure function of (key, counter), so split() never disturbs the parent and
// identical seeds reproduce identical draws bit-for-bit on every platform.
// std::random distributions are implementation-defined and are not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kGolden)), counter_(0) {}

  std::uint64_t next_u64() { return mix(key_ + kGolden * ++counter_); }

  // Derives an independent stream; distinct ids give distinct streams.
  Rng split(std::uint64_t stream_id) const {
    return Rng(RawKey{mix(key_ ^ mix(stream_id + kGolden))});
  }

  // Uniform on [0,1) with 53 mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; two fresh draws per call, no cached spare.
  double normal(double mean = 0.0, double sd = 1.0) {
    double u1 = uniform();
    const double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * 3.141592653589793 * u2);
  }

  // Index in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  struct RawKey {
    std::uint64_t key;
  };
  explicit Rng(RawKey raw) : key_(raw.key), counter_(0) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace mte

#endif  // MTE_RNG_HPP_
