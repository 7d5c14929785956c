#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace zsc {

// Deterministic random stream. Wraps mt19937_64 but produces doubles through
// explicit arithmetic (not std::*_distribution, whose output is
// implementation-defined) so sequences are stable across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive on both ends.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(gen_() % span);
  }

  // Standard normal via Box-Muller; second value of the pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = gen_() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices out of [0, n), in ascending order.
  std::vector<int> sample_indices(int n, int k);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

uint64_t fnv1a64(std::string_view s);

// Mixes a root seed with a stream name ("counter/init", "synth/scene/12", ...)
// so every consumer of randomness gets an independent reproducible stream.
Rng substream(uint64_t root_seed, std::string_view name);
uint64_t substream_seed(uint64_t root_seed, std::string_view name);

}  // namespace zsc
