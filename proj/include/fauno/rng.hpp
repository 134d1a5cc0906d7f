#pragma once

#include <cstdint>
#include <vector>

namespace fauno {

// Self-contained xoshiro256** generator. The standard <random> distributions
// are implementation-defined, which would make event logs differ across
// standard libraries; everything here is pinned down bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);
  // Standard normal (Box-Muller, cached pair).
  double normal();
  // Knuth multiplication method, chunked so large rates stay exact.
  int poisson(double lambda);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(0, i);
      std::swap(v[i], v[static_cast<std::size_t>(j)]);
    }
  }

  // Derive an independent stream; used to keep workload, policy and
  // topology randomness decoupled.
  Rng split(std::uint64_t stream) const;

 private:
  std::uint64_t s_[4];
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace fauno
