#include "fauno/rng.hpp"

#include <cmath>

#include "fauno/errors.hpp"

namespace fauno {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw InvalidArgumentError("uniform_int: hi < lo");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  cached_normal_ = r * std::sin(theta);
  have_cached_normal_ = true;
  return r * std::cos(theta);
}

int Rng::poisson(double lambda) {
  if (lambda < 0.0) throw InvalidArgumentError("poisson: negative rate");
  int count = 0;
  // Knuth's product method underflows for big rates; split additively.
  while (lambda > 30.0) {
    double part = 30.0;
    const double limit = std::exp(-part);
    double prod = uniform();
    int k = 0;
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    count += k;
    lambda -= part;
  }
  const double limit = std::exp(-lambda);
  double prod = uniform();
  int k = 0;
  while (prod > limit) {
    ++k;
    prod *= uniform();
  }
  return count + k;
}

Rng Rng::split(std::uint64_t stream) const {
  std::uint64_t x = s_[0] ^ rotl(stream, 13);
  std::uint64_t mixed = splitmix64(x) ^ s_[3];
  return Rng(mixed ^ (stream * 0x9e3779b97f4a7c15ULL));
}

}  // namespace fauno
