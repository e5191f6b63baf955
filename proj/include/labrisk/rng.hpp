#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace labrisk {

// splitmix64 step; used for seeding and for hashing seed components.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** generator. All randomness in the library flows through this
// class with explicit seeds, so results are identical across platforms and
// independent of thread schedule.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
  }

  // Mixes stream identifiers into a base seed; parallel workers each get
  // derive(seed, worker_index, ...) so output never depends on scheduling.
  static std::uint64_t derive(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> parts) {
    std::uint64_t s = seed ^ 0x8824a37ac1e52fc7ULL;
    std::uint64_t h = splitmix64(s);
    for (std::uint64_t p : parts) {
      s ^= h + p * 0xd6e8feb86659fd93ULL;
      h = splitmix64(s);
    }
    return h;
  }
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a) {
    return derive(seed, {a});
  }
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b) {
    return derive(seed, {a, b});
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return u;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Unbiased integer in [0, n); rejection sampling.
  std::size_t uniform_index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t bound = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= bound) x = next_u64();
    return static_cast<std::size_t>(x % n);
  }

  // Box-Muller; consumes exactly two draws per call.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double lognormal(double mu, double sigma) {
    return std::exp(normal(mu, sigma));
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace labrisk
