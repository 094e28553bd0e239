#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace emsim {

/// splitmix64 mixing step; also used to derive per-replica seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic Gaussian stream. Stream splitting rule: replica r of master
/// seed s is seeded with splitmix64 applied twice to (s, then s^r mixed), so
/// distinct replicas get decorrelated mt19937_64 seeds.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t replica) {
    std::uint64_t st = master_seed;
    std::uint64_t a = splitmix64(st);
    st = a ^ (replica + 0x9e3779b97f4a7c15ULL * (replica + 1));
    gen_.seed(splitmix64(st));
  }

  /// Standard normal via Box-Muller (bit-reproducible for a fixed libstdc++
  /// mt19937_64, independent of std::normal_distribution internals).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform on [0,1).
  double uniform() {
    return (gen_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace emsim
