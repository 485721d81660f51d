#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

namespace esgd {

/// Deterministic random stream (xoshiro256++ seeded via splitmix64).
///
/// Every run in this library owns exactly one Rng; all randomness (minibatch
/// sampling, dropout masks, Langevin noise) is drawn from it in a documented
/// order so that runs are reproducible bit-for-bit from (seed, stream).
/// Gaussians use the Box-Muller transform without caching: one gaussian
/// consumes exactly two uniform draws, so the stream layout is independent
/// of how callers interleave uniform and gaussian requests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    for (auto& s : state_) s = splitmix64(z);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be positive.
  int next_below(int bound) {
    return static_cast<int>(next_double() * static_cast<double>(bound));
  }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double next_gaussian() {
    // u1 in (0, 1] so the log is finite.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// n iid standard normals, filled in index order.
  Eigen::VectorXd gaussian_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = next_gaussian();
    return v;
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& z) {
    z += 0x9E3779B97F4A7C15ULL;
    std::uint64_t x = z;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

}  // namespace esgd
