#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace ressvm {

// Identity of the pseudo-random engine, recorded in run manifests so a run can
// be reproduced bit-exactly from its metadata.
inline constexpr std::string_view kGeneratorId = "mt19937_64";

// splitmix64 (Steele/Lea/Flood mixing function).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent seed for stream `stream` rooted at `base`. Used to give each
// replication / method its own generator without sequential coupling, so
// replications can run in any order or in parallel with identical results.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

// Seedable random stream. The engine is std::mt19937_64, whose raw output
// sequence the C++ standard pins exactly; doubles and indices are derived from
// raw 64-bit words with the fixed recipes below instead of std::*_distribution
// (whose algorithms are implementation-defined), so any implementation of the
// same recipes reproduces identical streams from the same seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53-bit resolution: top 53 bits scaled by 2^-53.
  double uniform_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_unit(); }

  // Uniform on {0,...,n-1} by 128-bit multiply-shift (bias < n/2^64).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::uniform_index: n must be positive");
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ressvm
