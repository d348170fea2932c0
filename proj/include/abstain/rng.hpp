#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace abstain {

// Deterministic sampling layer over a fixed, named engine (mt19937_64).
// std:: distributions and std::shuffle are implementation-defined, so the
// uniform/normal/shuffle constructions are spelled out here and never change.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53 random bits.
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the sine mate is cached.
  double next_normal();

  // Unbiased uniform integer in [0, n) by rejection.
  std::uint64_t next_below(std::uint64_t n);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

// Child seed for an independent stream (per trial, per stratum).
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace abstain
