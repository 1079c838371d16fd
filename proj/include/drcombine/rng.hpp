#pragma once

// Counter-based Philox4x32-10 generator (Salmon et al., SC'11). Every stream
// is a pure function of (key, stream id), so replicates can be generated in
// any order or on any thread and still give identical draws.

#include <array>
#include <cstdint>

namespace drcombine {

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

// SplitMix64 finaliser; used to derive per-replicate seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double uniform();  // open interval (0, 1), 53-bit resolution
  double normal();   // Box-Muller on two uniforms
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace drcombine
