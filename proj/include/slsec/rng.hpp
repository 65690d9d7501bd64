// SPDX-License-Identifier: Apache-2.0
//
// Seeded random stream with platform-stable draws. std::mt19937_64 output is
// fixed by the standard; the distributions layered on top here are written
// out explicitly because the <random> distribution classes are
// implementation-defined and would break cross-platform reproducibility.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace slsec {

// FNV-1a over bytes, used for child-stream labels and content hashes.
std::uint64_t fnv1a64(std::string_view bytes);

// splitmix64 finalizer; decorrelates structured seeds.
std::uint64_t splitmix64(std::uint64_t x);

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed)
      : seed_(seed), engine_(splitmix64(seed)) {}

  // Child streams are keyed by (seed, label), not by engine state, so a
  // consumer may derive children in any order without perturbing the parent.
  RngStream child(std::string_view label) const {
    return RngStream(splitmix64(seed_ ^ fnv1a64(label)));
  }
  RngStream child(std::string_view label, std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Unbiased integer on [0, bound) via rejection sampling.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal draw. Marsaglia polar method: only sqrt/log of uniforms,
  // one cached spare per accepted pair.
  double gaussian();

  // Fisher-Yates shuffle driven by below().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace slsec
