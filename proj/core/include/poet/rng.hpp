// Copyright 2026 The POET Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Counter-based splittable random streams.
//
// A key is a 64-bit value; child keys are derived by hashing (parent, tag),
// so the draws for layer 3 never depend on how many numbers layer 2 consumed.
// Draw i of a stream is a pure function of (key, i).

#ifndef POET_RNG_HPP_
#define POET_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace poet {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngKey {
 public:
  constexpr RngKey() = default;
  constexpr explicit RngKey(std::uint64_t seed) : value_(mix64(seed ^ 0x5eed5eed5eed5eedULL)) {}

  constexpr RngKey derive(std::uint64_t tag) const {
    return from_raw(mix64(value_ ^ mix64(tag + 0x9e3779b97f4a7c15ULL)));
  }
  RngKey derive(std::string_view tag) const;

  constexpr std::uint64_t raw() const { return value_; }
  static constexpr RngKey from_raw(std::uint64_t v) {
    RngKey k;
    k.value_ = v;
    return k;
  }

  friend constexpr bool operator==(RngKey, RngKey) = default;

 private:
  std::uint64_t value_ = 0;
};

/// Sequential view over the counter stream of one key.
class RngStream {
 public:
  explicit RngStream(RngKey key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  std::uint64_t next_u64() {
    return mix64(key_.raw() + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n). Multiply-shift, no rejection loop.
  std::size_t below(std::size_t n);
  /// Standard normal by Box-Muller; both outputs of a pair are used.
  double normal();

  std::uint64_t counter() const { return counter_; }
  RngKey key() const { return key_; }

 private:
  RngKey key_;
  std::uint64_t counter_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Uniformly random permutation of [0, n) by Fisher-Yates.
std::vector<std::size_t> random_permutation(std::size_t n, RngStream& rng);

}  // namespace poet

#endif  // POET_RNG_HPP_
