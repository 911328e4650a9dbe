// Copyright 2026 The Orthant SMC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ORTHANT_RNG_HPP
#define ORTHANT_RNG_HPP

#include <cstdint>
#include <limits>

namespace orthant {

/// Small counter-style generator (SplitMix64). Each particle, replication or
/// subsystem gets its own stream derived from (seed, tag, index), so results
/// are reproducible for a given seed no matter how work is scheduled.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw on the open interval (0, 1); never returns an endpoint,
  /// so it is safe to feed into inverse cdfs and logarithms.
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Combines a master seed with stream identifiers into a new seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0) {
  std::uint64_t h = detail::mix64(seed + 0x9e3779b97f4a7c15ULL);
  h = detail::mix64(h ^ (a + 0xbf58476d1ce4e5b9ULL));
  h = detail::mix64(h ^ (b + 0x94d049bb133111ebULL));
  return h;
}

inline SplitMix64 derive_stream(std::uint64_t seed, std::uint64_t a,
                                std::uint64_t b = 0) {
  return SplitMix64(derive_seed(seed, a, b));
}

}  // namespace orthant

#endif  // ORTHANT_RNG_HPP
