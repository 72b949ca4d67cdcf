// Copyright 2026 The ctxpref Authors.
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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace ctxpref {

/// Philox4x64-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3", SC'11). The stream is fully determined by a
/// 128-bit key and a 256-bit counter; block `k` is the 10-round bijection of
/// counter `k` under the key, so any position can be reached in O(1).
/// Blocks are consumed starting from counter 1.
///
/// Output order is bit-identical to numpy.random.Philox with the same key
/// and a zero starting counter.
class Philox {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint64_t, 4>;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{seed, stream} {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Raw bijection: encrypts `counter` under `key`.
  static Block block(Block counter, std::array<std::uint64_t, 2> key) noexcept;

 private:
  std::array<std::uint64_t, 2> key_;
  Block counter_{0, 0, 0, 0};
  Block buffer_{};
  std::size_t buffer_pos_ = 4;
};

/// Independent child seed for item `index` of a run seeded with `seed`.
/// Used to make parallel work independent of scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// 64-bit FNV-1a; stable across platforms, used for content-keyed seeds.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Philox& rng) noexcept;

/// Uniform integer in [0, n); n must be positive. Lemire's method with
/// rejection, so the result is exactly uniform.
std::uint64_t uniform_index(Philox& rng, std::uint64_t n) noexcept;

/// Standard normal via Box-Muller.
double standard_normal(Philox& rng) noexcept;

/// Fisher-Yates shuffle of indices in place.
void shuffle(Philox& rng, std::span<std::size_t> items) noexcept;

}  // namespace ctxpref
