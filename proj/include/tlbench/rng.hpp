/**
 * Copyright 2026 The tlbench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef TLBENCH_RNG_HPP_
#define TLBENCH_RNG_HPP_

#include <cstdint>
#include <limits>
#include <span>

namespace tlbench {

// SplitMix64 finalizer.
constexpr uint64_t mix64(uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent key from a parent seed and up to two indices.
constexpr uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(seed) ^ (a * 0xD1B54A32D192ED03ULL)) ^ (b * 0x8CB92BA72F3D8DD7ULL));
}

/// Counter-based random stream. The n-th draw is a pure function of (key, n),
/// so a stream can be reconstructed anywhere from its key and position.
/// Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = uint64_t;

  RngStream(uint64_t seed, uint64_t stream_id) : key_(derive_seed(seed, stream_id)) {}
  explicit RngStream(uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }

  uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi] (inclusive).
  int64_t uniform_int(int64_t lo, int64_t hi);
  // Standard normal via Box-Muller (consumes two draws).
  double normal();

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

// Platform-independent Fisher-Yates shuffle of an index span.
void shuffle_indices(std::span<size_t> indices, RngStream &rng);

}  // namespace tlbench

#endif  // TLBENCH_RNG_HPP_
