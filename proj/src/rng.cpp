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
#include "tlbench/rng.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace tlbench {

int64_t RngStream::uniform_int(int64_t lo, int64_t hi) {
  if (hi <= lo) return lo;
  const auto span = static_cast<unsigned __int128>(static_cast<uint64_t>(hi - lo) + 1);
  const auto scaled = (static_cast<unsigned __int128>(next_u64()) * span) >> 64;
  return lo + static_cast<int64_t>(scaled);
}

double RngStream::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void shuffle_indices(std::span<size_t> indices, RngStream &rng) {
  for (size_t i = indices.size(); i > 1; --i) {
    const auto j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i - 1)));
    std::swap(indices[i - 1], indices[j]);
  }
}

}  // namespace tlbench
