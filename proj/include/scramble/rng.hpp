// Copyright 2026 The Scramble Authors.
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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

namespace scramble {

// SplitMix64 (Steele, Lea, Flood 2014). State advances by the golden-ratio
// increment 0x9e3779b97f4a7c15; each output is the state passed through the
// fmix variant with shifts 30/27/31 and multipliers 0xbf58476d1ce4e5b9,
// 0x94d049bb133111eb. Chosen because it is trivial to port bit-exactly.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, bound). Rejects raw draws below (2^64 mod bound)
  // so that `draw % bound` is unbiased. bound must be > 0.
  std::uint64_t bounded(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t state_;
};

// Picks `count` distinct positions out of [0, population) with a partial
// Fisher-Yates shuffle: for t = 0..count-1, swap slot t with slot
// t + bounded(population - t). Returns the chosen positions sorted ascending
// so callers can keep their input order.
inline std::vector<std::size_t> sample_positions(std::size_t population,
                                                 std::size_t count,
                                                 SplitMix64& rng) {
  std::vector<std::size_t> slots(population);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  count = std::min(count, population);
  for (std::size_t t = 0; t < count; ++t) {
    const auto r = t + static_cast<std::size_t>(rng.bounded(population - t));
    std::swap(slots[t], slots[r]);
  }
  slots.resize(count);
  std::sort(slots.begin(), slots.end());
  return slots;
}

}  // namespace scramble
