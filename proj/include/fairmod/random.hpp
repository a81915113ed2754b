/*
 * Copyright 2026 The FairMod Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>

namespace fairmod {

// SplitMix64 stream. Streams are addressed by (seed, index), so the draws for
// row i never depend on how many rows were processed before it.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t state) : state_(state) {}

  static CounterRng ForStream(std::uint64_t seed, std::uint64_t index) {
    return CounterRng(Mix(seed ^ Mix(index + kGolden)));
  }

  std::uint64_t NextU64() {
    state_ += kGolden;
    return Mix(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double NextUniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t Mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace fairmod
