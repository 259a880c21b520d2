// Copyright 2026 The ernet-kit Authors. All Rights Reserved.
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

#ifndef ERNET_RNG_HPP_
#define ERNET_RNG_HPP_

#include <cstdint>

namespace ernet {

// SplitMix64 stream.  Chosen because the algorithm is tiny, fully specified,
// and has published reference outputs, so identical weights can be
// regenerated on any platform from a single u64 seed.
class SeededGenerator {
 public:
  explicit SeededGenerator(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [-1, 1): the high 53 bits give a double in [0, 1) on the
  // standard 2^-53 grid, rescaled by 2x - 1 (both steps exact in binary64).
  double next_uniform() {
    const double u =
        static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
  }

 private:
  std::uint64_t state_;
};

}  // namespace ernet

#endif  // ERNET_RNG_HPP_
