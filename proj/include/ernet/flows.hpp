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

#ifndef ERNET_FLOWS_HPP_
#define ERNET_FLOWS_HPP_

#include <cstdint>
#include <vector>

#include "ernet/plan.hpp"
#include "ernet/tensor.hpp"

namespace ernet {

// Square output-domain tiling walked in raster order (left to right, then
// top to bottom).  block_size must be a multiple of the plan divisor so
// every tile boundary maps to integral coordinates at every layer.
struct BlockSchedule {
  int block_size = 0;
  int bytes_per_feature = 1;
};

// Instrumentation accumulated by one inference run.
//
// Byte counters follow the hardware conventions of the cost model rather
// than host allocations:
//   dram_feature_bytes     write + read-back of internal feature maps
//                          (convolution outputs except the last one, which
//                          encodes the output frame).  Block flows keep
//                          features on-chip, so they count only the reuse
//                          flow's re-read of the input frame where a global
//                          skip connection consumes it a second time.
//   line_buffer_peak_bytes peak of the reuse row/column caches: per 3x3
//                          convolution, 2 rows x full layer width plus
//                          2 columns x current block height of its input.
//   block_buffer_peak_bytes three operand buffers sized by the largest
//                          per-tile tensor touched at any layer boundary.
struct FlowCounters {
  std::uint64_t macs_total = 0;
  std::uint64_t dram_feature_bytes = 0;
  std::uint64_t line_buffer_peak_bytes = 0;
  std::uint64_t block_buffer_peak_bytes = 0;
};

// Per-tile record from the recompute flow (for overhead analysis).
struct TileStats {
  Region out;
  std::uint64_t macs = 0;
};

// Reference flow: every layer over the whole image, one layer at a time.
FeatureMap infer_whole(const ModelSpec& m, const FeatureMap& img,
                       FlowCounters* counters = nullptr,
                       int bytes_per_feature = 1);

// Truncated-pyramid flow: each output tile independently recomputes its
// halo, so tiles shrink with depth and MACs exceed the whole-image count.
FeatureMap infer_block_recompute(const ModelSpec& m, const FeatureMap& img,
                                 const BlockSchedule& s,
                                 FlowCounters* counters = nullptr,
                                 std::vector<TileStats>* tiles = nullptr);

// Oblique-cuboid flow: halo features are cached in per-layer line buffers
// and computed exactly once, so macs_total matches infer_whole.
// Contractually sequential in raster order.
FeatureMap infer_block_reuse(const ModelSpec& m, const FeatureMap& img,
                             const BlockSchedule& s,
                             FlowCounters* counters = nullptr);

// All three flows produce bit-identical outputs for any valid
// (model, image, schedule); the test suite enforces this exhaustively.

}  // namespace ernet

#endif  // ERNET_FLOWS_HPP_
