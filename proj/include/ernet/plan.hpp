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

#ifndef ERNET_PLAN_HPP_
#define ERNET_PLAN_HPP_

#include <cstdint>
#include <vector>

#include "ernet/model.hpp"
#include "ernet/rational.hpp"

namespace ernet {

// Half-open rectangle [y0, y1) x [x0, x1) in some layer's coordinate frame.
struct Region {
  int y0 = 0, x0 = 0, y1 = 0, x1 = 0;

  int height() const { return y1 - y0; }
  int width() const { return x1 - x0; }
  bool empty() const { return y1 <= y0 || x1 <= x0; }
  std::int64_t area() const {
    return empty() ? 0 : static_cast<std::int64_t>(height()) * width();
  }
  bool contains(const Region& o) const {
    return o.empty() ||
           (y0 <= o.y0 && x0 <= o.x0 && o.y1 <= y1 && o.x1 <= x1);
  }
  bool operator==(const Region& o) const {
    return y0 == o.y0 && x0 == o.x0 && y1 == o.y1 && x1 == o.x1;
  }
  // Bounding box of two rectangles; empty operands are ignored.
  static Region merge(const Region& a, const Region& b);
};

// Executable layer list distilled from a ModelSpec: taps are resolved to
// layer indices, and each ReLU is fused into the layer producing its input
// (the standalone kind remains only for the pathological case of a ReLU
// whose input is also tapped).
enum class ExecKind { kConv3x3, kConv1x1, kReLU, kShuffle, kUnshuffle, kAdd };

struct ExecLayer {
  ExecKind kind;
  int in_channels = 0;
  int out_channels = 0;
  int factor = 0;                        // shuffle kinds
  const WeightTensor* weights = nullptr; // conv kinds, borrowed from the model
  int add_src = -2;     // kAdd: producer layer index; -1 = network input
  bool relu_after = false;
  Rational scale{1};    // output resolution relative to the network input
  int in_h = 0, in_w = 0, out_h = 0, out_w = 0;  // set by bind_image
};

struct ExecPlan {
  const ModelSpec* model = nullptr;  // borrowed; must outlive the plan
  std::vector<ExecLayer> layers;
  // consumers[i]: layers reading layer i's output; input_consumers: layers
  // reading the network input (the first layer plus input-sourced adds).
  std::vector<std::vector<int>> consumers;
  std::vector<int> input_consumers;
  int divisor = 1;   // output block sizes and dims must be multiples of this
  int halo_in = 0;   // input pixels of one-sided halo per output block
  int input_h = 0, input_w = 0, out_h = 0, out_w = 0;  // set by bind_image

  bool bound() const { return input_h > 0; }
};

// Flattens the model; computes scales, the block divisor and the input halo.
ExecPlan build_plan(const ModelSpec& m);

// Binds concrete image dimensions: fills per-layer sizes, checking shuffle
// divisibility along the way.  Throws std::invalid_argument on violations.
void bind_image(ExecPlan& p, int img_h, int img_w);

// Demand regions a tile of output needs at every layer, found by walking the
// plan backwards (3x3 convolutions dilate by one per side, shuffles rescale,
// adds fan demand out to their producers).
struct TileDemand {
  struct Pad {
    int top = 0, bottom = 0, left = 0, right = 0;
  };
  Region input;              // demand on the network input
  std::vector<Region> out;   // per layer: demand on its output
  std::vector<Region> in;    // per layer: demand on its main input
  std::vector<Pad> pad;      // per layer: zero rows/cols a 3x3 conv needs
};

// clip=true resolves demands against true layer bounds, recording the
// zero-padding deficit wherever a 3x3 halo crosses an image border (this is
// what makes tiled execution reproduce whole-image zero padding exactly);
// it requires a bound plan.  clip=false keeps virtual interior geometry for
// cost analysis and works on unbound plans.
TileDemand backward_regions(const ExecPlan& p, Region out_region, bool clip);

// Multiply-accumulates needed to realize one tile demand.
std::uint64_t tile_conv_macs(const ExecPlan& p, const TileDemand& d);

// Input pixels one output region depends on, unclipped (virtual interior
// geometry; pass the full demand walk with clip=true for border regions).
Region required_input_region(const ExecPlan& p, Region out_region);

}  // namespace ernet

#endif  // ERNET_PLAN_HPP_
