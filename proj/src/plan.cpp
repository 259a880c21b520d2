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

#include "ernet/plan.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "ernet/util.hpp"

namespace ernet {

Region Region::merge(const Region& a, const Region& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return Region{std::min(a.y0, b.y0), std::min(a.x0, b.x0),
                std::max(a.y1, b.y1), std::max(a.x1, b.x1)};
}

namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -(-a / b); }

// One-sided halo probe: how far the input demand of a T x T output block at
// position K overhangs the block's own footprint.
int probe_halo(const ExecPlan& p, int t_out) {
  const int scale = p.model->scale;
  const int k = 4096 * p.divisor;
  TileDemand d =
      backward_regions(p, Region{k, k, k + t_out, k + t_out}, false);
  const int in0 = k / scale;
  const int in1 = (k + t_out) / scale;
  const int top = in0 - d.input.y0;
  const int bottom = d.input.y1 - in1;
  const int left = in0 - d.input.x0;
  const int right = d.input.x1 - in1;
  return std::max({top, bottom, left, right, 0});
}

}  // namespace

ExecPlan build_plan(const ModelSpec& m) {
  validate_model(m);
  ExecPlan p;
  p.model = &m;

  std::map<int, int> tap_src;  // tap id -> producing layer (-1 = input)
  bool tap_at_back = false;    // the last layer's output is tapped; do not
                               // fuse a ReLU into it
  int ch = m.input_channels;
  Rational s(1);
  for (const LayerSpec& l : m.layers) {
    ExecLayer e;
    switch (l.kind) {
      case LayerKind::kTap:
        tap_src[l.tap_id] = static_cast<int>(p.layers.size()) - 1;
        tap_at_back = true;
        continue;
      case LayerKind::kReLU:
        if (!p.layers.empty() && !p.layers.back().relu_after && !tap_at_back) {
          p.layers.back().relu_after = true;
          continue;
        }
        e.kind = ExecKind::kReLU;
        e.in_channels = e.out_channels = ch;
        break;
      case LayerKind::kConv3x3:
      case LayerKind::kConv1x1:
        e.kind = l.kind == LayerKind::kConv3x3 ? ExecKind::kConv3x3
                                               : ExecKind::kConv1x1;
        e.in_channels = l.in_channels;
        e.out_channels = l.out_channels;
        e.weights = &l.weights;
        ch = l.out_channels;
        break;
      case LayerKind::kPixelShuffle:
        e.kind = ExecKind::kShuffle;
        e.factor = l.factor;
        e.in_channels = ch;
        ch /= l.factor * l.factor;
        e.out_channels = ch;
        s = s * Rational(l.factor);
        break;
      case LayerKind::kPixelUnshuffle:
        e.kind = ExecKind::kUnshuffle;
        e.factor = l.factor;
        e.in_channels = ch;
        ch *= l.factor * l.factor;
        e.out_channels = ch;
        s = s / Rational(l.factor);
        break;
      case LayerKind::kResidualAdd:
        e.kind = ExecKind::kAdd;
        e.in_channels = e.out_channels = ch;
        e.add_src = tap_src.at(l.tap_id);
        break;
    }
    e.scale = s;
    p.layers.push_back(e);
    tap_at_back = false;
  }
  ERNET_REQUIRE(!p.layers.empty(), "plan: model has no executable layers");

  // Block divisor: an output block advances every layer by an integral row
  // count only when its size is a multiple of every scale denominator.
  const Rational s_out(m.scale);
  std::int64_t div = (Rational(1) / s_out).den;
  for (const ExecLayer& e : p.layers)
    div = std::lcm(div, (e.scale / s_out).den);
  p.divisor = static_cast<int>(div);

  // Consumer lists.
  p.consumers.assign(p.layers.size(), {});
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    if (i == 0)
      p.input_consumers.push_back(0);
    else
      p.consumers[i - 1].push_back(static_cast<int>(i));
    if (p.layers[i].kind == ExecKind::kAdd) {
      if (p.layers[i].add_src < 0)
        p.input_consumers.push_back(static_cast<int>(i));
      else
        p.consumers[p.layers[i].add_src].push_back(static_cast<int>(i));
    }
  }

  p.halo_in = probe_halo(p, p.divisor);
  if (probe_halo(p, 2 * p.divisor) != p.halo_in)
    throw std::logic_error("plan: halo is not block-size invariant");
  return p;
}

void bind_image(ExecPlan& p, int img_h, int img_w) {
  ERNET_REQUIRE(img_h >= 1 && img_w >= 1, "bind_image: empty image");
  p.input_h = img_h;
  p.input_w = img_w;
  int h = img_h, w = img_w;
  for (ExecLayer& e : p.layers) {
    e.in_h = h;
    e.in_w = w;
    switch (e.kind) {
      case ExecKind::kShuffle:
        h *= e.factor;
        w *= e.factor;
        break;
      case ExecKind::kUnshuffle:
        ERNET_REQUIRE(h % e.factor == 0 && w % e.factor == 0,
                      "bind_image: dimensions not divisible by shuffle factor");
        h /= e.factor;
        w /= e.factor;
        break;
      default:
        break;
    }
    e.out_h = h;
    e.out_w = w;
  }
  p.out_h = h;
  p.out_w = w;
}

TileDemand backward_regions(const ExecPlan& p, Region out_region, bool clip) {
  ERNET_REQUIRE(!clip || p.bound(),
                "backward_regions: clipping requires bound image dimensions");
  const int n = static_cast<int>(p.layers.size());
  TileDemand d;
  d.out.assign(n, Region{});
  d.in.assign(n, Region{});
  d.pad.assign(n, TileDemand::Pad{});

  std::vector<Region> dem(n);
  std::vector<char> has(n, 0);
  Region input_dem{};
  auto merge_to = [&](int idx, const Region& r) {
    if (r.empty()) return;
    if (idx < 0)
      input_dem = Region::merge(input_dem, r);
    else {
      dem[idx] = has[idx] ? Region::merge(dem[idx], r) : r;
      has[idx] = 1;
    }
  };

  dem[n - 1] = out_region;
  has[n - 1] = 1;
  for (int i = n - 1; i >= 0; --i) {
    if (!has[i]) continue;
    const ExecLayer& e = p.layers[i];
    const Region o = dem[i];
    d.out[i] = o;
    Region in = o;
    if (!o.empty()) {
      switch (e.kind) {
        case ExecKind::kConv3x3: {
          const Region u{o.y0 - 1, o.x0 - 1, o.y1 + 1, o.x1 + 1};
          if (clip) {
            in = Region{std::max(u.y0, 0), std::max(u.x0, 0),
                        std::min(u.y1, e.in_h), std::min(u.x1, e.in_w)};
            d.pad[i] = TileDemand::Pad{in.y0 - u.y0, u.y1 - in.y1,
                                       in.x0 - u.x0, u.x1 - in.x1};
          } else {
            in = u;
          }
          break;
        }
        case ExecKind::kShuffle:
          in = Region{floor_div(o.y0, e.factor), floor_div(o.x0, e.factor),
                      ceil_div(o.y1, e.factor), ceil_div(o.x1, e.factor)};
          break;
        case ExecKind::kUnshuffle:
          in = Region{o.y0 * e.factor, o.x0 * e.factor, o.y1 * e.factor,
                      o.x1 * e.factor};
          break;
        default:
          break;  // 1x1 conv, ReLU and add keep the region
      }
    }
    d.in[i] = in;
    merge_to(i - 1, in);
    if (e.kind == ExecKind::kAdd) merge_to(e.add_src, o);
  }
  d.input = input_dem;
  return d;
}

Region required_input_region(const ExecPlan& p, Region out_region) {
  return backward_regions(p, out_region, false).input;
}

std::uint64_t tile_conv_macs(const ExecPlan& p, const TileDemand& d) {
  std::uint64_t macs = 0;
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const ExecLayer& e = p.layers[i];
    if (e.kind != ExecKind::kConv3x3 && e.kind != ExecKind::kConv1x1) continue;
    macs += static_cast<std::uint64_t>(d.out[i].area()) * e.weights->kernel_h *
            e.weights->kernel_w * e.in_channels * e.out_channels;
  }
  return macs;
}

}  // namespace ernet
