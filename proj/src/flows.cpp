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

#include "ernet/flows.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <limits>
#include <stdexcept>

#include "ernet/cost.hpp"
#include "ernet/util.hpp"

namespace ernet {
namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -(-a / b); }

// ceil(v * r) for non-negative v.
int ceil_scaled(int v, const Rational& r) {
  const std::int64_t n = static_cast<std::int64_t>(v) * r.num;
  return static_cast<int>((n + r.den - 1) / r.den);
}

// Copies `want` out of a map covering `have`.
FeatureMap extract(const FeatureMap& src, const Region& have,
                   const Region& want) {
  if (!have.contains(want))
    throw std::logic_error("flows: extract outside stored region");
  FeatureMap out(want.height(), want.width(), src.channels);
  const std::size_t row_bytes =
      static_cast<std::size_t>(out.width) * out.channels * sizeof(double);
  for (int y = 0; y < out.height; ++y) {
    const double* s = src.row(want.y0 - have.y0 + y) +
                      static_cast<std::size_t>(want.x0 - have.x0) *
                          src.channels;
    std::memcpy(out.row(y), s, row_bytes);
  }
  return out;
}

void relu_inplace(FeatureMap& f) {
  for (double& v : f.data) v = v < 0.0 ? 0.0 : v;
}

struct TileResult {
  FeatureMap out;
  std::uint64_t macs = 0;
  std::uint64_t max_operand = 0;  // pixels * channels of the largest tensor
};

// Runs every layer over one tile demand.  Shared by the whole-image flow
// (single demand covering the image) and the recompute flow (one demand per
// output tile).  Zero padding recorded in the demand reproduces whole-image
// padding exactly, which is what makes the flows bit-identical.
TileResult run_tile(const ExecPlan& p, const FeatureMap& img,
                    const TileDemand& d, std::vector<ConvScratch>& scratch) {
  const int n = static_cast<int>(p.layers.size());
  const Region img_region{0, 0, img.height, img.width};
  std::vector<FeatureMap> maps(n);
  std::vector<int> uses(n);
  for (int i = 0; i < n; ++i)
    uses[i] = static_cast<int>(p.consumers[i].size());

  TileResult r;
  r.max_operand =
      static_cast<std::uint64_t>(d.input.area()) * img.channels;
  auto consume = [&](int idx) {
    if (idx >= 0 && --uses[idx] == 0) maps[idx] = FeatureMap();
  };

  for (int i = 0; i < n; ++i) {
    const ExecLayer& e = p.layers[i];
    const Region& o = d.out[i];
    const Region& in = d.in[i];
    if (o.empty()) throw std::logic_error("flows: empty tile demand");

    // Main operand: previous layer's stored tile, or the input image.
    const FeatureMap& prev = i == 0 ? img : maps[i - 1];
    const Region& prev_region = i == 0 ? img_region : d.out[i - 1];
    FeatureMap holder;
    const FeatureMap* src = &prev;
    if (!(in == prev_region)) {
      holder = extract(prev, prev_region, in);
      src = &holder;
    }

    FeatureMap res;
    switch (e.kind) {
      case ExecKind::kConv3x3: {
        const TileDemand::Pad& pd = d.pad[i];
        if (pd.top || pd.bottom || pd.left || pd.right) {
          FeatureMap padded =
              pad_zero(*src, pd.top, pd.bottom, pd.left, pd.right);
          res = conv2d_valid(padded, *e.weights, &scratch[i]);
        } else {
          res = conv2d_valid(*src, *e.weights, &scratch[i]);
        }
        r.macs += conv_mac_count(res.height, res.width, *e.weights);
        break;
      }
      case ExecKind::kConv1x1:
        res = conv2d_valid(*src, *e.weights, &scratch[i]);
        r.macs += conv_mac_count(res.height, res.width, *e.weights);
        break;
      case ExecKind::kReLU:
        res = relu(*src);
        break;
      case ExecKind::kShuffle: {
        FeatureMap shuffled = pixel_shuffle(*src, e.factor);
        const Region covered{in.y0 * e.factor, in.x0 * e.factor,
                             in.y1 * e.factor, in.x1 * e.factor};
        res = (covered == o) ? std::move(shuffled)
                             : extract(shuffled, covered, o);
        break;
      }
      case ExecKind::kUnshuffle:
        res = pixel_unshuffle(*src, e.factor);
        break;
      case ExecKind::kAdd: {
        FeatureMap other =
            e.add_src < 0 ? extract(img, img_region, o)
                          : extract(maps[e.add_src], d.out[e.add_src], o);
        res = add(*src, other);
        consume(e.add_src);
        break;
      }
    }
    if (e.relu_after) relu_inplace(res);
    if (res.height != o.height() || res.width != o.width())
      throw std::logic_error("flows: tile result does not match demand");

    r.max_operand =
        std::max(r.max_operand, static_cast<std::uint64_t>(res.size()));
    maps[i] = std::move(res);
    if (i > 0) consume(i - 1);
  }
  r.out = std::move(maps[n - 1]);
  return r;
}

ExecPlan bound_plan(const ModelSpec& m, const FeatureMap& img) {
  ERNET_REQUIRE(img.channels == m.input_channels,
                "flows: image channels do not match the model");
  ExecPlan p = build_plan(m);
  bind_image(p, img.height, img.width);
  return p;
}

// ---------------------------------------------------------------------------
// Reuse flow engine.
//
// Every layer owns a plane of output rows.  Row y holds a computed prefix
// of prefix[y] columns; demand-driven recursion extends prefixes exactly to
// what each output block needs, so no feature is ever computed twice.  Rows
// no longer reachable by any consumer are trimmed, keeping the live window
// proportional to the block band height.
// ---------------------------------------------------------------------------
class ReuseEngine {
 public:
  ReuseEngine(const ExecPlan& p, const FeatureMap& img, int bpf)
      : p_(p),
        img_(img),
        bpf_(bpf),
        planes_(p.layers.size()),
        scratch_(p.layers.size()) {
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
      planes_[i].width = p.layers[i].out_w;
      planes_[i].height = p.layers[i].out_h;
      planes_[i].ch = p.layers[i].out_channels;
    }
  }

  FeatureMap run(int block, FlowCounters* c);

 private:
  struct Plane {
    int width = 0, height = 0, ch = 0;
    int base = 0;  // global row index of rows.front()
    std::deque<std::vector<double>> rows;
    std::deque<int> prefix;  // computed column prefix per stored row
    int complete_floor = 0;  // rows below are fully computed

    int prefix_at(int y) const {
      if (y < base) return width;
      const std::size_t idx = static_cast<std::size_t>(y - base);
      return idx < prefix.size() ? prefix[idx] : 0;
    }
  };

  int first_incomplete(int l) {
    Plane& pl = planes_[l];
    int y = std::max(pl.complete_floor, 0);
    while (y < pl.height && pl.prefix_at(y) >= pl.width) ++y;
    pl.complete_floor = y;
    return y;
  }

  // Lowest input row of layer l still reachable once its output rows below
  // `out_row` remain to be produced.
  static int back_map(const ExecLayer& e, int out_row) {
    switch (e.kind) {
      case ExecKind::kConv3x3:
        return out_row - 1;
      case ExecKind::kShuffle:
        return floor_div(out_row, e.factor);
      case ExecKind::kUnshuffle:
        return out_row * e.factor;
      default:
        return out_row;
    }
  }

  void ensure(int l, const Region& r) {
    if (r.empty()) return;
    if (l < 0) return;  // network input is always available
    Plane& pl = planes_[l];
    if (r.y0 < 0 || r.x0 < 0 || r.y1 > pl.height || r.x1 > pl.width)
      throw std::logic_error("reuse: demand outside layer bounds");
    int y = r.y0;
    while (y < r.y1) {
      const int k = pl.prefix_at(y);
      if (k >= r.x1) {
        ++y;
        continue;
      }
      int y_end = y + 1;
      while (y_end < r.y1 && pl.prefix_at(y_end) == k) ++y_end;
      compute_rect(l, Region{y, k, y_end, r.x1});
      y = y_end;
    }
  }

  void compute_rect(int l, const Region& o) {
    const ExecLayer& e = p_.layers[l];
    FeatureMap res;
    switch (e.kind) {
      case ExecKind::kConv3x3: {
        const Region u{o.y0 - 1, o.x0 - 1, o.y1 + 1, o.x1 + 1};
        const Region in{std::max(u.y0, 0), std::max(u.x0, 0),
                        std::min(u.y1, e.in_h), std::min(u.x1, e.in_w)};
        ensure(l - 1, in);
        FeatureMap patch = gather(l - 1, in);
        if (!(in == u))
          patch = pad_zero(patch, in.y0 - u.y0, u.y1 - in.y1, in.x0 - u.x0,
                           u.x1 - in.x1);
        res = conv2d_valid(patch, *e.weights, &scratch_[l]);
        macs_ += conv_mac_count(res.height, res.width, *e.weights);
        break;
      }
      case ExecKind::kConv1x1: {
        ensure(l - 1, o);
        FeatureMap patch = gather(l - 1, o);
        res = conv2d_valid(patch, *e.weights, &scratch_[l]);
        macs_ += conv_mac_count(res.height, res.width, *e.weights);
        break;
      }
      case ExecKind::kReLU: {
        ensure(l - 1, o);
        res = gather(l - 1, o);
        relu_inplace(res);
        break;
      }
      case ExecKind::kShuffle: {
        const Region in{floor_div(o.y0, e.factor), floor_div(o.x0, e.factor),
                        ceil_div(o.y1, e.factor), ceil_div(o.x1, e.factor)};
        ensure(l - 1, in);
        FeatureMap shuffled = pixel_shuffle(gather(l - 1, in), e.factor);
        const Region covered{in.y0 * e.factor, in.x0 * e.factor,
                             in.y1 * e.factor, in.x1 * e.factor};
        res = (covered == o) ? std::move(shuffled)
                             : extract(shuffled, covered, o);
        break;
      }
      case ExecKind::kUnshuffle: {
        const Region in{o.y0 * e.factor, o.x0 * e.factor, o.y1 * e.factor,
                        o.x1 * e.factor};
        ensure(l - 1, in);
        res = pixel_unshuffle(gather(l - 1, in), e.factor);
        break;
      }
      case ExecKind::kAdd: {
        ensure(l - 1, o);
        FeatureMap a = gather(l - 1, o);
        FeatureMap b;
        if (e.add_src < 0) {
          b = extract(img_, Region{0, 0, img_.height, img_.width}, o);
          // Skip-connection operand: the frame was consumed long ago by the
          // first layer, so streaming hardware re-reads it here.
          dram_ += static_cast<std::uint64_t>(o.area()) * e.out_channels *
                   bpf_;
        } else {
          ensure(e.add_src, o);
          b = gather(e.add_src, o);
        }
        res = add(a, b);
        break;
      }
    }
    if (e.relu_after) relu_inplace(res);
    store(l, o, res);
  }

  FeatureMap gather(int l, const Region& r) {
    if (l < 0) return extract(img_, Region{0, 0, img_.height, img_.width}, r);
    const Plane& pl = planes_[l];
    FeatureMap out(r.height(), r.width(), pl.ch);
    const std::size_t row_bytes =
        static_cast<std::size_t>(out.width) * pl.ch * sizeof(double);
    for (int y = r.y0; y < r.y1; ++y) {
      if (y < pl.base || pl.prefix_at(y) < r.x1)
        throw std::logic_error("reuse: gathering a trimmed or missing row");
      const std::vector<double>& row =
          pl.rows[static_cast<std::size_t>(y - pl.base)];
      std::memcpy(out.row(y - r.y0),
                  row.data() + static_cast<std::size_t>(r.x0) * pl.ch,
                  row_bytes);
    }
    return out;
  }

  void store(int l, const Region& o, const FeatureMap& f) {
    Plane& pl = planes_[l];
    if (pl.rows.empty()) pl.base = o.y0;
    if (o.y0 < pl.base)
      throw std::logic_error("reuse: storing above the trimmed base");
    while (pl.base + static_cast<int>(pl.rows.size()) < o.y1) {
      pl.rows.emplace_back(static_cast<std::size_t>(pl.width) * pl.ch, 0.0);
      pl.prefix.push_back(0);
    }
    const std::size_t seg_bytes =
        static_cast<std::size_t>(o.width()) * pl.ch * sizeof(double);
    for (int y = o.y0; y < o.y1; ++y) {
      const std::size_t idx = static_cast<std::size_t>(y - pl.base);
      if (pl.prefix[idx] != o.x0)
        throw std::logic_error("reuse: non-contiguous prefix write");
      std::memcpy(pl.rows[idx].data() +
                      static_cast<std::size_t>(o.x0) * pl.ch,
                  f.row(y - o.y0), seg_bytes);
      pl.prefix[idx] = o.x1;
    }
  }

  void trim(int emitted_floor) {
    const int n = static_cast<int>(p_.layers.size());
    for (int l = 0; l < n; ++l) {
      int need = std::numeric_limits<int>::max();
      for (int c : p_.consumers[l])
        need = std::min(need, back_map(p_.layers[c], first_incomplete(c)));
      if (l == n - 1) need = std::min(need, emitted_floor);
      const int keep = need == std::numeric_limits<int>::max()
                           ? planes_[l].height
                           : need - 2;
      Plane& pl = planes_[l];
      while (pl.base < keep && !pl.rows.empty()) {
        pl.rows.pop_front();
        pl.prefix.pop_front();
        ++pl.base;
      }
    }
  }

  // Hardware cache model for this block: per 3x3 convolution, two input
  // rows across the layer width plus two input columns across the block
  // height (fewer at image borders, where no cached neighbor exists).
  void sample_line_buffer(const Region& block) {
    const TileDemand d = backward_regions(p_, block, true);
    std::uint64_t bytes = 0;
    for (std::size_t i = 0; i < p_.layers.size(); ++i) {
      const ExecLayer& e = p_.layers[i];
      if (e.kind != ExecKind::kConv3x3) continue;
      const Region& r = d.in[i];
      if (r.empty()) continue;
      const std::uint64_t rows =
          static_cast<std::uint64_t>(std::min(2, r.y0)) * e.in_w;
      const std::uint64_t cols =
          static_cast<std::uint64_t>(std::min(2, r.x0)) * r.height();
      bytes += (rows + cols) * e.in_channels;
    }
    lb_peak_ = std::max(lb_peak_, bytes * bpf_);
  }

  // Three-operand block-buffer model: the block's footprint at each layer
  // boundary, largest tensor wins.
  void sample_block_buffer(const Region& block) {
    const Rational s_out(p_.model->scale);
    std::uint64_t max_pxch =
        static_cast<std::uint64_t>(
            ceil_scaled(block.height(), Rational(1) / s_out)) *
        ceil_scaled(block.width(), Rational(1) / s_out) * img_.channels;
    for (const ExecLayer& e : p_.layers) {
      const Rational r = e.scale / s_out;
      const std::uint64_t pxch =
          static_cast<std::uint64_t>(ceil_scaled(block.height(), r)) *
          ceil_scaled(block.width(), r) * e.out_channels;
      max_pxch = std::max(max_pxch, pxch);
    }
    bb_peak_ = std::max(bb_peak_, 3 * max_pxch * bpf_);
  }

  const ExecPlan& p_;
  const FeatureMap& img_;
  const int bpf_;
  std::vector<Plane> planes_;
  std::vector<ConvScratch> scratch_;
  std::uint64_t macs_ = 0, dram_ = 0, lb_peak_ = 0, bb_peak_ = 0;
};

FeatureMap ReuseEngine::run(int block, FlowCounters* c) {
  const int last = static_cast<int>(p_.layers.size()) - 1;
  FeatureMap out(p_.out_h, p_.out_w, p_.layers[last].out_channels);
  for (int by = 0; by < p_.out_h; by += block) {
    const int y1 = std::min(by + block, p_.out_h);
    for (int bx = 0; bx < p_.out_w; bx += block) {
      const int x1 = std::min(bx + block, p_.out_w);
      const Region rect{by, bx, y1, x1};
      ensure(last, rect);
      const FeatureMap tile = gather(last, rect);
      const std::size_t row_bytes =
          static_cast<std::size_t>(tile.width) * tile.channels *
          sizeof(double);
      for (int y = rect.y0; y < rect.y1; ++y)
        std::memcpy(out.row(y) + static_cast<std::size_t>(rect.x0) *
                                     out.channels,
                    tile.row(y - rect.y0), row_bytes);
      sample_line_buffer(rect);
      sample_block_buffer(rect);
      trim(/*emitted_floor=*/by);
    }
    trim(/*emitted_floor=*/y1);
  }
  if (c) {
    c->macs_total = macs_;
    c->dram_feature_bytes = dram_;
    c->line_buffer_peak_bytes = lb_peak_;
    c->block_buffer_peak_bytes = bb_peak_;
  }
  return out;
}

}  // namespace

FeatureMap infer_whole(const ModelSpec& m, const FeatureMap& img,
                       FlowCounters* counters, int bytes_per_feature) {
  ERNET_REQUIRE(bytes_per_feature >= 1, "flows: bytes_per_feature < 1");
  ExecPlan p = bound_plan(m, img);
  std::vector<ConvScratch> scratch(p.layers.size());
  const TileDemand d =
      backward_regions(p, Region{0, 0, p.out_h, p.out_w}, true);
  TileResult r = run_tile(p, img, d, scratch);
  if (counters) {
    counters->macs_total = r.macs;
    counters->dram_feature_bytes = internal_feature_bytes(p, bytes_per_feature);
    counters->line_buffer_peak_bytes = 0;
    counters->block_buffer_peak_bytes =
        3 * r.max_operand * bytes_per_feature;
  }
  return std::move(r.out);
}

FeatureMap infer_block_recompute(const ModelSpec& m, const FeatureMap& img,
                                 const BlockSchedule& s,
                                 FlowCounters* counters,
                                 std::vector<TileStats>* tiles) {
  ERNET_REQUIRE(s.bytes_per_feature >= 1, "flows: bytes_per_feature < 1");
  ExecPlan p = bound_plan(m, img);
  ERNET_REQUIRE(s.block_size >= 1 && s.block_size % p.divisor == 0,
                "flows: block size must be a positive multiple of the "
                "model's resolution divisor");
  std::vector<ConvScratch> scratch(p.layers.size());
  FeatureMap out(p.out_h, p.out_w, p.layers.back().out_channels);
  std::uint64_t macs = 0, max_operand = 0;
  for (int by = 0; by < p.out_h; by += s.block_size) {
    const int y1 = std::min(by + s.block_size, p.out_h);
    for (int bx = 0; bx < p.out_w; bx += s.block_size) {
      const int x1 = std::min(bx + s.block_size, p.out_w);
      const Region rect{by, bx, y1, x1};
      const TileDemand d = backward_regions(p, rect, true);
      TileResult r = run_tile(p, img, d, scratch);
      const std::size_t row_bytes =
          static_cast<std::size_t>(r.out.width) * r.out.channels *
          sizeof(double);
      for (int y = rect.y0; y < rect.y1; ++y)
        std::memcpy(out.row(y) + static_cast<std::size_t>(rect.x0) *
                                     out.channels,
                    r.out.row(y - rect.y0), row_bytes);
      macs += r.macs;
      max_operand = std::max(max_operand, r.max_operand);
      if (tiles) tiles->push_back(TileStats{rect, r.macs});
    }
  }
  if (counters) {
    counters->macs_total = macs;
    counters->dram_feature_bytes = 0;  // features never leave the chip
    counters->line_buffer_peak_bytes = 0;
    counters->block_buffer_peak_bytes =
        3 * max_operand * static_cast<std::uint64_t>(s.bytes_per_feature);
  }
  return out;
}

FeatureMap infer_block_reuse(const ModelSpec& m, const FeatureMap& img,
                             const BlockSchedule& s, FlowCounters* counters) {
  ERNET_REQUIRE(s.bytes_per_feature >= 1, "flows: bytes_per_feature < 1");
  ExecPlan p = bound_plan(m, img);
  ERNET_REQUIRE(s.block_size >= 1 && s.block_size % p.divisor == 0,
                "flows: block size must be a positive multiple of the "
                "model's resolution divisor");
  ReuseEngine engine(p, img, s.bytes_per_feature);
  return engine.run(s.block_size, counters);
}

}  // namespace ernet
