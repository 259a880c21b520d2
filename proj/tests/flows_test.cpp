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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "ernet/cost.hpp"
#include "ernet/flows.hpp"
#include "ernet/image_io.hpp"
#include "ernet/model.hpp"

using namespace ernet;

namespace {

double max_abs_diff(const FeatureMap& a, const FeatureMap& b) {
  REQUIRE(a.same_shape(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

struct FlowRun {
  FeatureMap whole, rec, reuse;
  FlowCounters cw, cr, cu;
};

FlowRun run_all(const ModelSpec& m, const FeatureMap& img, int block) {
  FlowRun r;
  BlockSchedule s{block, 1};
  r.whole = infer_whole(m, img, &r.cw);
  r.rec = infer_block_recompute(m, img, s, &r.cr);
  r.reuse = infer_block_reuse(m, img, s, &r.cu);
  return r;
}

}  // namespace

TEST_CASE("three flows agree bit for bit: denoiser") {
  ModelSpec m = build_dnernet(parse_chain_name("E3R3-B2R2N1"), 3);
  init_weights(m, 42);
  FeatureMap img = noise_image(40, 40, 3, 7);
  FlowRun r = run_all(m, img, 16);
  CHECK(max_abs_diff(r.whole, r.rec) == 0.0);
  CHECK(max_abs_diff(r.whole, r.reuse) == 0.0);
  CHECK(r.cu.macs_total == r.cw.macs_total);
  CHECK(r.cr.macs_total > r.cw.macs_total);
  CHECK(r.cr.dram_feature_bytes == 0u);
}

TEST_CASE("three flows agree bit for bit: x4 upscaler") {
  ModelSpec m = build_sr4ernet(parse_chain_name("E1R3-B1R2N0"));
  init_weights(m, 3);
  FeatureMap img = noise_image(24, 24, 3, 11);
  FlowRun r = run_all(m, img, 16);
  CHECK(r.whole.height == 96);
  CHECK(r.whole.width == 96);
  CHECK(max_abs_diff(r.whole, r.rec) == 0.0);
  CHECK(max_abs_diff(r.whole, r.reuse) == 0.0);
  CHECK(r.cu.macs_total == r.cw.macs_total);
}

TEST_CASE("three flows agree on odd extents and partial tiles") {
  ModelSpec m = build_plain(4, 8, 1);
  init_weights(m, 9);
  FeatureMap img = noise_image(33, 29, 1, 5);
  FlowRun r = run_all(m, img, 8);
  CHECK(max_abs_diff(r.whole, r.rec) == 0.0);
  CHECK(max_abs_diff(r.whole, r.reuse) == 0.0);
  CHECK(r.cu.macs_total == r.cw.macs_total);
}

TEST_CASE("three flows agree: residual-block upscaler") {
  ModelSpec m = build_edsr_baseline(2, 16);
  init_weights(m, 21);
  FeatureMap img = noise_image(20, 20, 3, 13);
  FlowRun r = run_all(m, img, 32);
  CHECK(r.whole.height == 80);
  CHECK(max_abs_diff(r.whole, r.rec) == 0.0);
  CHECK(max_abs_diff(r.whole, r.reuse) == 0.0);
  CHECK(r.cu.dram_feature_bytes == 0u);  // no skip reads the frame itself
}

TEST_CASE("whole-image counters") {
  ModelSpec m = build_plain(3, 2, 1);
  init_weights(m, 1);
  FeatureMap img = noise_image(16, 16, 1, 1);
  FlowCounters c;
  infer_whole(m, img, &c);
  // first two conv outputs spill and return: 2 layers * 2ch * 256px * 2
  CHECK(c.dram_feature_bytes == 2048u);
  CHECK(c.macs_total == 90ull * 256);  // 9*(2+4+4) per pixel
  CHECK(c.line_buffer_peak_bytes == 0u);

  FlowCounters c4;
  infer_whole(m, img, &c4, 4);
  CHECK(c4.dram_feature_bytes == 4u * 2048u);
}

TEST_CASE("reuse re-reads the frame only for a global skip") {
  FeatureMap img = noise_image(32, 32, 3, 2);
  ModelSpec dn = build_dnernet(parse_chain_name("E3R1-B1R1N0"), 3);
  init_weights(dn, 2);
  FlowCounters c;
  infer_block_reuse(dn, img, BlockSchedule{16, 1}, &c);
  CHECK(c.dram_feature_bytes == 32ull * 32 * 3);

  // a bare chain's first module taps the raw input, so one frame re-read
  ChainCfg ccfg = parse_chain_name("E3R1-B2R1N0");
  ccfg.width = 8;
  ModelSpec ch = build_chain(ccfg, 8);
  init_weights(ch, 2);
  FeatureMap img8 = noise_image(32, 32, 8, 2);
  FlowCounters cc;
  infer_block_reuse(ch, img8, BlockSchedule{16, 1}, &cc);
  CHECK(cc.dram_feature_bytes == 32ull * 32 * 8);

  // every EDSR residual taps a conv output: nothing comes back from DRAM
  ModelSpec ed = build_edsr_baseline(2, 16);
  init_weights(ed, 2);
  FeatureMap img3 = noise_image(24, 24, 3, 2);
  FlowCounters ce;
  infer_block_reuse(ed, img3, BlockSchedule{16, 1}, &ce);
  CHECK(ce.dram_feature_bytes == 0u);
}

TEST_CASE("reuse line buffer tracks the closed formula") {
  // 10 modules whose 3x3 convs all read 8 channels: 2*(W+S)*8*10.
  ChainCfg cfg = parse_chain_name("E3R1-B10R1N0");
  cfg.width = 8;
  ModelSpec m = build_chain(cfg, 8);
  init_weights(m, 5);
  FeatureMap img = noise_image(128, 960, 8, 3);
  FlowCounters c;
  infer_block_reuse(m, img, BlockSchedule{64, 1}, &c);
  const std::uint64_t formula = line_buffer_bytes(m, 960, 64, 1);
  CHECK(formula == 163840u);
  CHECK(c.line_buffer_peak_bytes >= formula);
  // the measured cache also holds the deeper layers' dilated demand
  CHECK(c.line_buffer_peak_bytes <= formula + formula / 8);
}

TEST_CASE("block buffer peaks match the analytic model") {
  ModelSpec m = build_dnernet(parse_chain_name("E3R1-B2R2N1"), 3);
  init_weights(m, 8);
  FeatureMap img = noise_image(64, 64, 3, 8);

  FlowCounters cu;
  infer_block_reuse(m, img, BlockSchedule{32, 1}, &cu);
  // widest tensor: 96 channels on a 16x16 half-resolution block, 3 operands
  CHECK(block_buffer_bytes(m, 32, 1, FlowKind::kReuse) == 73728u);
  CHECK(cu.block_buffer_peak_bytes == 73728u);

  FlowCounters cr;
  infer_block_recompute(m, img, BlockSchedule{16, 1}, &cr);
  CHECK(block_buffer_bytes(m, 16, 1, FlowKind::kRecompute) == 41472u);
  CHECK(cr.block_buffer_peak_bytes == 41472u);

  ModelSpec pl = build_plain(2, 4, 1);
  init_weights(pl, 8);
  FeatureMap img1 = noise_image(24, 24, 1, 8);
  FlowCounters cp;
  infer_block_recompute(pl, img1, BlockSchedule{8, 1}, &cp);
  // conv1's demand for an interior tile: (8+2)^2 * 4 channels, 3 operands
  CHECK(block_buffer_bytes(pl, 8, 1, FlowKind::kRecompute) == 1200u);
  CHECK(cp.block_buffer_peak_bytes == 1200u);
}

TEST_CASE("recompute tile stats account for every mac") {
  ModelSpec m = build_dnernet(parse_chain_name("E3R1-B2R1N1"), 3);
  init_weights(m, 6);
  FeatureMap img = noise_image(48, 40, 3, 6);
  FlowCounters c;
  std::vector<TileStats> tiles;
  infer_block_recompute(m, img, BlockSchedule{16, 1}, &c, &tiles);
  REQUIRE(tiles.size() == 9u);  // 3x3 grid, last column 8 wide
  std::uint64_t macs = 0;
  std::int64_t area = 0;
  for (const TileStats& t : tiles) {
    macs += t.macs;
    area += t.out.area();
  }
  CHECK(macs == c.macs_total);
  CHECK(area == 48 * 40);
  CHECK(tiles[0].out == Region{0, 0, 16, 16});
  CHECK(tiles[2].out == Region{0, 32, 16, 40});
  CHECK(tiles[8].out == Region{32, 32, 48, 40});
}

TEST_CASE("one tile covering the frame recomputes nothing") {
  ModelSpec m = build_plain(6, 8, 1);
  init_weights(m, 4);
  FeatureMap img = noise_image(64, 64, 1, 4);
  FlowCounters cw, cr;
  infer_whole(m, img, &cw);
  infer_block_recompute(m, img, BlockSchedule{64, 1}, &cr);
  CHECK(cr.macs_total == cw.macs_total);
}

TEST_CASE("block size must respect the resolution divisor") {
  ModelSpec m = build_dnernet(parse_chain_name("E3R1-B1R1N0"), 3);
  init_weights(m, 1);
  FeatureMap img = noise_image(32, 32, 3, 1);
  CHECK_THROWS_AS(infer_block_recompute(m, img, BlockSchedule{15, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(infer_block_reuse(m, img, BlockSchedule{15, 1}),
                  std::invalid_argument);
  ModelSpec sr = build_sr4ernet(parse_chain_name("E3R1-B1R1N0"));
  init_weights(sr, 1);
  CHECK_THROWS_AS(infer_block_reuse(sr, img, BlockSchedule{18, 1}),
                  std::invalid_argument);
}

TEST_CASE("deterministic end to end") {
  ModelSpec a = build_dnernet(parse_chain_name("E3R1-B2R2N0"), 3);
  ModelSpec b = build_dnernet(parse_chain_name("E3R1-B2R2N0"), 3);
  init_weights(a, 17);
  init_weights(b, 17);
  FeatureMap img = noise_image(32, 32, 3, 17);
  FeatureMap oa = infer_block_reuse(a, img, BlockSchedule{16, 1});
  FeatureMap ob = infer_block_reuse(b, img, BlockSchedule{16, 1});
  CHECK(oa.data == ob.data);
}
