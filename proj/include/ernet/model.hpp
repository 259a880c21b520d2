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

#ifndef ERNET_MODEL_HPP_
#define ERNET_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ernet/rational.hpp"
#include "ernet/tensor.hpp"

namespace ernet {

enum class LayerKind {
  kConv3x3,
  kConv1x1,
  kReLU,
  kPixelShuffle,
  kPixelUnshuffle,
  kTap,          // names the feature at this point for a later residual add
  kResidualAdd,  // adds the feature recorded by an earlier tap
};

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
  LayerKind kind;
  int in_channels = 0;   // conv kinds only
  int out_channels = 0;  // conv kinds only
  int factor = 0;        // shuffle kinds only
  int tap_id = -1;       // tap / residual-add kinds only
  WeightTensor weights;  // conv kinds only

  static LayerSpec conv3x3(int in_c, int out_c);
  static LayerSpec conv1x1(int in_c, int out_c);
  static LayerSpec relu();
  static LayerSpec pixel_shuffle(int r);
  static LayerSpec pixel_unshuffle(int r);
  static LayerSpec tap(int id);
  static LayerSpec residual_add(int id);
};

// A model is a straight-line layer program.  Taps/residual adds express skip
// connections; a residual add must reference a tap declared earlier, at the
// same shape.  `scale` is output pixels per input pixel along one axis.
struct ModelSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  int input_channels = 0;
  int output_channels = 0;
  int scale = 1;
};

// Expander-reducer module variants.  The first digit is the expansion kernel
// size, the second the reduction kernel size; exactly one ReLU sits between
// them.
enum class Variant { kE3R1, kE1R3, kE3R3 };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& s);

// Configuration of a module chain.  The first `boosted` modules run at
// `base_ratio + 1`, the remainder at `base_ratio`, which realizes fractional
// effective expansion ratios base_ratio + boosted/count.
struct ChainCfg {
  Variant variant = Variant::kE3R1;
  int count = 1;       // B, number of modules
  int base_ratio = 1;  // R_I
  int boosted = 0;     // N, modules running one ratio step higher
  int width = 32;      // C, module input/output channels
  bool relu_before_residual = false;
};

// R_I + N/B as an exact rational.  Throws if N >= B.
Rational effective_expansion_ratio(int count, int base_ratio, int boosted);

// Chain-name grammar: E{3|1}R{1|3}-B<count>R<base>N<boosted>, e.g.
// "E3R1-B28R3N9".  parse/format round-trip exactly.
ChainCfg parse_chain_name(const std::string& name);
std::string format_chain_name(const ChainCfg& cfg);

// One expander-reducer module appended as layers: tap, expand conv, ReLU,
// reduce conv, optional ReLU, residual add from the tap.
void append_ermodule(ModelSpec& m, Variant v, int width, int ratio,
                     bool relu_before_residual, int tap_id);

// Bare module chain at unit scale (no head/tail); input = output = C.
ModelSpec build_chain(const ChainCfg& cfg, int image_channels);

// Denoiser: global tap, space-to-depth by 2, 3x3 head into the chain,
// 3x3 back to 4*image_channels, depth-to-space, global residual add.
ModelSpec build_dnernet(const ChainCfg& cfg, int image_channels);

// x4 super-resolution: 3x3 head, body tap, chain, 3x3, body residual add,
// then two upscale stages (3x3 C->4C + depth-to-space) and a 3x3 to RGB.
ModelSpec build_sr4ernet(const ChainCfg& cfg);

// Plain-conv denoiser baseline: space-to-depth head, D 3x3 convolutions with
// ReLU between (the last conv has none), depth-to-space, global residual.
ModelSpec build_ffdnet_star(int depth, int width, int image_channels);

// x4 super-resolution baseline: 3x3 head, `resblocks` two-conv residual
// blocks, body conv + body residual, then the same upscale tail as above.
ModelSpec build_edsr_baseline(int resblocks, int width);

// D consecutive 3x3 convolutions (first image_channels->C, rest C->C) with
// ReLU between; no skips, no scale change.
ModelSpec build_plain(int depth, int width, int image_channels);

// Structural checks: channel chaining, taps declared before use, shuffle
// divisibility, add/tap shape agreement.  Throws std::invalid_argument.
void validate_model(const ModelSpec& m);

std::uint64_t param_count(const ModelSpec& m);

// Multiply-accumulates per output pixel, exact.  Layers at other resolutions
// are weighted by their pixel rate relative to the output.
Rational macs_per_output_pixel(const ModelSpec& m);

// Deterministic weight init: one SplitMix64 stream, conv layers in program
// order, each weight uniform in [-s, s) with s = (kh*kw*in_c)^-1/2, drawn in
// (out_c, ky, kx, in_c) order.  Biases are zero.
void init_weights(ModelSpec& m, std::uint64_t seed);

}  // namespace ernet

#endif  // ERNET_MODEL_HPP_
