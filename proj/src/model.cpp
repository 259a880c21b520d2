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

#include "ernet/model.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "ernet/rng.hpp"
#include "ernet/util.hpp"

namespace ernet {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv3x3: return "conv3x3";
    case LayerKind::kConv1x1: return "conv1x1";
    case LayerKind::kReLU: return "relu";
    case LayerKind::kPixelShuffle: return "pixel_shuffle";
    case LayerKind::kPixelUnshuffle: return "pixel_unshuffle";
    case LayerKind::kTap: return "tap";
    case LayerKind::kResidualAdd: return "residual_add";
  }
  return "?";
}

LayerSpec LayerSpec::conv3x3(int in_c, int out_c) {
  LayerSpec l;
  l.kind = LayerKind::kConv3x3;
  l.in_channels = in_c;
  l.out_channels = out_c;
  l.weights = WeightTensor(out_c, in_c, 3, 3);
  return l;
}

LayerSpec LayerSpec::conv1x1(int in_c, int out_c) {
  LayerSpec l;
  l.kind = LayerKind::kConv1x1;
  l.in_channels = in_c;
  l.out_channels = out_c;
  l.weights = WeightTensor(out_c, in_c, 1, 1);
  return l;
}

LayerSpec LayerSpec::relu() {
  LayerSpec l;
  l.kind = LayerKind::kReLU;
  return l;
}

LayerSpec LayerSpec::pixel_shuffle(int r) {
  LayerSpec l;
  l.kind = LayerKind::kPixelShuffle;
  l.factor = r;
  return l;
}

LayerSpec LayerSpec::pixel_unshuffle(int r) {
  LayerSpec l;
  l.kind = LayerKind::kPixelUnshuffle;
  l.factor = r;
  return l;
}

LayerSpec LayerSpec::tap(int id) {
  LayerSpec l;
  l.kind = LayerKind::kTap;
  l.tap_id = id;
  return l;
}

LayerSpec LayerSpec::residual_add(int id) {
  LayerSpec l;
  l.kind = LayerKind::kResidualAdd;
  l.tap_id = id;
  return l;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kE3R1: return "E3R1";
    case Variant::kE1R3: return "E1R3";
    case Variant::kE3R3: return "E3R3";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "E3R1") return Variant::kE3R1;
  if (s == "E1R3") return Variant::kE1R3;
  if (s == "E3R3") return Variant::kE3R3;
  throw std::invalid_argument("unknown module variant: " + s);
}

Rational effective_expansion_ratio(int count, int base_ratio, int boosted) {
  ERNET_REQUIRE(count >= 1, "effective_expansion_ratio: count must be >= 1");
  ERNET_REQUIRE(base_ratio >= 1,
                "effective_expansion_ratio: base ratio must be >= 1");
  ERNET_REQUIRE(boosted >= 0 && boosted < count,
                "effective_expansion_ratio: boosted count must be in [0, count)");
  return Rational(static_cast<std::int64_t>(base_ratio) * count + boosted,
                  count);
}

ChainCfg parse_chain_name(const std::string& name) {
  int e = 0, r = 0, b = 0, ri = 0, n = 0;
  int consumed = 0;
  if (std::sscanf(name.c_str(), "E%1dR%1d-B%dR%dN%d%n", &e, &r, &b, &ri, &n,
                  &consumed) != 5 ||
      consumed != static_cast<int>(name.size()))
    throw std::invalid_argument("malformed chain name: " + name);
  ChainCfg cfg;
  if (e == 3 && r == 1) cfg.variant = Variant::kE3R1;
  else if (e == 1 && r == 3) cfg.variant = Variant::kE1R3;
  else if (e == 3 && r == 3) cfg.variant = Variant::kE3R3;
  else throw std::invalid_argument("unknown module variant in name: " + name);
  cfg.count = b;
  cfg.base_ratio = ri;
  cfg.boosted = n;
  ERNET_REQUIRE(cfg.count >= 1, "chain name: module count must be >= 1");
  ERNET_REQUIRE(cfg.base_ratio >= 1, "chain name: base ratio must be >= 1");
  ERNET_REQUIRE(cfg.boosted >= 0 && cfg.boosted < cfg.count,
                "chain name: boosted count must be in [0, count)");
  return cfg;
}

std::string format_chain_name(const ChainCfg& cfg) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-B%dR%dN%d", variant_name(cfg.variant),
                cfg.count, cfg.base_ratio, cfg.boosted);
  return buf;
}

void append_ermodule(ModelSpec& m, Variant v, int width, int ratio,
                     bool relu_before_residual, int tap_id) {
  ERNET_REQUIRE(width >= 1 && ratio >= 1, "append_ermodule: bad width/ratio");
  const int wide = width * ratio;
  m.layers.push_back(LayerSpec::tap(tap_id));
  switch (v) {
    case Variant::kE3R1:
      m.layers.push_back(LayerSpec::conv3x3(width, wide));
      m.layers.push_back(LayerSpec::relu());
      m.layers.push_back(LayerSpec::conv1x1(wide, width));
      break;
    case Variant::kE1R3:
      m.layers.push_back(LayerSpec::conv1x1(width, wide));
      m.layers.push_back(LayerSpec::relu());
      m.layers.push_back(LayerSpec::conv3x3(wide, width));
      break;
    case Variant::kE3R3:
      m.layers.push_back(LayerSpec::conv3x3(width, wide));
      m.layers.push_back(LayerSpec::relu());
      m.layers.push_back(LayerSpec::conv3x3(wide, width));
      break;
  }
  if (relu_before_residual) m.layers.push_back(LayerSpec::relu());
  m.layers.push_back(LayerSpec::residual_add(tap_id));
}

namespace {

// Appends the whole chain; tap ids start at `first_tap`.
void append_chain(ModelSpec& m, const ChainCfg& cfg, int first_tap) {
  for (int i = 0; i < cfg.count; ++i) {
    const int ratio = cfg.base_ratio + (i < cfg.boosted ? 1 : 0);
    append_ermodule(m, cfg.variant, cfg.width, ratio,
                    cfg.relu_before_residual, first_tap + i);
  }
}

// 3x3 C->4C + depth-to-space, twice, then 3x3 to `out_c`.
void append_upscale_tail(ModelSpec& m, int width, int out_c) {
  m.layers.push_back(LayerSpec::conv3x3(width, 4 * width));
  m.layers.push_back(LayerSpec::pixel_shuffle(2));
  m.layers.push_back(LayerSpec::conv3x3(width, 4 * width));
  m.layers.push_back(LayerSpec::pixel_shuffle(2));
  m.layers.push_back(LayerSpec::conv3x3(width, out_c));
}

}  // namespace

ModelSpec build_chain(const ChainCfg& cfg, int image_channels) {
  ERNET_REQUIRE(image_channels == cfg.width,
                "build_chain: bare chains consume exactly `width` channels");
  ModelSpec m;
  m.name = "Chain-" + format_chain_name(cfg);
  m.input_channels = image_channels;
  m.output_channels = cfg.width;
  m.scale = 1;
  append_chain(m, cfg, 0);
  validate_model(m);
  return m;
}

ModelSpec build_dnernet(const ChainCfg& cfg, int image_channels) {
  ERNET_REQUIRE(image_channels == 1 || image_channels == 3,
                "build_dnernet: image channels must be 1 or 3");
  const int unshuffled = 4 * image_channels;
  ModelSpec m;
  m.name = "DnERNet-" + std::to_string(unshuffled) + "ch-" +
           format_chain_name(cfg);
  m.input_channels = image_channels;
  m.output_channels = image_channels;
  m.scale = 1;
  const int global_tap = 1000;
  m.layers.push_back(LayerSpec::tap(global_tap));
  m.layers.push_back(LayerSpec::pixel_unshuffle(2));
  m.layers.push_back(LayerSpec::conv3x3(unshuffled, cfg.width));
  m.layers.push_back(LayerSpec::relu());
  append_chain(m, cfg, 0);
  m.layers.push_back(LayerSpec::conv3x3(cfg.width, unshuffled));
  m.layers.push_back(LayerSpec::pixel_shuffle(2));
  m.layers.push_back(LayerSpec::residual_add(global_tap));
  validate_model(m);
  return m;
}

ModelSpec build_sr4ernet(const ChainCfg& cfg) {
  ModelSpec m;
  m.name = "SR4ERNet-" + format_chain_name(cfg);
  m.input_channels = 3;
  m.output_channels = 3;
  m.scale = 4;
  const int body_tap = 1000;
  m.layers.push_back(LayerSpec::conv3x3(3, cfg.width));
  m.layers.push_back(LayerSpec::tap(body_tap));
  append_chain(m, cfg, 0);
  m.layers.push_back(LayerSpec::conv3x3(cfg.width, cfg.width));
  m.layers.push_back(LayerSpec::residual_add(body_tap));
  append_upscale_tail(m, cfg.width, 3);
  validate_model(m);
  return m;
}

ModelSpec build_ffdnet_star(int depth, int width, int image_channels) {
  ERNET_REQUIRE(depth >= 2, "build_ffdnet_star: depth must be >= 2");
  ERNET_REQUIRE(image_channels == 1 || image_channels == 3,
                "build_ffdnet_star: image channels must be 1 or 3");
  const int unshuffled = 4 * image_channels;
  ModelSpec m;
  m.name = "FFDNetStar-D" + std::to_string(depth) + "-C" +
           std::to_string(width);
  m.input_channels = image_channels;
  m.output_channels = image_channels;
  m.scale = 1;
  const int global_tap = 1000;
  m.layers.push_back(LayerSpec::tap(global_tap));
  m.layers.push_back(LayerSpec::pixel_unshuffle(2));
  m.layers.push_back(LayerSpec::conv3x3(unshuffled, width));
  m.layers.push_back(LayerSpec::relu());
  for (int i = 0; i < depth - 2; ++i) {
    m.layers.push_back(LayerSpec::conv3x3(width, width));
    m.layers.push_back(LayerSpec::relu());
  }
  m.layers.push_back(LayerSpec::conv3x3(width, unshuffled));
  m.layers.push_back(LayerSpec::pixel_shuffle(2));
  m.layers.push_back(LayerSpec::residual_add(global_tap));
  validate_model(m);
  return m;
}

ModelSpec build_edsr_baseline(int resblocks, int width) {
  ERNET_REQUIRE(resblocks >= 1, "build_edsr_baseline: resblocks must be >= 1");
  ModelSpec m;
  m.name = "EDSR-baseline-B" + std::to_string(resblocks);
  m.input_channels = 3;
  m.output_channels = 3;
  m.scale = 4;
  const int body_tap = 1000;
  m.layers.push_back(LayerSpec::conv3x3(3, width));
  m.layers.push_back(LayerSpec::tap(body_tap));
  for (int i = 0; i < resblocks; ++i) {
    m.layers.push_back(LayerSpec::tap(i));
    m.layers.push_back(LayerSpec::conv3x3(width, width));
    m.layers.push_back(LayerSpec::relu());
    m.layers.push_back(LayerSpec::conv3x3(width, width));
    m.layers.push_back(LayerSpec::residual_add(i));
  }
  m.layers.push_back(LayerSpec::conv3x3(width, width));
  m.layers.push_back(LayerSpec::residual_add(body_tap));
  append_upscale_tail(m, width, 3);
  validate_model(m);
  return m;
}

ModelSpec build_plain(int depth, int width, int image_channels) {
  ERNET_REQUIRE(depth >= 1, "build_plain: depth must be >= 1");
  ModelSpec m;
  m.name = "Plain-D" + std::to_string(depth) + "-C" + std::to_string(width);
  m.input_channels = image_channels;
  m.output_channels = width;
  m.scale = 1;
  m.layers.push_back(LayerSpec::conv3x3(image_channels, width));
  for (int i = 1; i < depth; ++i) {
    m.layers.push_back(LayerSpec::relu());
    m.layers.push_back(LayerSpec::conv3x3(width, width));
  }
  validate_model(m);
  return m;
}

void validate_model(const ModelSpec& m) {
  ERNET_REQUIRE(m.input_channels >= 1, "model: input channels must be >= 1");
  ERNET_REQUIRE(!m.layers.empty(), "model: no layers");

  int ch = m.input_channels;
  Rational s(1);                       // linear scale relative to the input
  std::map<int, std::pair<int, Rational>> taps;  // id -> (channels, scale)
  for (const LayerSpec& l : m.layers) {
    switch (l.kind) {
      case LayerKind::kConv3x3:
      case LayerKind::kConv1x1:
        ERNET_REQUIRE(l.in_channels == ch,
                      "model: conv input channels do not chain");
        ERNET_REQUIRE(l.out_channels >= 1, "model: conv output channels");
        ch = l.out_channels;
        break;
      case LayerKind::kReLU:
        break;
      case LayerKind::kPixelShuffle:
        ERNET_REQUIRE(l.factor >= 1 && ch % (l.factor * l.factor) == 0,
                      "model: pixel_shuffle channel divisibility");
        ch /= l.factor * l.factor;
        s = s * Rational(l.factor);
        break;
      case LayerKind::kPixelUnshuffle:
        ERNET_REQUIRE(l.factor >= 1, "model: pixel_unshuffle factor");
        ch *= l.factor * l.factor;
        s = s / Rational(l.factor);
        break;
      case LayerKind::kTap:
        ERNET_REQUIRE(!taps.count(l.tap_id), "model: duplicate tap id");
        taps[l.tap_id] = {ch, s};
        break;
      case LayerKind::kResidualAdd: {
        auto it = taps.find(l.tap_id);
        ERNET_REQUIRE(it != taps.end(),
                      "model: residual add references undeclared tap");
        ERNET_REQUIRE(it->second.first == ch && it->second.second == s,
                      "model: residual add shape does not match its tap");
        break;
      }
    }
  }
  ERNET_REQUIRE(ch == m.output_channels,
                "model: final channels do not match output_channels");
  ERNET_REQUIRE(s == Rational(m.scale),
                "model: cumulative scale does not match scale field");
}

std::uint64_t param_count(const ModelSpec& m) {
  std::uint64_t n = 0;
  for (const LayerSpec& l : m.layers) {
    if (l.kind == LayerKind::kConv3x3 || l.kind == LayerKind::kConv1x1)
      n += l.weights.weight_count() + l.weights.bias.size();
  }
  return n;
}

Rational macs_per_output_pixel(const ModelSpec& m) {
  Rational total(0);
  Rational s(1);  // linear scale relative to the input
  const Rational s_out(m.scale);
  for (const LayerSpec& l : m.layers) {
    switch (l.kind) {
      case LayerKind::kConv3x3:
      case LayerKind::kConv1x1: {
        const Rational area = (s / s_out) * (s / s_out);
        const std::int64_t per_px =
            static_cast<std::int64_t>(l.weights.kernel_h) *
            l.weights.kernel_w * l.in_channels * l.out_channels;
        total = total + area * Rational(per_px);
        break;
      }
      case LayerKind::kPixelShuffle:
        s = s * Rational(l.factor);
        break;
      case LayerKind::kPixelUnshuffle:
        s = s / Rational(l.factor);
        break;
      default:
        break;
    }
  }
  return total;
}

void init_weights(ModelSpec& m, std::uint64_t seed) {
  SeededGenerator gen(seed);
  for (LayerSpec& l : m.layers) {
    if (l.kind != LayerKind::kConv3x3 && l.kind != LayerKind::kConv1x1)
      continue;
    WeightTensor& w = l.weights;
    const double fan_in =
        static_cast<double>(w.kernel_h) * w.kernel_w * w.in_channels;
    const double s = 1.0 / std::sqrt(fan_in);
    for (double& v : w.weights) v = s * gen.next_uniform();
    for (double& v : w.bias) v = 0.0;
  }
}

}  // namespace ernet
