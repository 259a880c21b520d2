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

#include "ernet/blob.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "ernet/util.hpp"
#include "json.hpp"

namespace ernet {
namespace {

constexpr char kMagic[4] = {'E', 'R', 'W', 'B'};
constexpr std::uint16_t kVersion = 1;

bool is_conv(LayerKind k) {
  return k == LayerKind::kConv3x3 || k == LayerKind::kConv1x1;
}

void put_bytes(std::ostream& out, std::uint64_t v, int n) {
  char b[8];
  for (int i = 0; i < n; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, n);
}

std::uint64_t get_bytes(std::istream& in, int n, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), n))
    throw IoError(path + ": truncated weight blob");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_weights(const ModelSpec& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weight blob: " + path);
  out.write(kMagic, 4);
  put_bytes(out, kVersion, 2);
  std::uint32_t convs = 0;
  for (const LayerSpec& l : m.layers)
    if (is_conv(l.kind)) ++convs;
  put_bytes(out, convs, 4);
  for (const LayerSpec& l : m.layers) {
    if (!is_conv(l.kind)) continue;
    put_bytes(out, l.kind == LayerKind::kConv3x3 ? 0 : 1, 1);
    put_bytes(out, static_cast<std::uint32_t>(l.in_channels), 4);
    put_bytes(out, static_cast<std::uint32_t>(l.out_channels), 4);
    for (double v : l.weights.weights)
      put_bytes(out, std::bit_cast<std::uint64_t>(v), 8);
    for (double v : l.weights.bias)
      put_bytes(out, std::bit_cast<std::uint64_t>(v), 8);
  }
  if (!out) throw IoError("cannot write weight blob: " + path);
}

void load_weights(ModelSpec& m, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight blob: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError(path + ": not a weight blob");
  const std::uint64_t version = get_bytes(in, 2, path);
  if (version != kVersion)
    throw IoError(path + ": unsupported weight blob version " +
                  std::to_string(version));
  const std::uint64_t convs = get_bytes(in, 4, path);
  std::vector<LayerSpec*> layers;
  for (LayerSpec& l : m.layers)
    if (is_conv(l.kind)) layers.push_back(&l);
  if (convs != layers.size())
    throw IoError(path + ": blob has " + std::to_string(convs) +
                  " convolutions, model has " + std::to_string(layers.size()));
  for (LayerSpec* l : layers) {
    const std::uint64_t kind = get_bytes(in, 1, path);
    const std::uint64_t expect = l->kind == LayerKind::kConv3x3 ? 0 : 1;
    const std::uint64_t in_c = get_bytes(in, 4, path);
    const std::uint64_t out_c = get_bytes(in, 4, path);
    if (kind != expect || in_c != static_cast<std::uint64_t>(l->in_channels) ||
        out_c != static_cast<std::uint64_t>(l->out_channels))
      throw IoError(path + ": weight blob does not match the model layout");
    for (double& v : l->weights.weights)
      v = std::bit_cast<double>(get_bytes(in, 8, path));
    for (double& v : l->weights.bias)
      v = std::bit_cast<double>(get_bytes(in, 8, path));
  }
}

void save_model_json(const ModelSpec& m, const std::string& path) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["input_channels"] = m.input_channels;
  j["output_channels"] = m.output_channels;
  j["scale"] = m.scale;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const LayerSpec& l : m.layers) {
    nlohmann::ordered_json e;
    e["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::kConv3x3:
      case LayerKind::kConv1x1:
        e["in_channels"] = l.in_channels;
        e["out_channels"] = l.out_channels;
        break;
      case LayerKind::kPixelShuffle:
      case LayerKind::kPixelUnshuffle:
        e["factor"] = l.factor;
        break;
      case LayerKind::kTap:
      case LayerKind::kResidualAdd:
        e["id"] = l.tap_id;
        break;
      case LayerKind::kReLU:
        break;
    }
    layers.push_back(std::move(e));
  }
  j["layers"] = std::move(layers);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write model file: " + path);
}

ModelSpec load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  ModelSpec m;
  try {
    nlohmann::json j;
    in >> j;
    m.name = j.value("name", std::string());
    m.input_channels = j.at("input_channels").get<int>();
    m.output_channels = j.at("output_channels").get<int>();
    m.scale = j.value("scale", 1);
    for (const auto& e : j.at("layers")) {
      const std::string kind = e.at("kind").get<std::string>();
      if (kind == "conv3x3") {
        m.layers.push_back(LayerSpec::conv3x3(e.at("in_channels").get<int>(),
                                              e.at("out_channels").get<int>()));
      } else if (kind == "conv1x1") {
        m.layers.push_back(LayerSpec::conv1x1(e.at("in_channels").get<int>(),
                                              e.at("out_channels").get<int>()));
      } else if (kind == "relu") {
        m.layers.push_back(LayerSpec::relu());
      } else if (kind == "pixel_shuffle") {
        m.layers.push_back(LayerSpec::pixel_shuffle(e.at("factor").get<int>()));
      } else if (kind == "pixel_unshuffle") {
        m.layers.push_back(
            LayerSpec::pixel_unshuffle(e.at("factor").get<int>()));
      } else if (kind == "tap") {
        m.layers.push_back(LayerSpec::tap(e.at("id").get<int>()));
      } else if (kind == "residual_add") {
        m.layers.push_back(LayerSpec::residual_add(e.at("id").get<int>()));
      } else {
        throw IoError(path + ": unknown layer kind: " + kind);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad model file " + path + ": " + e.what());
  }
  validate_model(m);
  return m;
}

}  // namespace ernet
