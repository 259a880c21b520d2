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
#include <cstdio>
#include <fstream>
#include <string>

#include "ernet/blob.hpp"
#include "ernet/image_io.hpp"
#include "ernet/model.hpp"
#include "ernet/util.hpp"

using namespace ernet;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("io_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("pgm round trip is exact") {
  TempFile f("gray.pgm");
  FeatureMap img(3, 5, 1);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x)
      img.at(y, x, 0) = static_cast<double>((y * 5 + x) * 17 % 256) / 255.0;
  write_image(img, f.path);
  FeatureMap back = read_image(f.path);
  REQUIRE(back.same_shape(img));
  for (std::size_t i = 0; i < img.data.size(); ++i)
    CHECK(back.data[i] == img.data[i]);
}

TEST_CASE("ppm round trip is exact") {
  TempFile f("color.ppm");
  FeatureMap img(4, 2, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<double>((i * 41) % 256) / 255.0;
  write_image(img, f.path);
  FeatureMap back = read_image(f.path);
  REQUIRE(back.same_shape(img));
  CHECK(back.data == img.data);
}

TEST_CASE("write clamps and rounds to 8 bits") {
  TempFile f("clamp.pgm");
  FeatureMap img(1, 4, 1);
  img.data = {1.5, -0.25, 0.5, 127.4 / 255.0};
  write_image(img, f.path);
  FeatureMap back = read_image(f.path);
  CHECK(back.data[0] == 1.0);
  CHECK(back.data[1] == 0.0);
  CHECK(back.data[2] == 128.0 / 255.0);  // 127.5 rounds away from zero
  CHECK(back.data[3] == 127.0 / 255.0);
}

TEST_CASE("write rejects unsupported channel counts") {
  TempFile f("bad.pgm");
  FeatureMap img(2, 2, 2);
  CHECK_THROWS_AS(write_image(img, f.path), IoError);
  FeatureMap empty;
  CHECK_THROWS_AS(write_image(empty, f.path), std::invalid_argument);
}

TEST_CASE("pnm header parsing") {
  TempFile f("hdr.pgm");
  // comments and arbitrary whitespace are legal up to the maxval
  std::string bytes = "P5\n# six gray pixels\n 3\t2 # trailing\n255\n";
  for (unsigned char s : {0x00, 0x40, 0x80, 0xc0, 0xff, 0x01})
    bytes.push_back(static_cast<char>(s));
  write_bytes(f.path, bytes);
  FeatureMap img = read_image(f.path);
  CHECK(img.height == 2);
  CHECK(img.width == 3);
  CHECK(img.channels == 1);
  CHECK(img.at(0, 1, 0) == 64.0 / 255.0);
  CHECK(img.at(1, 2, 0) == 1.0 / 255.0);
}

TEST_CASE("pnm reader rejects what it cannot honor") {
  TempFile f("rej.pgm");
  write_bytes(f.path, "P4\n2 2\n255\n\x01\x02\x03\x04");
  CHECK_THROWS_AS(read_image(f.path), IoError);  // unknown magic
  write_bytes(f.path, "P5\n2 2\n128\n\x01\x02\x03\x04");
  CHECK_THROWS_AS(read_image(f.path), IoError);  // 16-level maxval
  write_bytes(f.path, "P5\n2 2\n255\n\x01\x02");
  CHECK_THROWS_AS(read_image(f.path), IoError);  // truncated samples
  write_bytes(f.path, "P5\n-2 2\n255\n");
  CHECK_THROWS_AS(read_image(f.path), IoError);  // negative extent
  CHECK_THROWS_AS(read_image("io_test_does_not_exist.pgm"), IoError);
}

TEST_CASE("raw tensor round trip preserves every bit") {
  TempFile f("t.raw");
  FeatureMap img(2, 2, 2);
  img.data = {0.1, -3.5e-300, 1.0 + 0x1.0p-52, 0.0,
              -0.0, 1e308, 255.75, -1.0 / 3.0};
  write_raw_tensor(img, f.path);
  FeatureMap back = read_raw_tensor(f.path);
  REQUIRE(back.same_shape(img));
  CHECK(back.data == img.data);
  CHECK(std::signbit(back.data[4]));
}

TEST_CASE("raw tensor reader validates") {
  TempFile f("t2.raw");
  write_bytes(f.path, "short");
  CHECK_THROWS_AS(read_raw_tensor(f.path), IoError);
  CHECK_THROWS_AS(read_raw_tensor("io_test_missing.raw"), IoError);
}

TEST_CASE("noise image is deterministic and bounded") {
  FeatureMap a = noise_image(7, 5, 3, 99);
  FeatureMap b = noise_image(7, 5, 3, 99);
  FeatureMap c = noise_image(7, 5, 3, 100);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
  CHECK(a.height == 7);
  CHECK(a.width == 5);
  CHECK(a.channels == 3);
  for (double v : a.data) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("weight blob round trip") {
  TempFile f("w.erwb");
  ModelSpec m = build_dnernet(parse_chain_name("E3R1-B2R2N0"), 3);
  init_weights(m, 31);
  save_weights(m, f.path);

  ModelSpec fresh = build_dnernet(parse_chain_name("E3R1-B2R2N0"), 3);
  load_weights(fresh, f.path);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    CHECK(fresh.layers[i].weights.weights == m.layers[i].weights.weights);
    CHECK(fresh.layers[i].weights.bias == m.layers[i].weights.bias);
  }
}

TEST_CASE("weight blob rejects a mismatched model") {
  TempFile f("w2.erwb");
  ModelSpec m = build_dnernet(parse_chain_name("E3R1-B2R2N0"), 3);
  init_weights(m, 31);
  save_weights(m, f.path);

  ModelSpec other = build_dnernet(parse_chain_name("E3R1-B2R2N1"), 3);
  CHECK_THROWS_AS(load_weights(other, f.path), IoError);

  ModelSpec narrow = build_dnernet(parse_chain_name("E3R1-B2R2N0"), 1);
  CHECK_THROWS_AS(load_weights(narrow, f.path), IoError);
}

TEST_CASE("weight blob rejects damage") {
  TempFile f("w3.erwb");
  ModelSpec m = build_plain(2, 4, 1);
  init_weights(m, 8);
  save_weights(m, f.path);

  std::ifstream in(f.path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  in.close();

  write_bytes(f.path, bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_weights(m, f.path), IoError);

  std::string corrupt = bytes;
  corrupt[0] = 'X';
  write_bytes(f.path, corrupt);
  CHECK_THROWS_AS(load_weights(m, f.path), IoError);
  CHECK_THROWS_AS(load_weights(m, "io_test_missing.erwb"), IoError);
}

TEST_CASE("model json round trip") {
  TempFile fj("m.json");
  TempFile fw("m.erwb");
  ModelSpec m = build_sr4ernet(parse_chain_name("E3R3-B2R1N1"));
  init_weights(m, 12);
  save_model_json(m, fj.path);
  save_weights(m, fw.path);

  ModelSpec back = load_model_json(fj.path);
  CHECK(back.name == m.name);
  CHECK(back.input_channels == m.input_channels);
  CHECK(back.output_channels == m.output_channels);
  CHECK(back.scale == m.scale);
  REQUIRE(back.layers.size() == m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    CHECK(back.layers[i].kind == m.layers[i].kind);
    CHECK(back.layers[i].in_channels == m.layers[i].in_channels);
    CHECK(back.layers[i].out_channels == m.layers[i].out_channels);
    CHECK(back.layers[i].factor == m.layers[i].factor);
    CHECK(back.layers[i].tap_id == m.layers[i].tap_id);
  }
  CHECK_NOTHROW(validate_model(back));
  CHECK(param_count(back) == param_count(m));

  // architecture and weights recombine into the original model
  load_weights(back, fw.path);
  for (std::size_t i = 0; i < m.layers.size(); ++i)
    CHECK(back.layers[i].weights.weights == m.layers[i].weights.weights);
}

TEST_CASE("model json rejects damage") {
  TempFile f("m2.json");
  write_bytes(f.path, "{ not json");
  CHECK_THROWS_AS(load_model_json(f.path), IoError);
  write_bytes(f.path, "{\"name\":\"x\"}");
  CHECK_THROWS_AS(load_model_json(f.path), IoError);
  CHECK_THROWS_AS(load_model_json("io_test_missing.json"), IoError);
}
