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

#include "ernet/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <vector>

#include "ernet/rng.hpp"
#include "ernet/util.hpp"

namespace ernet {
namespace {

constexpr int kMaxDim = 1 << 20;

// Next PNM header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int pnm_int(std::istream& in, const std::string& path, const char* what) {
  const std::string tok = pnm_token(in);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw IoError(path + ": bad " + what + " in PNM header");
  long v = std::stol(tok);
  if (v <= 0 || v > kMaxDim)
    throw IoError(path + ": " + what + " out of range");
  return static_cast<int>(v);
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32_le(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw IoError(path + ": truncated tensor header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64_le(std::ostream& out, double v) {
  const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xff);
  out.write(b, 8);
}

double get_f64_le(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw IoError(path + ": truncated tensor data");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

}  // namespace

FeatureMap read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);
  const std::string magic = pnm_token(in);
  int channels;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw IoError(path + ": not a binary PGM/PPM file (P5 or P6)");
  }
  const int width = pnm_int(in, path, "width");
  const int height = pnm_int(in, path, "height");
  const int maxval = pnm_int(in, path, "maxval");
  if (maxval != 255)
    throw IoError(path + ": only 8-bit images (maxval 255) are supported");
  // The token scanner has consumed the single whitespace byte that ends the
  // header, so the raster starts at the current position.

  FeatureMap f(height, width, channels);
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels);
  for (int y = 0; y < height; ++y) {
    if (!in.read(reinterpret_cast<char*>(row.data()), row.size()))
      throw IoError(path + ": truncated image data");
    double* dst = f.row(y);
    for (std::size_t i = 0; i < row.size(); ++i) dst[i] = row[i] / 255.0;
  }
  return f;
}

void write_image(const FeatureMap& f, const std::string& path) {
  ERNET_REQUIRE(f.height > 0 && f.width > 0, "write_image: empty image");
  if (f.channels != 1 && f.channels != 3)
    throw IoError("cannot write " + std::to_string(f.channels) +
                  "-channel image as PGM/PPM: " + path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image: " + path);
  out << (f.channels == 1 ? "P5" : "P6") << "\n"
      << f.width << " " << f.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(f.width) *
                                 f.channels);
  for (int y = 0; y < f.height; ++y) {
    const double* src = f.row(y);
    for (std::size_t i = 0; i < row.size(); ++i) {
      const double v = std::clamp(src[i], 0.0, 1.0);
      row[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!out) throw IoError("cannot write image: " + path);
}

FeatureMap read_raw_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor: " + path);
  const std::uint32_t h = get_u32_le(in, path);
  const std::uint32_t w = get_u32_le(in, path);
  const std::uint32_t c = get_u32_le(in, path);
  if (h == 0 || w == 0 || c == 0 || h > kMaxDim || w > kMaxDim || c > kMaxDim)
    throw IoError(path + ": tensor dimensions out of range");
  FeatureMap f(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  for (double& v : f.data) v = get_f64_le(in, path);
  return f;
}

void write_raw_tensor(const FeatureMap& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write tensor: " + path);
  put_u32_le(out, static_cast<std::uint32_t>(f.height));
  put_u32_le(out, static_cast<std::uint32_t>(f.width));
  put_u32_le(out, static_cast<std::uint32_t>(f.channels));
  for (double v : f.data) put_f64_le(out, v);
  if (!out) throw IoError("cannot write tensor: " + path);
}

FeatureMap noise_image(int height, int width, int channels,
                       std::uint64_t seed) {
  ERNET_REQUIRE(height > 0 && width > 0 && channels > 0,
                "noise_image: dimensions must be positive");
  FeatureMap f(height, width, channels);
  SeededGenerator gen(seed);
  // High 53 bits give a double on the standard [0, 1) grid.
  for (double& v : f.data)
    v = static_cast<double>(gen.next_u64() >> 11) * 0x1.0p-53;
  return f;
}

}  // namespace ernet
