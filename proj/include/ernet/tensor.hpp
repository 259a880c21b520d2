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

#ifndef ERNET_TENSOR_HPP_
#define ERNET_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ernet {

// Dense (height, width, channels) feature map, row-major with channels
// innermost.  All arithmetic in this library is IEEE binary64.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int c);  // zero-filled

  std::size_t index(int y, int x, int ch) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + ch;
  }
  double at(int y, int x, int ch) const { return data[index(y, x, ch)]; }
  double& at(int y, int x, int ch) { return data[index(y, x, ch)]; }
  const double* row(int y) const {
    return data.data() + static_cast<std::size_t>(y) * width * channels;
  }
  double* row(int y) {
    return data.data() + static_cast<std::size_t>(y) * width * channels;
  }
  bool same_shape(const FeatureMap& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  std::size_t size() const { return data.size(); }
};

// Convolution filter bank, laid out (out_c, ky, kx, in_c), plus one bias per
// output channel.  Only square 1x1 and 3x3 kernels are used by the model
// builders, but the type itself is general.
struct WeightTensor {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  WeightTensor() = default;
  WeightTensor(int out_c, int in_c, int kh, int kw);  // zero-filled

  std::size_t windex(int oc, int ky, int kx, int ic) const {
    return ((static_cast<std::size_t>(oc) * kernel_h + ky) * kernel_w + kx) *
               in_channels +
           ic;
  }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * kernel_h * kernel_w *
           in_channels;
  }
};

// Reusable scratch for conv2d_valid.  It caches the (ky, kx, in_c, out_c)
// re-layout of one WeightTensor so streaming callers that convolve many
// small patches against the same filter bank do not pay the re-layout on
// every call.  Purely an optimization; results are identical without it.
struct ConvScratch {
  const WeightTensor* cached_for = nullptr;
  std::vector<double> transposed;
};

// Valid (no padding) convolution: output is (h-kh+1, w-kw+1, out_c).
//
// Accumulation-order contract: every output element is computed as
//   bias[oc] + sum of taps with ky ascending, then kx, then in_c,
// each product added to the accumulator with one binary64 rounding.  The
// block-based execution schedules rely on this order being identical no
// matter which sub-region of the image a value is computed in, so it must
// never be changed for speed.  (Parallel or vectorized evaluation across
// distinct output elements is fine.)
FeatureMap conv2d_valid(const FeatureMap& in, const WeightTensor& w,
                        ConvScratch* scratch = nullptr);

// Zero padding around the spatial extent.
FeatureMap pad_zero(const FeatureMap& in, int top, int bottom, int left,
                    int right);

// Elementwise max(0, v).
FeatureMap relu(const FeatureMap& in);

// Space-to-depth: (h, w, c) -> (h/r, w/r, c*r*r).  Source channel c at
// spatial offset (dy, dx) inside an r x r cell lands in output channel
// c*r*r + dy*r + dx.
FeatureMap pixel_unshuffle(const FeatureMap& in, int r);

// Depth-to-space, the exact inverse of pixel_unshuffle with the same r.
FeatureMap pixel_shuffle(const FeatureMap& in, int r);

// Elementwise sum; shapes must match.
FeatureMap add(const FeatureMap& a, const FeatureMap& b);

// Multiply-accumulate count of one conv2d_valid call with these shapes.
std::uint64_t conv_mac_count(int out_h, int out_w, const WeightTensor& w);

}  // namespace ernet

#endif  // ERNET_TENSOR_HPP_
