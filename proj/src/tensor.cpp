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

#include "ernet/tensor.hpp"

#include <algorithm>
#include <cstring>

#include "ernet/util.hpp"

namespace ernet {

FeatureMap::FeatureMap(int h, int w, int c) : height(h), width(w), channels(c) {
  ERNET_REQUIRE(h >= 1 && w >= 1 && c >= 1, "FeatureMap: dimensions must be >= 1");
  data.assign(static_cast<std::size_t>(h) * w * c, 0.0);
}

WeightTensor::WeightTensor(int out_c, int in_c, int kh, int kw)
    : out_channels(out_c), in_channels(in_c), kernel_h(kh), kernel_w(kw) {
  ERNET_REQUIRE(out_c >= 1 && in_c >= 1 && kh >= 1 && kw >= 1,
                "WeightTensor: dimensions must be >= 1");
  weights.assign(weight_count(), 0.0);
  bias.assign(static_cast<std::size_t>(out_c), 0.0);
}

namespace {

// Re-layout to (ky, kx, in_c, out_c) so the innermost loop runs over
// independent per-output-channel accumulators.  Each accumulator still sees
// its taps in (ky, kx, in_c) order, which is what the contract fixes; only
// work on distinct output channels is interleaved.
void transpose_weights(const WeightTensor& w, std::vector<double>& out) {
  const int kh = w.kernel_h, kw = w.kernel_w;
  const int ic_n = w.in_channels, oc_n = w.out_channels;
  out.resize(w.weight_count());
  for (int ky = 0; ky < kh; ++ky)
    for (int kx = 0; kx < kw; ++kx)
      for (int ic = 0; ic < ic_n; ++ic)
        for (int oc = 0; oc < oc_n; ++oc)
          out[((static_cast<std::size_t>(ky) * kw + kx) * ic_n + ic) * oc_n +
              oc] = w.weights[w.windex(oc, ky, kx, ic)];
}

}  // namespace

FeatureMap conv2d_valid(const FeatureMap& in, const WeightTensor& w,
                        ConvScratch* scratch) {
  ERNET_REQUIRE(in.channels == w.in_channels,
                "conv2d_valid: input channel count does not match filter");
  ERNET_REQUIRE(in.height >= w.kernel_h && in.width >= w.kernel_w,
                "conv2d_valid: input smaller than kernel");

  const int kh = w.kernel_h, kw = w.kernel_w;
  const int ic_n = w.in_channels, oc_n = w.out_channels;
  const int out_h = in.height - kh + 1;
  const int out_w = in.width - kw + 1;
  FeatureMap out(out_h, out_w, oc_n);

  ConvScratch local;
  ConvScratch* s = scratch ? scratch : &local;
  if (s->cached_for != &w) {
    transpose_weights(w, s->transposed);
    s->cached_for = &w;
  }
  const double* wt = s->transposed.data();
  const double* bias = w.bias.data();

  std::vector<double> acc(oc_n);
  for (int y = 0; y < out_h; ++y) {
    double* out_row = out.row(y);
    for (int x = 0; x < out_w; ++x) {
      for (int oc = 0; oc < oc_n; ++oc) acc[oc] = bias[oc];
      for (int ky = 0; ky < kh; ++ky) {
        const double* src = in.row(y + ky) + static_cast<std::size_t>(x) * ic_n;
        const double* wrow =
            wt + (static_cast<std::size_t>(ky) * kw) * ic_n * oc_n;
        for (int kx = 0; kx < kw; ++kx) {
          for (int ic = 0; ic < ic_n; ++ic) {
            const double v = src[ic];
            const double* wr = wrow + static_cast<std::size_t>(ic) * oc_n;
            for (int oc = 0; oc < oc_n; ++oc) acc[oc] += v * wr[oc];
          }
          src += ic_n;
          wrow += static_cast<std::size_t>(ic_n) * oc_n;
        }
      }
      double* dst = out_row + static_cast<std::size_t>(x) * oc_n;
      std::copy(acc.begin(), acc.end(), dst);
    }
  }
  return out;
}

FeatureMap pad_zero(const FeatureMap& in, int top, int bottom, int left,
                    int right) {
  ERNET_REQUIRE(top >= 0 && bottom >= 0 && left >= 0 && right >= 0,
                "pad_zero: negative padding");
  FeatureMap out(in.height + top + bottom, in.width + left + right,
                 in.channels);
  const std::size_t row_bytes =
      static_cast<std::size_t>(in.width) * in.channels * sizeof(double);
  for (int y = 0; y < in.height; ++y) {
    std::memcpy(out.row(y + top) + static_cast<std::size_t>(left) * in.channels,
                in.row(y), row_bytes);
  }
  return out;
}

FeatureMap relu(const FeatureMap& in) {
  FeatureMap out = in;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

FeatureMap pixel_unshuffle(const FeatureMap& in, int r) {
  ERNET_REQUIRE(r >= 1, "pixel_unshuffle: factor must be >= 1");
  ERNET_REQUIRE(in.height % r == 0 && in.width % r == 0,
                "pixel_unshuffle: spatial dimensions not divisible by factor");
  FeatureMap out(in.height / r, in.width / r, in.channels * r * r);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < in.channels; ++c)
        for (int dy = 0; dy < r; ++dy)
          for (int dx = 0; dx < r; ++dx)
            out.at(y, x, c * r * r + dy * r + dx) =
                in.at(y * r + dy, x * r + dx, c);
  return out;
}

FeatureMap pixel_shuffle(const FeatureMap& in, int r) {
  ERNET_REQUIRE(r >= 1, "pixel_shuffle: factor must be >= 1");
  ERNET_REQUIRE(in.channels % (r * r) == 0,
                "pixel_shuffle: channels not divisible by factor^2");
  FeatureMap out(in.height * r, in.width * r, in.channels / (r * r));
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < out.channels; ++c)
        out.at(y, x, c) =
            in.at(y / r, x / r, c * r * r + (y % r) * r + (x % r));
  return out;
}

FeatureMap add(const FeatureMap& a, const FeatureMap& b) {
  ERNET_REQUIRE(a.same_shape(b), "add: shape mismatch");
  FeatureMap out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

std::uint64_t conv_mac_count(int out_h, int out_w, const WeightTensor& w) {
  return static_cast<std::uint64_t>(out_h) * out_w * w.out_channels *
         w.kernel_h * w.kernel_w * w.in_channels;
}

}  // namespace ernet
