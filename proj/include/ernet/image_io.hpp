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

#ifndef ERNET_IMAGE_IO_HPP_
#define ERNET_IMAGE_IO_HPP_

#include <cstdint>
#include <string>

#include "ernet/tensor.hpp"

namespace ernet {

// Binary PGM (P5) / PPM (P6), 8-bit only.  Samples map to doubles as v/255
// on read and round(clamp(v, 0, 1) * 255) on write.  All failures throw
// IoError.
FeatureMap read_image(const std::string& path);
void write_image(const FeatureMap& f, const std::string& path);  // 1 or 3 ch

// Raw tensor dump: u32 height, width, channels then height*width*channels
// binary64 samples in row-major (y, x, c) order, everything little-endian.
FeatureMap read_raw_tensor(const std::string& path);
void write_raw_tensor(const FeatureMap& f, const std::string& path);

// Deterministic test fixture: samples uniform in [0, 1) drawn in (y, x, c)
// order from one SplitMix64 stream.
FeatureMap noise_image(int height, int width, int channels,
                       std::uint64_t seed);

}  // namespace ernet

#endif  // ERNET_IMAGE_IO_HPP_
