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

#ifndef ERNET_BLOB_HPP_
#define ERNET_BLOB_HPP_

#include <string>

#include "ernet/model.hpp"

namespace ernet {

// Weight container ("ERWB"): magic, u16 version (1), u32 convolution count,
// then per convolution a kind byte (0 = 3x3, 1 = 1x1), u32 in/out channels,
// and binary64 weights followed by biases.  Everything little-endian.
// Loading requires the blob to match the model's convolution structure
// exactly; any mismatch throws IoError.
void save_weights(const ModelSpec& m, const std::string& path);
void load_weights(ModelSpec& m, const std::string& path);

// Architecture as JSON (name, channel counts, scale, layer list).  Weights
// travel separately in the blob above.
void save_model_json(const ModelSpec& m, const std::string& path);
ModelSpec load_model_json(const std::string& path);

}  // namespace ernet

#endif  // ERNET_BLOB_HPP_
