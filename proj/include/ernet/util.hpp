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

#ifndef ERNET_UTIL_HPP_
#define ERNET_UTIL_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ernet {

// Contract violation: thrown when a caller breaks a documented precondition.
// Internal consistency failures throw std::logic_error instead.
#define ERNET_REQUIRE(cond, msg)                        \
  do {                                                  \
    if (!(cond)) throw std::invalid_argument(msg);      \
  } while (0)

// I/O failures get their own type so the CLI can map them to a distinct
// exit code.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ernet

#endif  // ERNET_UTIL_HPP_
