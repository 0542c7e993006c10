// Copyright 2026 The ssnet Authors
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

#ifndef SSNET_COMMON_HPP_
#define SSNET_COMMON_HPP_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

#define SSNET_VERSION_STRING "0.1.0"

namespace ssnet {

using i64 = std::int64_t;
using u64 = std::uint64_t;

// Invalid arguments / violated preconditions.
inline void check_arg(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Runtime failures (I/O, numeric breakdown, missing files, ...).
inline void check_run(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace ssnet

#endif  // SSNET_COMMON_HPP_
