// Copyright 2026 The clotpath Authors. All Rights Reserved.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clotpath {

enum class Errc {
  kInvalidArgument,
  kUnsupportedFormat,
  kCorruptFile,
  kZeroDimensions,
  kOutOfBounds,
  kIo,
  kLayoutMismatch,
  kShapeMismatch,
  kNonFinite,
  kMalformed,
  kDuplicateKey,
  kEmptyInput,
  kMissing,
  kDivergence,
};

std::string_view ErrcName(Errc code);

/// Single exception type for the toolkit; `code()` tells callers which
/// contract was violated so they can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace clotpath
