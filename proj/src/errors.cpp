/* Copyright 2026 The Soiling Coverage Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "soiling/errors.hpp"

namespace soiling {

TilingError::TilingError(int height, int width, int vtiles, int htiles)
    : Error(ErrorKind::kValidation,
            "tiling error: image " + std::to_string(height) + "x" +
                std::to_string(width) + " (HxW) is not divisible into " +
                std::to_string(vtiles) + "x" + std::to_string(htiles) +
                " tiles (vtiles x htiles)") {}

ParseError::ParseError(const std::string& source, std::size_t line,
                       const std::string& what)
    : Error(ErrorKind::kValidation,
            "parse error in " + source +
                (line > 0 ? " at line " + std::to_string(line) : "") + ": " +
                what),
      line_(line) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
      return 1;
    case ErrorKind::kIo:
      return 2;
    case ErrorKind::kNumeric:
      return 3;
  }
  return 3;
}

}  // namespace soiling
