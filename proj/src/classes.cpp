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

#include "soiling/classes.hpp"

#include <string>

namespace soiling {

std::string_view class_name(SoilingClass c) {
  switch (c) {
    case SoilingClass::kClean:
      return "clean";
    case SoilingClass::kTransparent:
      return "transparent";
    case SoilingClass::kSemiTransparent:
      return "semitransparent";
    case SoilingClass::kOpaque:
      return "opaque";
  }
  return "unknown";
}

std::optional<SoilingClass> parse_class_name(std::string_view name) {
  std::string lowered(name);
  for (auto& ch : lowered) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  if (lowered == "clean") return SoilingClass::kClean;
  if (lowered == "transparent") return SoilingClass::kTransparent;
  if (lowered == "semitransparent" || lowered == "semi-transparent" ||
      lowered == "semi_transparent") {
    return SoilingClass::kSemiTransparent;
  }
  if (lowered == "opaque") return SoilingClass::kOpaque;
  return std::nullopt;
}

std::optional<SoilingClass> class_from_index(int index) {
  if (index < 0 || index >= kNumClasses) return std::nullopt;
  return static_cast<SoilingClass>(index);
}

int severity_argmax(const double* scores) {
  int best = kNumClasses - 1;
  for (int c = kNumClasses - 2; c >= 0; --c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

}  // namespace soiling
