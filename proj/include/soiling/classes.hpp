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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace soiling {

// Soiling classes, ordered by severity.
enum class SoilingClass : std::uint8_t {
  kClean = 0,
  kTransparent = 1,
  kSemiTransparent = 2,
  kOpaque = 3,
};

inline constexpr int kNumClasses = 4;

inline constexpr std::array<SoilingClass, kNumClasses> kAllClasses = {
    SoilingClass::kClean, SoilingClass::kTransparent,
    SoilingClass::kSemiTransparent, SoilingClass::kOpaque};

constexpr int to_index(SoilingClass c) { return static_cast<int>(c); }

// Name used in annotation files and CSV headers.
std::string_view class_name(SoilingClass c);

// Accepts the canonical names plus "semi-transparent" / "semi_transparent".
std::optional<SoilingClass> parse_class_name(std::string_view name);

std::optional<SoilingClass> class_from_index(int index);

// Argmax over four scores; exact ties go to the more severe class.
int severity_argmax(const double* scores);

}  // namespace soiling
