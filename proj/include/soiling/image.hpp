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

#include <cstdint>
#include <filesystem>
#include <vector>

namespace soiling {

// 8-bit interleaved RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height)
      : width_(width),
        height_(height),
        data_(static_cast<std::size_t>(width) * height * 3, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint8_t& at(int col, int row, int ch) { return data_[offset(col, row) + ch]; }
  std::uint8_t at(int col, int row, int ch) const {
    return data_[offset(col, row) + ch];
  }
  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t offset(int col, int row) const {
    return (static_cast<std::size_t>(row) * width_ + col) * 3;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Binary PPM (P6, maxval 255).
void write_ppm(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);

}  // namespace soiling
