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
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "soiling/classes.hpp"
#include "soiling/coverage.hpp"

namespace soiling::dataset {

// Keeps indices 0, stride, 2*stride, ... in their original order.
// Throws std::invalid_argument for stride < 1.
template <typename T>
std::vector<T> subsample_frames(const std::vector<T>& frames, int stride = 15);

enum class Camera { kFront, kRear, kLeft, kRight };

std::string camera_name(Camera camera);
Camera parse_camera(const std::string& name);

struct DatasetItem {
  std::string image_id;
  Camera camera = Camera::kFront;
  std::string stratum;
  std::filesystem::path image_path;
  std::filesystem::path annotation_path;
  std::filesystem::path coverage_path;
};

// Coverage-weighted dominant class over all tiles of an image (severity
// tie-break as for tiles).
SoilingClass image_level_class(const CoverageGrid& grid);

// "<camera>/<image-level class>", e.g. "rear/opaque".
std::string make_stratum(Camera camera, const CoverageGrid& grid);

struct SplitManifest {
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  std::vector<std::string> warnings;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

// Per stratum (strata visited in sorted key order): shuffle the stratum's
// items with a stream derived from the seed, then cut it into train/val/test
// with largest-remainder rounding of size * ratio (remainder ties favour the
// earlier split). Strata with fewer than 3 items go wholly to train and add a
// warning.
// Throws ValidationError for an empty dataset, duplicate ids or ratios that
// are not positive or do not sum to 1 within 1e-9.
SplitManifest stratified_split(const std::vector<DatasetItem>& items,
                               std::array<double, 3> ratios = {0.6, 0.2, 0.2},
                               std::uint64_t seed = 0);

// Largest-remainder apportionment of n items to the given ratios.
std::array<std::size_t, 3> apportion(std::size_t n,
                                     const std::array<double, 3>& ratios);

// {"seed", "ratios", "train", "val", "test"} (+ "warnings" when present).
std::string manifest_to_json(const SplitManifest& manifest);
SplitManifest manifest_from_json(const std::string& text);

// Items of a corpus directory laid out as images/, annotations/, coverage/.
// Camera is read from each annotation; the stratum from its coverage CSV.
std::vector<DatasetItem> scan_corpus(const std::filesystem::path& root);

template <typename T>
std::vector<T> subsample_frames(const std::vector<T>& frames, int stride) {
  if (stride < 1) {
    throw std::invalid_argument("subsample_frames: stride must be >= 1, got " +
                                std::to_string(stride));
  }
  std::vector<T> out;
  out.reserve(frames.size() / static_cast<std::size_t>(stride) + 1);
  for (std::size_t i = 0; i < frames.size(); i += static_cast<std::size_t>(stride)) {
    out.push_back(frames[i]);
  }
  return out;
}

}  // namespace soiling::dataset
