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
#include <string>
#include <vector>

#include "soiling/classes.hpp"
#include "soiling/coverage.hpp"
#include "soiling/geometry.hpp"
#include "soiling/image.hpp"
#include "soiling/rng.hpp"

namespace soiling::dataset {

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
  double midpoint() const { return 0.5 * (lo + hi); }
};

// Procedural scene parameters. Per-class arrays are indexed by class id;
// entry 0 (clean) places "clean" blobs that erase soiling painted earlier.
struct SynthConfig {
  int width = 64;
  int height = 64;
  int vtiles = 4;
  int htiles = 4;
  std::array<IntRange, kNumClasses> blobs_per_class{
      IntRange{0, 0}, IntRange{0, 2}, IntRange{0, 2}, IntRange{0, 2}};
  IntRange vertices{5, 11};
  std::array<RealRange, kNumClasses> blob_radius{
      RealRange{6.0, 14.0}, RealRange{6.0, 18.0}, RealRange{6.0, 18.0},
      RealRange{6.0, 18.0}};
  std::uint64_t seed = 0;
  int max_placement_attempts = 16;

  // Throws ValidationError on empty ranges, non-positive sizes or
  // dimensions that do not divide into the tile grid.
  void validate() const;

  void set_blobs(IntRange soiled);
  void set_radius(RealRange radius);
};

struct SynthScene {
  RgbImage image;
  AnnotationSet annotation;
  // Label raster composed by the generator from per-blob masks.
  ClassMap class_map;
  std::array<std::int64_t, kNumClasses> class_pixels{};
  std::vector<std::string> warnings;
};

// Star-convex blobs over a procedural background. Transparent blobs show a
// hazy blurred background, semi-transparent ones a blurred background mixed
// with mud colour, opaque ones a near-uniform mud fill.
SynthScene synth_scene(const SynthConfig& cfg, Rng& rng);

// Scene `index` of a corpus seeded with cfg.seed.
SynthScene synth_scene_at(const SynthConfig& cfg, std::uint64_t index);

struct CorpusSummary {
  std::size_t scenes = 0;
  std::vector<std::string> warnings;
};

// Writes images/<id>.ppm, annotations/<id>.json and coverage/<id>.csv for
// `count` scenes with ids "<prefix>_%05d". Cameras cycle front/rear/left/right.
CorpusSummary write_corpus(const std::filesystem::path& root,
                           const SynthConfig& cfg, std::size_t count,
                           const std::string& prefix = "scene");

}  // namespace soiling::dataset
