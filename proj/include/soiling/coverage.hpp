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
#include <vector>

#include "soiling/classes.hpp"
#include "soiling/geometry.hpp"

namespace soiling {

// Uniform vtiles x htiles partition of an H x W image.
struct TileGridSpec {
  int vtiles = 4;
  int htiles = 4;
  int tile_h = 0;
  int tile_w = 0;

  int num_tiles() const { return vtiles * htiles; }
  friend bool operator==(const TileGridSpec&, const TileGridSpec&) = default;
};

// Throws TilingError unless H % vtiles == 0 and W % htiles == 0.
TileGridSpec make_tile_spec(int height, int width, int vtiles = 4,
                            int htiles = 4);

// Per-tile class coverages, vtiles x htiles x 4, row-major by tile.
// Used for both ground truth and predictions.
class CoverageGrid {
 public:
  CoverageGrid() = default;
  CoverageGrid(int vtiles, int htiles);

  int vtiles() const { return vtiles_; }
  int htiles() const { return htiles_; }
  int num_tiles() const { return vtiles_ * htiles_; }

  double& at(int row, int col, int cls) { return values_[offset(row, col) + cls]; }
  double at(int row, int col, int cls) const {
    return values_[offset(row, col) + cls];
  }
  // Pointer to the four class values of a tile.
  const double* tile(int row, int col) const {
    return values_.data() + offset(row, col);
  }
  const double* tile(int index) const {
    return values_.data() + static_cast<std::size_t>(index) * kNumClasses;
  }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const CoverageGrid& other) const {
    return vtiles_ == other.vtiles_ && htiles_ == other.htiles_;
  }

  friend bool operator==(const CoverageGrid&, const CoverageGrid&) = default;

 private:
  std::size_t offset(int row, int col) const {
    return (static_cast<std::size_t>(row) * htiles_ + col) * kNumClasses;
  }

  int vtiles_ = 0;
  int htiles_ = 0;
  std::vector<double> values_;
};

// Exact integer pixel counts per tile and class. Ground-truth coverage is the
// ratio counts / tile_pixels, so per-tile sums are exactly one.
struct CoverageCounts {
  TileGridSpec spec;
  std::vector<std::int64_t> counts;  // vtiles x htiles x 4

  std::int64_t tile_pixels() const {
    return static_cast<std::int64_t>(spec.tile_h) * spec.tile_w;
  }
  std::int64_t count(int row, int col, int cls) const {
    return counts[(static_cast<std::size_t>(row) * spec.htiles + col) *
                      kNumClasses +
                  cls];
  }
  CoverageGrid to_grid() const;
};

CoverageCounts compute_coverage_counts(const ClassMap& map,
                                       const TileGridSpec& spec);

CoverageGrid compute_coverage(const ClassMap& map, const TileGridSpec& spec);

// Dominant-class tile labels.
class TileLabelGrid {
 public:
  TileLabelGrid() = default;
  TileLabelGrid(int vtiles, int htiles);

  int vtiles() const { return vtiles_; }
  int htiles() const { return htiles_; }
  int num_tiles() const { return vtiles_ * htiles_; }
  SoilingClass at(int row, int col) const {
    return labels_[static_cast<std::size_t>(row) * htiles_ + col];
  }
  void set(int row, int col, SoilingClass c) {
    labels_[static_cast<std::size_t>(row) * htiles_ + col] = c;
  }
  const std::vector<SoilingClass>& labels() const { return labels_; }

  friend bool operator==(const TileLabelGrid&, const TileLabelGrid&) = default;

 private:
  int vtiles_ = 0;
  int htiles_ = 0;
  std::vector<SoilingClass> labels_;
};

// Argmax per tile; exact ties resolve toward the more severe class.
TileLabelGrid dominant_labels(const CoverageGrid& grid);

// Sum of transparent + semi-transparent + opaque coverage of one tile.
double soiled_fraction(const double* tile);

// CSV I/O. Coverage layout: header
//   tile_row,tile_col,clean,transparent,semitransparent,opaque
// then one row per tile in row-major order. Values are written in the
// shortest decimal form that reads back to the identical double.
void write_coverage_csv(const CoverageGrid& grid,
                        const std::filesystem::path& path);

struct CoverageCsvOptions {
  // Require every row to sum to 1 within sum_tolerance.
  bool ground_truth = false;
  double sum_tolerance = 1e-9;
};

CoverageGrid read_coverage_csv(const std::filesystem::path& path,
                               const CoverageCsvOptions& options = {});

// Label layout: header tile_row,tile_col,label with integer class ids.
void write_label_csv(const TileLabelGrid& labels,
                     const std::filesystem::path& path);
TileLabelGrid read_label_csv(const std::filesystem::path& path);

// Annotation JSON:
//   {"image_id": str, "width": int, "height": int, "camera": str (optional),
//    "polygons": [{"class": "clean"|"transparent"|"semitransparent"|"opaque",
//                  "points": [[x, y], ...]}, ...]}
// A closing point equal to the first point and repeated consecutive points
// are dropped before validation.
AnnotationSet parse_annotation_file(const std::filesystem::path& path);
AnnotationSet parse_annotation_json(const std::string& text,
                                    const std::string& source = "<string>");
std::string annotation_to_json(const AnnotationSet& ann);
void write_annotation_file(const AnnotationSet& ann,
                           const std::filesystem::path& path);

}  // namespace soiling
