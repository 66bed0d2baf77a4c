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
#include <string>
#include <vector>

#include "soiling/classes.hpp"

namespace soiling {

// Pixel coordinates: origin at the top-left image corner, y pointing down.
struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Polygon {
  std::vector<Point> vertices;
  SoilingClass label = SoilingClass::kClean;
};

struct AnnotationSet {
  std::string image_id;
  int width = 0;
  int height = 0;
  // Painted in order; later polygons overwrite earlier ones.
  std::vector<Polygon> polygons;
  // Optional metadata carried through annotation files (e.g. "front").
  std::string camera;
};

// Per-pixel class raster, row-major.
class ClassMap {
 public:
  ClassMap() = default;
  ClassMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  SoilingClass at(int col, int row) const {
    return static_cast<SoilingClass>(labels_[index(col, row)]);
  }
  void set(int col, int row, SoilingClass c) {
    labels_[index(col, row)] = static_cast<std::uint8_t>(c);
  }
  const std::vector<std::uint8_t>& labels() const { return labels_; }

  friend bool operator==(const ClassMap&, const ClassMap&) = default;

 private:
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> labels_;
};

// Throws InvalidAnnotationError for fewer than 3 vertices, non-finite
// coordinates or repeated consecutive vertices (including last -> first).
void validate_polygon(const Polygon& poly);

// Checks image dimensions and every polygon.
void validate_annotation(const AnnotationSet& ann);

// Even-odd ray casting. An edge is crossed when p.y lies in [ymin, ymax) of
// the edge and the crossing lies strictly right of p.x, so points on left and
// top edges are inside while points on right and bottom edges are outside.
bool point_in_polygon(Point p, const Polygon& poly);

// Absolute shoelace area in px^2.
double polygon_area(const Polygon& poly);

// Scanline fill. A pixel (c, r) is inside a polygon iff its center
// (c + 0.5, r + 0.5) is, by exactly the rule of point_in_polygon.
ClassMap rasterize(const AnnotationSet& ann);

// Per-pixel point_in_polygon evaluation; slow, used as a cross-check.
ClassMap rasterize_reference(const AnnotationSet& ann);

// Plain PGM export with the class id as the gray level (maxval 3).
void write_pgm(const ClassMap& map, const std::filesystem::path& path,
               bool binary = true);

}  // namespace soiling
