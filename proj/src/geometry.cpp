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

#include "soiling/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "soiling/errors.hpp"

namespace soiling {

ClassMap::ClassMap(int width, int height)
    : width_(width),
      height_(height),
      labels_(static_cast<std::size_t>(std::max(width, 0)) *
                  static_cast<std::size_t>(std::max(height, 0)),
              static_cast<std::uint8_t>(SoilingClass::kClean)) {}

void validate_polygon(const Polygon& poly) {
  const auto& v = poly.vertices;
  if (v.size() < 3) {
    throw InvalidAnnotationError("polygon has " + std::to_string(v.size()) +
                                 " vertices, at least 3 required");
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].x) || !std::isfinite(v[i].y)) {
      throw InvalidAnnotationError("non-finite coordinate at vertex " +
                                   std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == v[(i + 1) % v.size()]) {
      throw InvalidAnnotationError("repeated consecutive vertex at index " +
                                   std::to_string(i));
    }
  }
}

void validate_annotation(const AnnotationSet& ann) {
  if (ann.width <= 0 || ann.height <= 0) {
    throw InvalidAnnotationError("image '" + ann.image_id +
                                 "' has non-positive size " +
                                 std::to_string(ann.width) + "x" +
                                 std::to_string(ann.height));
  }
  for (std::size_t i = 0; i < ann.polygons.size(); ++i) {
    try {
      validate_polygon(ann.polygons[i]);
    } catch (const InvalidAnnotationError& e) {
      throw InvalidAnnotationError("image '" + ann.image_id + "' polygon " +
                                   std::to_string(i) + ": " + e.what());
    }
  }
}

namespace {

// Shared by the oracle and the scanline fill so both evaluate the crossing
// position with identical floating-point operations.
inline bool edge_spans(const Point& a, const Point& b, double y) {
  return (a.y > y) != (b.y > y);
}

inline double edge_crossing_x(const Point& a, const Point& b, double y) {
  return a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
}

// First column c in [0, width] with c + 0.5 >= x.
int first_center_at_or_after(double x, int width) {
  if (!(x > 0.5)) return 0;
  if (x > static_cast<double>(width)) return width;
  int c = static_cast<int>(std::ceil(x - 0.5));
  while (c > 0 && static_cast<double>(c - 1) + 0.5 >= x) --c;
  while (c < width && static_cast<double>(c) + 0.5 < x) ++c;
  return c;
}

void fill_polygon(const Polygon& poly, ClassMap& map,
                  std::vector<double>& crossings) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -ymin;
  for (const auto& p : v) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  // Rows whose center lies in [ymin, ymax); others have no crossings.
  const int row_begin = first_center_at_or_after(ymin, map.height());
  const int row_end = first_center_at_or_after(ymax, map.height());
  const auto label = poly.label;
  for (int r = row_begin; r < row_end; ++r) {
    const double py = static_cast<double>(r) + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      if (edge_spans(v[i], v[j], py)) {
        crossings.push_back(edge_crossing_x(v[i], v[j], py));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    // The crossing count is even; centers in [x_{2k}, x_{2k+1}) see an odd
    // number of crossings strictly to their right.
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      const int c0 = first_center_at_or_after(crossings[k], map.width());
      const int c1 = first_center_at_or_after(crossings[k + 1], map.width());
      for (int c = c0; c < c1; ++c) map.set(c, r, label);
    }
  }
}

}  // namespace

bool point_in_polygon(Point p, const Polygon& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (edge_spans(v[i], v[j], p.y) && p.x < edge_crossing_x(v[i], v[j], p.y)) {
      inside = !inside;
    }
  }
  return inside;
}

double polygon_area(const Polygon& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  double twice = 0.0;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    twice += v[j].x * v[i].y - v[i].x * v[j].y;
  }
  return std::abs(twice) * 0.5;
}

ClassMap rasterize(const AnnotationSet& ann) {
  validate_annotation(ann);
  ClassMap map(ann.width, ann.height);
  std::vector<double> crossings;
  for (const auto& poly : ann.polygons) fill_polygon(poly, map, crossings);
  return map;
}

ClassMap rasterize_reference(const AnnotationSet& ann) {
  validate_annotation(ann);
  ClassMap map(ann.width, ann.height);
  for (int r = 0; r < ann.height; ++r) {
    for (int c = 0; c < ann.width; ++c) {
      const Point center{static_cast<double>(c) + 0.5,
                         static_cast<double>(r) + 0.5};
      for (const auto& poly : ann.polygons) {
        if (point_in_polygon(center, poly)) map.set(c, r, poly.label);
      }
    }
  }
  return map;
}

void write_pgm(const ClassMap& map, const std::filesystem::path& path,
               bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << (binary ? "P5\n" : "P2\n") << map.width() << ' ' << map.height()
      << "\n" << (kNumClasses - 1) << "\n";
  if (binary) {
    out.write(reinterpret_cast<const char*>(map.labels().data()),
              static_cast<std::streamsize>(map.labels().size()));
  } else {
    for (int r = 0; r < map.height(); ++r) {
      for (int c = 0; c < map.width(); ++c) {
        out << (c ? " " : "") << to_index(map.at(c, r));
      }
      out << "\n";
    }
  }
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace soiling
