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

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "soiling/coverage.hpp"
#include "soiling/errors.hpp"

namespace soiling {

using nlohmann::json;

namespace {

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(),
                            text.begin() + static_cast<std::ptrdiff_t>(byte),
                            '\n'));
}

[[noreturn]] void schema_error(const std::string& source,
                               const std::string& what) {
  throw ParseError(source, 0, what);
}

const json& require(const json& obj, const char* key,
                    const std::string& source, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(source, where + ": missing field '" + key + "'");
  return *it;
}

}  // namespace

AnnotationSet parse_annotation_json(const std::string& text,
                                    const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, line_of_byte(text, e.byte), e.what());
  }
  if (!doc.is_object()) schema_error(source, "top level must be an object");

  AnnotationSet ann;
  try {
    const auto& id = require(doc, "image_id", source, "annotation");
    ann.image_id = id.is_string() ? id.get<std::string>() : id.dump();
    const auto& w = require(doc, "width", source, "annotation");
    const auto& h = require(doc, "height", source, "annotation");
    if (!w.is_number_integer() || !h.is_number_integer()) {
      schema_error(source, "fields 'width' and 'height' must be integers");
    }
    ann.width = w.get<int>();
    ann.height = h.get<int>();
    if (auto cam = doc.find("camera"); cam != doc.end() && cam->is_string()) {
      ann.camera = cam->get<std::string>();
    }
    const auto& polys = require(doc, "polygons", source, "annotation");
    if (!polys.is_array()) schema_error(source, "field 'polygons' must be an array");
    for (std::size_t i = 0; i < polys.size(); ++i) {
      const std::string where = "polygons[" + std::to_string(i) + "]";
      const auto& p = polys[i];
      if (!p.is_object()) schema_error(source, where + " must be an object");
      const auto& cls = require(p, "class", source, where);
      if (!cls.is_string()) schema_error(source, where + ".class must be a string");
      const auto label = parse_class_name(cls.get<std::string>());
      if (!label) {
        schema_error(source, where + ".class: unknown class '" +
                                 cls.get<std::string>() + "'");
      }
      Polygon poly;
      poly.label = *label;
      const auto& pts = require(p, "points", source, where);
      if (!pts.is_array()) schema_error(source, where + ".points must be an array");
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto& pt = pts[k];
        if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() ||
            !pt[1].is_number()) {
          schema_error(source, where + ".points[" + std::to_string(k) +
                                   "] must be [x, y]");
        }
        Point q{pt[0].get<double>(), pt[1].get<double>()};
        if (!poly.vertices.empty() && poly.vertices.back() == q) continue;
        poly.vertices.push_back(q);
      }
      while (poly.vertices.size() > 1 &&
             poly.vertices.back() == poly.vertices.front()) {
        poly.vertices.pop_back();
      }
      ann.polygons.push_back(std::move(poly));
    }
  } catch (const json::exception& e) {
    schema_error(source, e.what());
  }
  try {
    validate_annotation(ann);
  } catch (const InvalidAnnotationError& e) {
    throw InvalidAnnotationError(source + ": " + e.what());
  }
  return ann;
}

AnnotationSet parse_annotation_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_annotation_json(os.str(), path.string());
}

std::string annotation_to_json(const AnnotationSet& ann) {
  json doc;
  doc["image_id"] = ann.image_id;
  doc["width"] = ann.width;
  doc["height"] = ann.height;
  if (!ann.camera.empty()) doc["camera"] = ann.camera;
  doc["polygons"] = json::array();
  for (const auto& poly : ann.polygons) {
    json pts = json::array();
    for (const auto& v : poly.vertices) pts.push_back({v.x, v.y});
    doc["polygons"].push_back(
        {{"class", std::string(class_name(poly.label))}, {"points", pts}});
  }
  return doc.dump(1) + "\n";
}

void write_annotation_file(const AnnotationSet& ann,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << annotation_to_json(ann);
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace soiling
