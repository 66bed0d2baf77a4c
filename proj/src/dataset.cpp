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

#include "soiling/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "soiling/errors.hpp"
#include "soiling/rng.hpp"

namespace soiling::dataset {

std::string camera_name(Camera camera) {
  switch (camera) {
    case Camera::kFront:
      return "front";
    case Camera::kRear:
      return "rear";
    case Camera::kLeft:
      return "left";
    case Camera::kRight:
      return "right";
  }
  return "front";
}

Camera parse_camera(const std::string& name) {
  if (name == "front" || name.empty()) return Camera::kFront;
  if (name == "rear") return Camera::kRear;
  if (name == "left") return Camera::kLeft;
  if (name == "right") return Camera::kRight;
  throw ValidationError("unknown camera '" + name + "'");
}

SoilingClass image_level_class(const CoverageGrid& grid) {
  double totals[kNumClasses] = {};
  for (int i = 0; i < grid.num_tiles(); ++i) {
    for (int c = 0; c < kNumClasses; ++c) totals[c] += grid.tile(i)[c];
  }
  return static_cast<SoilingClass>(severity_argmax(totals));
}

std::string make_stratum(Camera camera, const CoverageGrid& grid) {
  return camera_name(camera) + "/" +
         std::string(class_name(image_level_class(grid)));
}

std::array<std::size_t, 3> apportion(std::size_t n,
                                     const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    double quota = static_cast<double>(n) * ratios[k];
    // Absorb representation error so exact quotas (50 * 0.6) stay exact.
    if (std::abs(quota - std::round(quota)) < 1e-9) quota = std::round(quota);
    sizes[k] = static_cast<std::size_t>(std::floor(quota));
    remainders[k] = quota - std::floor(quota);
    assigned += sizes[k];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[order[i % 3]];
  return sizes;
}

SplitManifest stratified_split(const std::vector<DatasetItem>& items,
                               std::array<double, 3> ratios,
                               std::uint64_t seed) {
  if (items.empty()) throw ValidationError("stratified_split: empty dataset");
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw ValidationError("stratified_split: ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("stratified_split: ratios must sum to 1");
  }

  std::map<std::string, std::vector<std::string>> strata;
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (!seen.insert(item.image_id).second) {
      throw ValidationError("stratified_split: duplicate image_id '" +
                            item.image_id + "'");
    }
    strata[item.stratum].push_back(item.image_id);
  }

  SplitManifest manifest;
  manifest.seed = seed;
  manifest.ratios = ratios;
  std::uint64_t stratum_index = 0;
  for (auto& [key, ids] : strata) {
    // Sorting first makes the split independent of input order.
    std::sort(ids.begin(), ids.end());
    Rng rng = Rng::stream(seed, stratum_index++);
    rng.shuffle(ids);
    if (ids.size() < 3) {
      manifest.warnings.push_back("stratum '" + key + "' has only " +
                                  std::to_string(ids.size()) +
                                  " item(s); assigned to train");
      manifest.train.insert(manifest.train.end(), ids.begin(), ids.end());
      continue;
    }
    const auto sizes = apportion(ids.size(), ratios);
    auto it = ids.begin();
    std::vector<std::string>* targets[3] = {&manifest.train, &manifest.val,
                                            &manifest.test};
    for (int k = 0; k < 3; ++k) {
      const auto end = it + static_cast<std::ptrdiff_t>(sizes[k]);
      targets[k]->insert(targets[k]->end(), it, end);
      it = end;
    }
  }
  return manifest;
}

std::string manifest_to_json(const SplitManifest& manifest) {
  nlohmann::json doc;
  doc["seed"] = manifest.seed;
  doc["ratios"] = manifest.ratios;
  doc["train"] = manifest.train;
  doc["val"] = manifest.val;
  doc["test"] = manifest.test;
  if (!manifest.warnings.empty()) doc["warnings"] = manifest.warnings;
  return doc.dump(2) + "\n";
}

SplitManifest manifest_from_json(const std::string& text) {
  SplitManifest m;
  try {
    const auto doc = nlohmann::json::parse(text);
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.ratios = doc.at("ratios").get<std::array<double, 3>>();
    m.train = doc.at("train").get<std::vector<std::string>>();
    m.val = doc.at("val").get<std::vector<std::string>>();
    m.test = doc.at("test").get<std::vector<std::string>>();
    if (doc.contains("warnings")) {
      m.warnings = doc.at("warnings").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("split manifest", 0, e.what());
  }
  return m;
}

std::vector<DatasetItem> scan_corpus(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path ann_dir = root / "annotations";
  if (!fs::is_directory(ann_dir)) {
    throw IoError(ann_dir.string(), "annotation directory not found");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(ann_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<DatasetItem> items;
  for (const auto& file : files) {
    const auto ann = parse_annotation_file(file);
    DatasetItem item;
    item.image_id = ann.image_id;
    item.camera = parse_camera(ann.camera);
    item.annotation_path = file;
    item.image_path = root / "images" / (file.stem().string() + ".ppm");
    item.coverage_path = root / "coverage" / (file.stem().string() + ".csv");
    CoverageGrid grid;
    if (fs::exists(item.coverage_path)) {
      grid = read_coverage_csv(item.coverage_path, {.ground_truth = true});
    } else {
      const auto map = rasterize(ann);
      grid = compute_coverage(map, make_tile_spec(ann.height, ann.width));
    }
    item.stratum = make_stratum(item.camera, grid);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace soiling::dataset
