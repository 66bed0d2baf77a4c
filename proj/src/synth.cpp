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

#include "soiling/synth.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <thread>

#include "soiling/dataset.hpp"
#include "soiling/errors.hpp"

namespace soiling::dataset {

void SynthConfig::validate() const {
  if (width <= 0 || height <= 0) {
    throw ValidationError("synth: image size must be positive");
  }
  make_tile_spec(height, width, vtiles, htiles);
  for (int c = 0; c < kNumClasses; ++c) {
    if (blobs_per_class[c].lo < 0 || blobs_per_class[c].hi < blobs_per_class[c].lo) {
      throw ValidationError("synth: empty blob count range for class " +
                            std::string(class_name(static_cast<SoilingClass>(c))));
    }
    if (!(blob_radius[c].lo > 0.0) || blob_radius[c].hi < blob_radius[c].lo) {
      throw ValidationError("synth: empty radius range for class " +
                            std::string(class_name(static_cast<SoilingClass>(c))));
    }
  }
  if (vertices.lo < 3 || vertices.hi < vertices.lo) {
    throw ValidationError("synth: vertex count range must be within [3, inf)");
  }
  if (max_placement_attempts < 1) {
    throw ValidationError("synth: max_placement_attempts must be >= 1");
  }
}

void SynthConfig::set_blobs(IntRange soiled) {
  for (int c = 1; c < kNumClasses; ++c) blobs_per_class[c] = soiled;
}

void SynthConfig::set_radius(RealRange radius) {
  for (auto& r : blob_radius) r = radius;
}

namespace {

struct Rgb {
  double r, g, b;
};

using Plane = std::vector<Rgb>;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

Plane make_background(int width, int height, Rng& rng) {
  // Coarse value noise (bilinear on a 9x9 lattice) plus a few oriented
  // sinusoids for fine texture.
  constexpr int kLattice = 9;
  std::array<std::array<Rgb, kLattice>, kLattice> lattice{};
  const Rgb base{rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7),
                 rng.uniform(0.3, 0.7)};
  for (auto& row : lattice) {
    for (auto& v : row) {
      v = {base.r + rng.uniform(-0.2, 0.2), base.g + rng.uniform(-0.2, 0.2),
           base.b + rng.uniform(-0.2, 0.2)};
    }
  }
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<Wave, 3> waves{};
  for (auto& w : waves) {
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double freq = rng.uniform(0.6, 1.4);  // radians per px
    w = {freq * std::cos(angle), freq * std::sin(angle),
         rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.06, 0.12)};
  }
  Plane plane(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const double gy = static_cast<double>(y) / height * (kLattice - 1);
    const int y0 = std::min(static_cast<int>(gy), kLattice - 2);
    const double ty = gy - y0;
    for (int x = 0; x < width; ++x) {
      const double gx = static_cast<double>(x) / width * (kLattice - 1);
      const int x0 = std::min(static_cast<int>(gx), kLattice - 2);
      const double tx = gx - x0;
      auto lerp = [&](auto get) {
        const double a = get(lattice[y0][x0]) * (1 - tx) + get(lattice[y0][x0 + 1]) * tx;
        const double b =
            get(lattice[y0 + 1][x0]) * (1 - tx) + get(lattice[y0 + 1][x0 + 1]) * tx;
        return a * (1 - ty) + b * ty;
      };
      double texture = 0.0;
      for (const auto& w : waves) {
        texture += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
      }
      plane[static_cast<std::size_t>(y) * width + x] = {
          clamp01(lerp([](const Rgb& c) { return c.r; }) + texture),
          clamp01(lerp([](const Rgb& c) { return c.g; }) + texture),
          clamp01(lerp([](const Rgb& c) { return c.b; }) + texture)};
    }
  }
  return plane;
}

Plane box_blur(const Plane& src, int width, int height, int radius) {
  auto pass = [&](const Plane& in, bool horizontal) {
    Plane out(in.size());
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        Rgb acc{0, 0, 0};
        int n = 0;
        for (int d = -radius; d <= radius; ++d) {
          const int xx = horizontal ? x + d : x;
          const int yy = horizontal ? y : y + d;
          if (xx < 0 || yy < 0 || xx >= width || yy >= height) continue;
          const auto& p = in[static_cast<std::size_t>(yy) * width + xx];
          acc.r += p.r;
          acc.g += p.g;
          acc.b += p.b;
          ++n;
        }
        out[static_cast<std::size_t>(y) * width + x] = {acc.r / n, acc.g / n,
                                                        acc.b / n};
      }
    }
    return out;
  };
  return pass(pass(src, true), false);
}

Polygon make_blob(SoilingClass cls, const SynthConfig& cfg, Rng& rng) {
  const auto& rr = cfg.blob_radius[to_index(cls)];
  const double radius = rng.uniform(rr.lo, rr.hi);
  const double cx = rng.uniform(0.0, cfg.width);
  const double cy = rng.uniform(0.0, cfg.height);
  const int n = static_cast<int>(rng.uniform_int(cfg.vertices.lo, cfg.vertices.hi));
  const double step = 2.0 * std::numbers::pi / n;
  const double offset = rng.uniform(0.0, step);
  Polygon poly;
  poly.label = cls;
  for (int k = 0; k < n; ++k) {
    const double angle = offset + step * k + rng.uniform(-0.3, 0.3) * step;
    const double r = radius * rng.uniform(0.55, 1.0);
    poly.vertices.push_back({cx + r * std::cos(angle), cy + r * std::sin(angle)});
  }
  return poly;
}

}  // namespace

SynthScene synth_scene(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  SynthScene scene;
  scene.annotation.width = cfg.width;
  scene.annotation.height = cfg.height;
  scene.class_map = ClassMap(cfg.width, cfg.height);

  std::vector<SoilingClass> order;
  for (auto cls : kAllClasses) {
    const auto& range = cfg.blobs_per_class[to_index(cls)];
    const auto count = rng.uniform_int(range.lo, range.hi);
    for (std::int64_t i = 0; i < count; ++i) order.push_back(cls);
  }
  rng.shuffle(order);

  for (auto cls : order) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_placement_attempts && !placed; ++attempt) {
      Polygon blob = make_blob(cls, cfg, rng);
      // Solo mask of the blob, painted as opaque over a clean background.
      const AnnotationSet solo{"", cfg.width, cfg.height,
                               {Polygon{blob.vertices, SoilingClass::kOpaque}}, ""};
      ClassMap mask;
      try {
        mask = rasterize(solo);
      } catch (const InvalidAnnotationError&) {
        continue;
      }
      std::vector<std::size_t> inside;
      for (std::size_t i = 0; i < mask.labels().size(); ++i) {
        if (mask.labels()[i] != 0) inside.push_back(i);
      }
      if (inside.empty()) continue;
      for (auto i : inside) {
        const int col = static_cast<int>(i % static_cast<std::size_t>(cfg.width));
        const int row = static_cast<int>(i / static_cast<std::size_t>(cfg.width));
        scene.class_map.set(col, row, cls);
      }
      scene.annotation.polygons.push_back(std::move(blob));
      placed = true;
    }
    if (!placed) {
      scene.warnings.push_back("could not place a " + std::string(class_name(cls)) +
                               " blob after " +
                               std::to_string(cfg.max_placement_attempts) +
                               " attempts; scene has fewer blobs");
    }
  }
  for (auto v : scene.class_map.labels()) ++scene.class_pixels[v];

  // Rendering.
  const Plane background = make_background(cfg.width, cfg.height, rng);
  const Plane blurred = box_blur(background, cfg.width, cfg.height, 3);
  const Rgb mud{rng.uniform(0.30, 0.45), rng.uniform(0.22, 0.32),
                rng.uniform(0.12, 0.22)};
  const Rgb dark{mud.r * 0.45, mud.g * 0.45, mud.b * 0.45};
  const double haze = rng.uniform(0.75, 0.9);
  scene.image = RgbImage(cfg.width, cfg.height);
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * cfg.width + x;
      const Rgb& bg = background[i];
      const Rgb& bl = blurred[i];
      Rgb px = bg;
      switch (scene.class_map.at(x, y)) {
        case SoilingClass::kClean:
          break;
        case SoilingClass::kTransparent:
          px = {0.7 * bl.r + 0.3 * haze, 0.7 * bl.g + 0.3 * haze,
                0.7 * bl.b + 0.3 * haze};
          break;
        case SoilingClass::kSemiTransparent:
          px = {0.45 * bl.r + 0.55 * mud.r, 0.45 * bl.g + 0.55 * mud.g,
                0.45 * bl.b + 0.55 * mud.b};
          break;
        case SoilingClass::kOpaque: {
          const double n = 0.015 * rng.normal();
          px = {dark.r + n, dark.g + n, dark.b + n};
          break;
        }
      }
      scene.image.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(clamp01(px.r) * 255.0));
      scene.image.at(x, y, 1) = static_cast<std::uint8_t>(std::lround(clamp01(px.g) * 255.0));
      scene.image.at(x, y, 2) = static_cast<std::uint8_t>(std::lround(clamp01(px.b) * 255.0));
    }
  }
  return scene;
}

SynthScene synth_scene_at(const SynthConfig& cfg, std::uint64_t index) {
  Rng rng = Rng::stream(cfg.seed, index);
  return synth_scene(cfg, rng);
}

CorpusSummary write_corpus(const std::filesystem::path& root,
                           const SynthConfig& cfg, std::size_t count,
                           const std::string& prefix) {
  namespace fs = std::filesystem;
  cfg.validate();
  const auto spec = make_tile_spec(cfg.height, cfg.width, cfg.vtiles, cfg.htiles);
  std::error_code ec;
  for (const char* sub : {"images", "annotations", "coverage"}) {
    fs::create_directories(root / sub, ec);
    if (ec) throw IoError((root / sub).string(), ec.message());
  }
  static constexpr Camera kCameras[] = {Camera::kFront, Camera::kRear,
                                        Camera::kLeft, Camera::kRight};
  std::vector<std::vector<std::string>> warnings(count);
  auto emit = [&](std::size_t i) {
    auto scene = synth_scene_at(cfg, i);
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%05zu", prefix.c_str(), i);
    scene.annotation.image_id = id;
    scene.annotation.camera = camera_name(kCameras[i % 4]);
    write_ppm(scene.image, root / "images" / (std::string(id) + ".ppm"));
    write_annotation_file(scene.annotation,
                          root / "annotations" / (std::string(id) + ".json"));
    write_coverage_csv(compute_coverage(scene.class_map, spec),
                       root / "coverage" / (std::string(id) + ".csv"));
    for (auto& w : scene.warnings) warnings[i].push_back(std::string(id) + ": " + w);
  };

  // Scenes are independent, so workers pull indices from a shared counter.
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        emit(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  const std::size_t n_threads =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(n_threads, count); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  CorpusSummary summary;
  summary.scenes = count;
  for (auto& w : warnings) {
    summary.warnings.insert(summary.warnings.end(), w.begin(), w.end());
  }
  return summary;
}

}  // namespace soiling::dataset
