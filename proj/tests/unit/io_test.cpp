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

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include <gtest/gtest.h>

#include "soiling/coverage.hpp"
#include "soiling/errors.hpp"
#include "soiling/image.hpp"
#include "support/scenes.hpp"

namespace soiling {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("soiling_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

TEST_F(IoTest, CoverageCsvRoundTripIsExact) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto grid = testing::random_grid(gen, 1 + trial % 5, 1 + trial % 3, trial % 2 == 0);
    const auto path = dir_ / "grid.csv";
    write_coverage_csv(grid, path);
    const auto back = read_coverage_csv(path);
    ASSERT_TRUE(back.same_shape(grid));
    for (std::size_t i = 0; i < grid.values().size(); ++i) {
      EXPECT_NEAR(back.values()[i], grid.values()[i], 1e-12);
    }
    EXPECT_EQ(back, grid);
  }
}

TEST_F(IoTest, CoverageCsvLayout) {
  const auto grid = testing::uniform_grid(1, 2, {1, 0, 0, 0});
  write_coverage_csv(grid, dir_ / "c.csv");
  std::ifstream in(dir_ / "c.csv");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text,
            "tile_row,tile_col,clean,transparent,semitransparent,opaque\n"
            "0,0,1,0,0,0\n0,1,1,0,0,0\n");
}

TEST_F(IoTest, FiveValueRowIsAParseErrorWithLine) {
  const auto p = write("bad.csv",
                       "tile_row,tile_col,clean,transparent,semitransparent,opaque\n"
                       "0,0,1,0,0,0\n"
                       "0,1,1,0,0\n");
  try {
    read_coverage_csv(p);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST_F(IoTest, MalformedCoverageFiles) {
  const std::string header = "tile_row,tile_col,clean,transparent,semitransparent,opaque\n";
  EXPECT_THROW(read_coverage_csv(write("h.csv", "row,col\n0,0,1,0,0,0\n")), ParseError);
  EXPECT_THROW(read_coverage_csv(write("n.csv", header + "0,0,1,x,0,0\n")), ParseError);
  EXPECT_THROW(read_coverage_csv(write("o.csv", header + "0,1,1,0,0,0\n0,0,1,0,0,0\n")),
               ParseError);
  EXPECT_THROW(read_coverage_csv(write("g.csv", header + "0,0,1,0,0,0\n0,1,1,0,0,0\n1,0,1,0,0,0\n")),
               ParseError);
  EXPECT_THROW(read_coverage_csv(write("e.csv", "")), ParseError);
  EXPECT_THROW(read_coverage_csv(dir_ / "missing.csv"), IoError);
}

TEST_F(IoTest, GroundTruthRowsMustSumToOne) {
  const std::string header = "tile_row,tile_col,clean,transparent,semitransparent,opaque\n";
  const auto p = write("s.csv", header + "0,0,0.5,0.2,0.2,0.2\n");
  EXPECT_NO_THROW(read_coverage_csv(p));
  EXPECT_THROW(read_coverage_csv(p, {.ground_truth = true}), ValidationError);
  const auto ok = write("ok.csv", header + "0,0,0.5,0.25,0.125,0.125\n");
  EXPECT_NO_THROW(read_coverage_csv(ok, {.ground_truth = true}));
  const auto neg = write("neg.csv", header + "0,0,1.5,-0.5,0,0\n");
  EXPECT_THROW(read_coverage_csv(neg, {.ground_truth = true}), ValidationError);
}

TEST_F(IoTest, LabelCsvRoundTripAndRange) {
  TileLabelGrid labels(2, 3);
  labels.set(0, 1, SoilingClass::kOpaque);
  labels.set(1, 2, SoilingClass::kTransparent);
  write_label_csv(labels, dir_ / "l.csv");
  EXPECT_EQ(read_label_csv(dir_ / "l.csv"), labels);
  EXPECT_THROW(read_label_csv(write("bad.csv", "tile_row,tile_col,label\n0,0,4\n")),
               ValidationError);
}

TEST_F(IoTest, AnnotationFixture) {
  const auto ann = parse_annotation_file(fs::path(SOILING_TEST_DATA) / "example_annotation.json");
  EXPECT_EQ(ann.image_id, "front_000123");
  EXPECT_EQ(ann.width, 64);
  EXPECT_EQ(ann.height, 64);
  EXPECT_EQ(ann.camera, "front");
  ASSERT_EQ(ann.polygons.size(), 1u);
  EXPECT_EQ(ann.polygons[0].label, SoilingClass::kOpaque);
  // The closing point is dropped.
  EXPECT_EQ(ann.polygons[0].vertices.size(), 4u);
}

TEST_F(IoTest, AnnotationRoundTrip) {
  const auto ann = testing::random_scene(8, 64, 64);
  write_annotation_file(ann, dir_ / "a.json");
  const auto back = parse_annotation_file(dir_ / "a.json");
  EXPECT_EQ(back.image_id, ann.image_id);
  ASSERT_EQ(back.polygons.size(), ann.polygons.size());
  for (std::size_t i = 0; i < ann.polygons.size(); ++i) {
    EXPECT_EQ(back.polygons[i].vertices, ann.polygons[i].vertices);
    EXPECT_EQ(back.polygons[i].label, ann.polygons[i].label);
  }
}

TEST_F(IoTest, AnnotationErrors) {
  try {
    parse_annotation_json("{\n  \"image_id\": \"x\",\n  \"width\": 8,\n  oops\n}", "t.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse_annotation_json(R"({"image_id":"x","width":8,"polygons":[]})"), ParseError);
  EXPECT_THROW(parse_annotation_json(
                   R"({"image_id":"x","width":8,"height":8,"polygons":[{"class":"mud","points":[[0,0],[1,0],[0,1]]}]})"),
               ParseError);
  EXPECT_THROW(parse_annotation_json(
                   R"({"image_id":"x","width":8,"height":8,"polygons":[{"class":"opaque","points":[[0,0],[1,0]]}]})"),
               InvalidAnnotationError);
  EXPECT_THROW(parse_annotation_json(R"({"image_id":"x","width":0,"height":8,"polygons":[]})"),
               InvalidAnnotationError);
  // "semi-transparent" spelling is accepted.
  const auto ann = parse_annotation_json(
      R"({"image_id":"x","width":8,"height":8,"polygons":[{"class":"semi-transparent","points":[[0,0],[4,0],[0,4]]}]})");
  EXPECT_EQ(ann.polygons[0].label, SoilingClass::kSemiTransparent);
}

TEST_F(IoTest, PpmRoundTrip) {
  RgbImage img(5, 3);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<std::uint8_t>(i * 7);
  write_ppm(img, dir_ / "i.ppm");
  EXPECT_EQ(read_ppm(dir_ / "i.ppm"), img);
  EXPECT_THROW(read_ppm(write("x.ppm", "P3\n1 1\n255\n0 0 0\n")), ParseError);
}

TEST_F(IoTest, PgmExport) {
  const auto map = rasterize(AnnotationSet{"p", 4, 2, {Polygon{{{0, 0}, {2, 0}, {2, 2}, {0, 2}}, SoilingClass::kOpaque}}, ""});
  write_pgm(map, dir_ / "m.pgm", false);
  std::ifstream in(dir_ / "m.pgm");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text, "P2\n4 2\n3\n3 3 0 0\n3 3 0 0\n");
  write_pgm(map, dir_ / "m5.pgm");
  EXPECT_EQ(fs::file_size(dir_ / "m5.pgm"), std::string("P5\n4 2\n3\n").size() + 8);
}

}  // namespace
}  // namespace soiling
