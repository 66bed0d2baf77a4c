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

#include "soiling/metrics.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "soiling/errors.hpp"
#include "support/scenes.hpp"

namespace soiling::metrics {
namespace {

using testing::random_grid;
using testing::uniform_grid;

// Raw all-cameras confusion counts and the rounded normalized rows printed
// next to them.
constexpr std::int64_t kTableRaw[4][4] = {{113627, 5022, 2305, 3853},
                                          {169, 6543, 2704, 1895},
                                          {117, 1302, 7476, 1810},
                                          {226, 783, 3499, 35967}};
constexpr double kTableNormalized[4][4] = {{0.91, 0.04, 0.02, 0.03},
                                           {0.01, 0.58, 0.24, 0.17},
                                           {0.01, 0.12, 0.70, 0.17},
                                           {0.01, 0.02, 0.09, 0.89}};

ConfusionMatrix table_matrix() {
  ConfusionMatrix cm;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) cm.counts[r][c] = kTableRaw[r][c];
  }
  return cm;
}

// Straight loop over images, tiles and classes.
std::array<double, 4> brute_per_class(const std::vector<CoverageGrid>& truth,
                                      const std::vector<CoverageGrid>& pred) {
  std::array<double, 4> out{};
  for (int j = 0; j < 4; ++j) {
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t n = 0; n < truth.size(); ++n) {
      for (int r = 0; r < truth[n].vtiles(); ++r) {
        for (int c = 0; c < truth[n].htiles(); ++c) {
          const double d = truth[n].at(r, c, j) - pred[n].at(r, c, j);
          sum += d * d;
          count += 1.0;
        }
      }
    }
    out[j] = std::sqrt(sum / count);
  }
  return out;
}

TEST(RmseTest, AnalyticCases) {
  const auto clean = uniform_grid(4, 4, {1, 0, 0, 0});
  const auto opaque = uniform_grid(4, 4, {0, 0, 0, 1});
  EXPECT_EQ(rmse_eq1(clean, clean), 0.0);
  EXPECT_NEAR(rmse_eq1(clean, opaque), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(rmse_eq1(uniform_grid(3, 7, {1, 0, 0, 0}), uniform_grid(3, 7, {0, 0, 0, 1})),
              1.414214, 1e-6);
  const auto pc = rmse_per_class(clean, opaque);
  EXPECT_NEAR(pc[0], 1.0, 1e-12);
  EXPECT_EQ(pc[1], 0.0);
  EXPECT_EQ(pc[2], 0.0);
  EXPECT_NEAR(pc[3], 1.0, 1e-12);
  for (double v : rmse_per_class(clean, clean)) EXPECT_EQ(v, 0.0);

  const auto t = uniform_grid(1, 1, {1, 0, 0, 0});
  const auto p = uniform_grid(1, 1, {0.5, 0.5, 0, 0});
  EXPECT_NEAR(rmse_eq1(t, p), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(rmse_eq1(t, p), 0.707107, 1e-6);
}

TEST(RmseTest, ShapeMismatch) {
  EXPECT_THROW(rmse_eq1(CoverageGrid(4, 4), CoverageGrid(4, 3)), DimensionError);
  EXPECT_THROW(rmse_per_class(CoverageGrid(2, 4), CoverageGrid(4, 2)), DimensionError);
}

TEST(RmseTest, PerClassMatchesBruteForceOverImages) {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CoverageGrid> truth, pred;
    std::vector<GridPair> pairs;
    for (int n = 0; n < 10; ++n) {
      truth.push_back(random_grid(gen, 4, 4));
      pred.push_back(random_grid(gen, 4, 4, false));
    }
    for (int n = 0; n < 10; ++n) pairs.push_back({&truth[n], &pred[n]});
    const auto expected = brute_per_class(truth, pred);
    const auto got = aggregate_rmse(pairs).per_class;
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(got[j], expected[j], 1e-12);
  }
}

TEST(RmseTest, PerClassSquaresSumToOverallSquare) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = random_grid(gen, 4, 4);
    const auto p = random_grid(gen, 4, 4, trial % 2 == 0);
    const auto pc = rmse_per_class(t, p);
    const double overall = rmse_eq1(t, p);
    double sum = 0.0;
    for (double v : pc) sum += v * v;
    EXPECT_NEAR(sum, overall * overall, 1e-12);
  }
}

TEST(RmseTest, MetricLikeProperties) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_grid(gen, 4, 4);
    const auto b = random_grid(gen, 4, 4);
    EXPECT_DOUBLE_EQ(rmse_eq1(a, b), rmse_eq1(b, a));
    EXPECT_GT(rmse_eq1(a, b), 0.0);
    EXPECT_LE(rmse_eq1(a, b), std::sqrt(2.0) + 1e-12);
    CoverageGrid u(4, 4), v(4, 4);
    for (auto& x : u.values()) x = unit(gen);
    for (auto& x : v.values()) x = unit(gen);
    EXPECT_LE(rmse_eq1(u, v), 2.0);
  }
}

TEST(RmseTest, PoolingModes) {
  const auto clean = uniform_grid(2, 2, {1, 0, 0, 0});
  const auto opaque = uniform_grid(2, 2, {0, 0, 0, 1});
  const std::vector<GridPair> pairs{{&clean, &clean}, {&clean, &opaque}};
  const auto mean = aggregate_rmse(pairs, Pooling::kPerImageMean);
  EXPECT_NEAR(mean.overall, std::sqrt(2.0) / 2.0, 1e-12);
  const auto pooled = aggregate_rmse(pairs, Pooling::kPooledTiles);
  EXPECT_NEAR(pooled.overall, 1.0, 1e-12);
  EXPECT_EQ(mean.tiles, 8u);
  EXPECT_EQ(mean.images, 2u);
  EXPECT_NEAR(mean.per_class[0], std::sqrt(0.5), 1e-12);
}

TEST(ConfusionTest, TableRowsNormalizeToPrintedValues) {
  const auto norm = normalize_rows(table_matrix());
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      EXPECT_NEAR(norm[r][c], kTableNormalized[r][c], 0.005) << r << "," << c;
    }
  }
  const auto acc = per_class_accuracy(table_matrix());
  const double expected[4] = {0.91, 0.58, 0.70, 0.89};
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(acc[c], expected[c], 0.005);
}

TEST(ConfusionTest, IdentityPredictions) {
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i % 3 == 0 ? 0 : i % 4);
  const auto cm = confusion_from_ids(labels, labels);
  EXPECT_EQ(cm.total(), 40);
  for (int r = 0; r < 4; ++r) {
    EXPECT_EQ(cm.counts[r][r], cm.row_sum(r));
  }
  const auto norm = normalize_rows(cm);
  for (int r = 0; r < 4; ++r) {
    if (cm.row_sum(r) == 0) continue;
    for (int c = 0; c < 4; ++c) EXPECT_EQ(norm[r][c], r == c ? 1.0 : 0.0);
  }
  EXPECT_EQ(weighted_precision(cm).value, 1.0);
  EXPECT_FALSE(weighted_precision(cm).empty);
}

TEST(ConfusionTest, AllPredictedOpaque) {
  std::vector<int> truth, pred;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 10; ++i) {
      truth.push_back(c);
      pred.push_back(3);
    }
  }
  const auto cm = confusion_from_ids(truth, pred);
  EXPECT_EQ(cm.column_sum(3), 40);
  EXPECT_NEAR(weighted_precision(cm).value, 0.0625, 1e-15);
  const auto acc = per_class_accuracy(cm);
  EXPECT_EQ(acc[3], 1.0);
  EXPECT_EQ(acc[0], 0.0);
}

TEST(ConfusionTest, EmptyAndZeroSupport) {
  const ConfusionMatrix empty;
  const auto wp = weighted_precision(empty);
  EXPECT_EQ(wp.value, 0.0);
  EXPECT_TRUE(wp.empty);
  ConfusionMatrix cm;
  cm.counts[0][0] = 5;
  cm.counts[0][2] = 5;
  const auto norm = normalize_rows(cm);
  for (int r = 1; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) EXPECT_EQ(norm[r][c], 0.0);
  }
  EXPECT_EQ(per_class_accuracy(cm)[1], 0.0);
}

TEST(ConfusionTest, LabelOutOfRange) {
  EXPECT_THROW(confusion_from_ids({0, 1}, {0, 4}), ValidationError);
  EXPECT_THROW(confusion_from_ids({-1}, {0}), ValidationError);
  EXPECT_THROW(confusion_from_ids({0, 1}, {0}), DimensionError);
}

TEST(ConfusionTest, PropertiesOnRandomGrids) {
  std::mt19937_64 gen(12);
  std::vector<TileLabelGrid> truth, pred;
  for (int n = 0; n < 25; ++n) {
    truth.push_back(dominant_labels(random_grid(gen, 4, 4)));
    pred.push_back(dominant_labels(random_grid(gen, 4, 4)));
  }
  const auto cm = confusion(truth, pred);
  EXPECT_EQ(cm.total(), 25 * 16);
  const auto norm = normalize_rows(cm);
  for (int r = 0; r < 4; ++r) {
    if (cm.row_sum(r) == 0) continue;
    double sum = 0.0;
    for (double v : norm[r]) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
  const auto again = normalize_rows(norm);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(again[r][c], norm[r][c], 1e-15);
  }
  EXPECT_THROW(confusion(truth, {}), DimensionError);
}

TEST(ReportTest, EvaluateIdenticalGrids) {
  std::mt19937_64 gen(3);
  std::vector<CoverageGrid> grids;
  for (int n = 0; n < 5; ++n) grids.push_back(random_grid(gen, 4, 4));
  std::vector<GridPair> pairs;
  for (const auto& g : grids) pairs.push_back({&g, &g});
  const auto report = evaluate(pairs);
  EXPECT_EQ(report.rmse_overall, 0.0);
  EXPECT_EQ(report.confusion_raw.total(), 80);
  for (int r = 0; r < 4; ++r) EXPECT_EQ(report.confusion_raw.counts[r][r], report.confusion_raw.row_sum(r));
  EXPECT_EQ(report.weighted_precision, 1.0);

  const auto json = report_to_json(report);
  for (const char* key : {"rmse_overall", "rmse_per_class", "weighted_precision",
                          "per_class_accuracy", "confusion_raw", "confusion_normalized"}) {
    EXPECT_NE(json.find(key), std::string::npos) << key;
  }
  const auto text = report_to_text(report);
  EXPECT_NE(text.find("Per class RMSE"), std::string::npos);
  EXPECT_NE(text.find("Semitransparent"), std::string::npos);
}

}  // namespace
}  // namespace soiling::metrics
