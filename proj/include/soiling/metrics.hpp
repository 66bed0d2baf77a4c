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
#include <string>
#include <vector>

#include "soiling/classes.hpp"
#include "soiling/coverage.hpp"

namespace soiling::metrics {

using ClassVector = std::array<double, kNumClasses>;
using Matrix4 = std::array<std::array<double, kNumClasses>, kNumClasses>;

// Coverage RMSE of one image:
//   sqrt( sum_i (1/N) sum_j (t_ij - p_ij)^2 ),  N tiles, j over the 4 classes.
// Throws DimensionError on shape mismatch.
double rmse_eq1(const CoverageGrid& truth, const CoverageGrid& pred);

// Per-class restriction of rmse_eq1: sqrt( (1/N) sum_i (t_ij - p_ij)^2 ).
ClassVector rmse_per_class(const CoverageGrid& truth, const CoverageGrid& pred);

struct GridPair {
  const CoverageGrid* truth;
  const CoverageGrid* pred;
};

enum class Pooling {
  kPerImageMean,  // average of per-image RMSE values
  kPooledTiles,   // one RMSE over all tiles of all images
};

struct RmseSummary {
  double overall = 0.0;
  ClassVector per_class{};  // always pooled over every evaluated tile
  std::size_t images = 0;
  std::size_t tiles = 0;
};

RmseSummary aggregate_rmse(const std::vector<GridPair>& pairs,
                           Pooling pooling = Pooling::kPerImageMean);

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

  std::int64_t total() const;
  std::int64_t row_sum(int cls) const;
  std::int64_t column_sum(int cls) const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Adds one count per tile. Throws DimensionError on shape mismatch.
void accumulate(ConfusionMatrix& cm, const TileLabelGrid& truth,
                const TileLabelGrid& pred);

ConfusionMatrix confusion(const std::vector<TileLabelGrid>& truth,
                          const std::vector<TileLabelGrid>& pred);

// Throws ValidationError for labels outside 0..3.
ConfusionMatrix confusion_from_ids(const std::vector<int>& truth,
                                   const std::vector<int>& pred);

// Each row divided by its sum; zero-support rows stay all-zero.
Matrix4 normalize_rows(const ConfusionMatrix& cm);
Matrix4 normalize_rows(const Matrix4& m);

struct WeightedPrecision {
  double value = 0.0;
  bool empty = false;  // set when the matrix has no counts
};

// Support-weighted one-vs-rest precision:
//   sum_c support_c * precision_c / sum_c support_c,
//   precision_c = counts[c][c] / column_sum_c (0 for an empty column).
WeightedPrecision weighted_precision(const ConfusionMatrix& cm);

// Recall per class: diagonal / row sum (0 for a class without support).
ClassVector per_class_accuracy(const ConfusionMatrix& cm);

struct MetricsReport {
  double rmse_overall = 0.0;
  ClassVector rmse_per_class{};
  double weighted_precision = 0.0;
  bool weighted_precision_empty = false;
  ClassVector per_class_accuracy{};
  ConfusionMatrix confusion_raw;
  Matrix4 confusion_normalized{};
  std::size_t images = 0;
  std::size_t tiles = 0;
  Pooling pooling = Pooling::kPerImageMean;
};

// Full evaluation over matched truth/prediction grids; tile labels for the
// confusion matrix are the dominant labels of each grid.
MetricsReport evaluate(const std::vector<GridPair>& pairs,
                       Pooling pooling = Pooling::kPerImageMean);

std::string report_to_json(const MetricsReport& report, int indent = 2);

// Aligned text tables: per-class RMSE, then normalized and raw confusion.
std::string report_to_text(const MetricsReport& report);

}  // namespace soiling::metrics
