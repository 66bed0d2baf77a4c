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
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "soiling/errors.hpp"

namespace soiling::metrics {

namespace {

void check_shapes(const CoverageGrid& truth, const CoverageGrid& pred) {
  if (!truth.same_shape(pred)) {
    throw DimensionError(
        "truth grid " + std::to_string(truth.vtiles()) + "x" +
        std::to_string(truth.htiles()) + " vs prediction grid " +
        std::to_string(pred.vtiles()) + "x" + std::to_string(pred.htiles()));
  }
  if (truth.num_tiles() == 0) throw DimensionError("empty coverage grid");
}

// Per-class sums of squared differences over the tiles of one image.
ClassVector squared_error_sums(const CoverageGrid& truth,
                               const CoverageGrid& pred) {
  check_shapes(truth, pred);
  ClassVector sums{};
  for (int i = 0; i < truth.num_tiles(); ++i) {
    const double* t = truth.tile(i);
    const double* p = pred.tile(i);
    for (int j = 0; j < kNumClasses; ++j) {
      const double d = t[j] - p[j];
      sums[j] += d * d;
    }
  }
  return sums;
}

}  // namespace

double rmse_eq1(const CoverageGrid& truth, const CoverageGrid& pred) {
  check_shapes(truth, pred);
  const double inv_n = 1.0 / truth.num_tiles();
  double total = 0.0;
  for (int i = 0; i < truth.num_tiles(); ++i) {
    const double* t = truth.tile(i);
    const double* p = pred.tile(i);
    double tile_sum = 0.0;
    for (int j = 0; j < kNumClasses; ++j) {
      const double d = t[j] - p[j];
      tile_sum += d * d;
    }
    total += inv_n * tile_sum;
  }
  return std::sqrt(total);
}

ClassVector rmse_per_class(const CoverageGrid& truth, const CoverageGrid& pred) {
  const auto sums = squared_error_sums(truth, pred);
  ClassVector out{};
  for (int j = 0; j < kNumClasses; ++j) {
    out[j] = std::sqrt(sums[j] / truth.num_tiles());
  }
  return out;
}

RmseSummary aggregate_rmse(const std::vector<GridPair>& pairs,
                           Pooling pooling) {
  RmseSummary out;
  ClassVector pooled{};
  double per_image_total = 0.0;
  for (const auto& pair : pairs) {
    const auto sums = squared_error_sums(*pair.truth, *pair.pred);
    for (int j = 0; j < kNumClasses; ++j) pooled[j] += sums[j];
    per_image_total += rmse_eq1(*pair.truth, *pair.pred);
    out.tiles += static_cast<std::size_t>(pair.truth->num_tiles());
    ++out.images;
  }
  if (out.images == 0) return out;
  double pooled_total = 0.0;
  for (int j = 0; j < kNumClasses; ++j) {
    out.per_class[j] = std::sqrt(pooled[j] / static_cast<double>(out.tiles));
    pooled_total += pooled[j];
  }
  out.overall = pooling == Pooling::kPerImageMean
                    ? per_image_total / static_cast<double>(out.images)
                    : std::sqrt(pooled_total / static_cast<double>(out.tiles));
  return out;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (const auto& row : counts) {
    for (auto v : row) s += v;
  }
  return s;
}

std::int64_t ConfusionMatrix::row_sum(int cls) const {
  std::int64_t s = 0;
  for (auto v : counts[cls]) s += v;
  return s;
}

std::int64_t ConfusionMatrix::column_sum(int cls) const {
  std::int64_t s = 0;
  for (const auto& row : counts) s += row[cls];
  return s;
}

void accumulate(ConfusionMatrix& cm, const TileLabelGrid& truth,
                const TileLabelGrid& pred) {
  if (truth.vtiles() != pred.vtiles() || truth.htiles() != pred.htiles()) {
    throw DimensionError("label grids " + std::to_string(truth.vtiles()) + "x" +
                         std::to_string(truth.htiles()) + " vs " +
                         std::to_string(pred.vtiles()) + "x" +
                         std::to_string(pred.htiles()));
  }
  for (std::size_t i = 0; i < truth.labels().size(); ++i) {
    ++cm.counts[to_index(truth.labels()[i])][to_index(pred.labels()[i])];
  }
}

ConfusionMatrix confusion(const std::vector<TileLabelGrid>& truth,
                          const std::vector<TileLabelGrid>& pred) {
  if (truth.size() != pred.size()) {
    throw DimensionError(std::to_string(truth.size()) + " truth grids vs " +
                         std::to_string(pred.size()) + " prediction grids");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) accumulate(cm, truth[i], pred[i]);
  return cm;
}

ConfusionMatrix confusion_from_ids(const std::vector<int>& truth,
                                   const std::vector<int>& pred) {
  if (truth.size() != pred.size()) {
    throw DimensionError(std::to_string(truth.size()) + " truth labels vs " +
                         std::to_string(pred.size()) + " predicted labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!class_from_index(truth[i]) || !class_from_index(pred[i])) {
      throw ValidationError("label out of range at index " + std::to_string(i));
    }
    ++cm.counts[truth[i]][pred[i]];
  }
  return cm;
}

Matrix4 normalize_rows(const ConfusionMatrix& cm) {
  Matrix4 out{};
  for (int r = 0; r < kNumClasses; ++r) {
    const auto support = cm.row_sum(r);
    if (support == 0) continue;
    for (int c = 0; c < kNumClasses; ++c) {
      out[r][c] = static_cast<double>(cm.counts[r][c]) /
                  static_cast<double>(support);
    }
  }
  return out;
}

Matrix4 normalize_rows(const Matrix4& m) {
  Matrix4 out{};
  for (int r = 0; r < kNumClasses; ++r) {
    double support = 0.0;
    for (double v : m[r]) support += v;
    if (support == 0.0) continue;
    for (int c = 0; c < kNumClasses; ++c) out[r][c] = m[r][c] / support;
  }
  return out;
}

WeightedPrecision weighted_precision(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) return {0.0, true};
  double acc = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto col = cm.column_sum(c);
    const double precision =
        col == 0 ? 0.0
                 : static_cast<double>(cm.counts[c][c]) / static_cast<double>(col);
    acc += static_cast<double>(cm.row_sum(c)) * precision;
  }
  return {acc / static_cast<double>(total), false};
}

ClassVector per_class_accuracy(const ConfusionMatrix& cm) {
  ClassVector out{};
  for (int c = 0; c < kNumClasses; ++c) {
    const auto support = cm.row_sum(c);
    out[c] = support == 0 ? 0.0
                          : static_cast<double>(cm.counts[c][c]) /
                                static_cast<double>(support);
  }
  return out;
}

MetricsReport evaluate(const std::vector<GridPair>& pairs, Pooling pooling) {
  MetricsReport report;
  report.pooling = pooling;
  const auto rmse = aggregate_rmse(pairs, pooling);
  report.rmse_overall = rmse.overall;
  report.rmse_per_class = rmse.per_class;
  report.images = rmse.images;
  report.tiles = rmse.tiles;
  for (const auto& pair : pairs) {
    accumulate(report.confusion_raw, dominant_labels(*pair.truth),
               dominant_labels(*pair.pred));
  }
  report.confusion_normalized = normalize_rows(report.confusion_raw);
  const auto wp = weighted_precision(report.confusion_raw);
  report.weighted_precision = wp.value;
  report.weighted_precision_empty = wp.empty;
  report.per_class_accuracy = per_class_accuracy(report.confusion_raw);
  return report;
}

std::string report_to_json(const MetricsReport& report, int indent) {
  using nlohmann::json;
  json doc;
  doc["images"] = report.images;
  doc["tiles"] = report.tiles;
  doc["pooling"] =
      report.pooling == Pooling::kPerImageMean ? "per_image_mean" : "pooled_tiles";
  doc["rmse_overall"] = report.rmse_overall;
  json per_class = json::object();
  json accuracy = json::object();
  for (auto cls : kAllClasses) {
    const std::string name(class_name(cls));
    per_class[name] = report.rmse_per_class[to_index(cls)];
    accuracy[name] = report.per_class_accuracy[to_index(cls)];
  }
  doc["rmse_per_class"] = per_class;
  doc["weighted_precision"] = report.weighted_precision;
  doc["weighted_precision_empty"] = report.weighted_precision_empty;
  doc["per_class_accuracy"] = accuracy;
  json raw = json::array();
  json norm = json::array();
  for (int r = 0; r < kNumClasses; ++r) {
    raw.push_back(report.confusion_raw.counts[r]);
    norm.push_back(report.confusion_normalized[r]);
  }
  doc["confusion_raw"] = raw;
  doc["confusion_normalized"] = norm;
  return doc.dump(indent) + "\n";
}

std::string report_to_text(const MetricsReport& report) {
  static constexpr const char* kLabels[] = {"Clean", "Transparent",
                                            "Semitransparent", "Opaque"};
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "Evaluated %zu images, %zu tiles\n\n",
                report.images, report.tiles);
  os << buf;
  os << "Per class RMSE of tile level soiling detection\n";
  std::snprintf(buf, sizeof(buf), "  %-16s %10s\n", "Soiling Class", "RMSE");
  os << buf;
  for (int c = 0; c < kNumClasses; ++c) {
    std::snprintf(buf, sizeof(buf), "  %-16s %10.4f\n", kLabels[c],
                  report.rmse_per_class[c]);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "  %-16s %10.4f  (%s)\n\n", "Overall",
                report.rmse_overall,
                report.pooling == Pooling::kPerImageMean ? "mean of per-image"
                                                         : "pooled tiles");
  os << buf;

  os << "Tile-level soiling classification (rows: true, columns: predicted)\n";
  std::snprintf(buf, sizeof(buf), "  %-16s|%8s %8s %8s %8s ||%9s %9s %9s %9s\n",
                "", "Clean", "Transp", "Semi", "Opaque", "Clean", "Transp",
                "Semi", "Opaque");
  os << buf;
  std::snprintf(buf, sizeof(buf), "  %-16s|%35s ||%39s\n", "",
                "Normalized", "Raw");
  os << buf;
  for (int r = 0; r < kNumClasses; ++r) {
    const auto& n = report.confusion_normalized[r];
    const auto& k = report.confusion_raw.counts[r];
    std::snprintf(buf, sizeof(buf),
                  "  %-16s|%8.2f %8.2f %8.2f %8.2f ||%9lld %9lld %9lld %9lld\n",
                  kLabels[r], n[0], n[1], n[2], n[3],
                  static_cast<long long>(k[0]), static_cast<long long>(k[1]),
                  static_cast<long long>(k[2]), static_cast<long long>(k[3]));
    os << buf;
  }
  os << "\n";
  std::snprintf(buf, sizeof(buf), "Weighted precision: %.4f%s\n",
                report.weighted_precision,
                report.weighted_precision_empty ? " (no tiles evaluated)" : "");
  os << buf;
  os << "Per-class accuracy:";
  for (int c = 0; c < kNumClasses; ++c) {
    std::snprintf(buf, sizeof(buf), " %s=%.4f", kLabels[c],
                  report.per_class_accuracy[c]);
    os << buf;
  }
  os << "\n";
  return os.str();
}

}  // namespace soiling::metrics
