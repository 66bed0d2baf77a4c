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

#include "soiling/coverage.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "soiling/errors.hpp"

namespace soiling {

TileGridSpec make_tile_spec(int height, int width, int vtiles, int htiles) {
  if (height <= 0 || width <= 0 || vtiles < 1 || htiles < 1 ||
      height % vtiles != 0 || width % htiles != 0) {
    throw TilingError(height, width, vtiles, htiles);
  }
  return TileGridSpec{vtiles, htiles, height / vtiles, width / htiles};
}

CoverageGrid::CoverageGrid(int vtiles, int htiles)
    : vtiles_(vtiles),
      htiles_(htiles),
      values_(static_cast<std::size_t>(vtiles) * htiles * kNumClasses, 0.0) {}

TileLabelGrid::TileLabelGrid(int vtiles, int htiles)
    : vtiles_(vtiles),
      htiles_(htiles),
      labels_(static_cast<std::size_t>(vtiles) * htiles, SoilingClass::kClean) {}

CoverageCounts compute_coverage_counts(const ClassMap& map,
                                       const TileGridSpec& spec) {
  if (spec.vtiles < 1 || spec.htiles < 1 ||
      map.height() != spec.vtiles * spec.tile_h ||
      map.width() != spec.htiles * spec.tile_w) {
    throw TilingError(map.height(), map.width(), spec.vtiles, spec.htiles);
  }
  CoverageCounts out{spec, std::vector<std::int64_t>(
                               static_cast<std::size_t>(spec.num_tiles()) *
                                   kNumClasses,
                               0)};
  for (int r = 0; r < map.height(); ++r) {
    const int tile_row = r / spec.tile_h;
    for (int c = 0; c < map.width(); ++c) {
      const int tile_col = c / spec.tile_w;
      const std::size_t base =
          (static_cast<std::size_t>(tile_row) * spec.htiles + tile_col) *
          kNumClasses;
      ++out.counts[base + to_index(map.at(c, r))];
    }
  }
  return out;
}

CoverageGrid CoverageCounts::to_grid() const {
  CoverageGrid grid(spec.vtiles, spec.htiles);
  const auto denom = static_cast<double>(tile_pixels());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    grid.values()[i] = static_cast<double>(counts[i]) / denom;
  }
  return grid;
}

CoverageGrid compute_coverage(const ClassMap& map, const TileGridSpec& spec) {
  return compute_coverage_counts(map, spec).to_grid();
}

TileLabelGrid dominant_labels(const CoverageGrid& grid) {
  TileLabelGrid labels(grid.vtiles(), grid.htiles());
  for (int r = 0; r < grid.vtiles(); ++r) {
    for (int c = 0; c < grid.htiles(); ++c) {
      labels.set(r, c,
                 static_cast<SoilingClass>(severity_argmax(grid.tile(r, c))));
    }
  }
  return labels;
}

double soiled_fraction(const double* tile) {
  return tile[1] + tile[2] + tile[3];
}

namespace {

constexpr std::string_view kCoverageHeader =
    "tile_row,tile_col,clean,transparent,semitransparent,opaque";
constexpr std::string_view kLabelHeader = "tile_row,tile_col,label";

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fields.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

struct CsvReader {
  std::string source;
  std::vector<std::pair<std::size_t, std::string>> lines;  // (line no, text)
};

CsvReader read_csv_lines(const std::filesystem::path& path,
                         std::string_view header) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  CsvReader reader{path.string(), {}};
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (!have_header) {
      if (t != header) {
        throw ParseError(reader.source, lineno,
                         "expected header '" + std::string(header) + "'");
      }
      have_header = true;
      continue;
    }
    reader.lines.emplace_back(lineno, std::string(t));
  }
  if (!have_header) throw ParseError(reader.source, 0, "empty file");
  return reader;
}

int parse_int_field(std::string_view f, const std::string& source,
                    std::size_t line, std::string_view name) {
  int v = 0;
  auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size() || v < 0) {
    throw ParseError(source, line,
                     "field '" + std::string(name) + "' is not a non-negative "
                     "integer: '" + std::string(f) + "'");
  }
  return v;
}

double parse_double_field(std::string_view f, const std::string& source,
                          std::size_t line, std::string_view name) {
  double v = 0.0;
  auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size() ||
      !std::isfinite(v)) {
    throw ParseError(source, line,
                     "field '" + std::string(name) + "' is not a finite "
                     "number: '" + std::string(f) + "'");
  }
  return v;
}

// Checks that (row, col) pairs enumerate a full grid in row-major order and
// returns (vtiles, htiles).
std::pair<int, int> grid_shape(
    const std::vector<std::pair<int, int>>& cells, const CsvReader& reader) {
  if (cells.empty()) throw ParseError(reader.source, 0, "no tile rows");
  int vtiles = 0;
  int htiles = 0;
  for (const auto& [r, c] : cells) {
    vtiles = std::max(vtiles, r + 1);
    htiles = std::max(htiles, c + 1);
  }
  if (static_cast<std::size_t>(vtiles) * htiles != cells.size()) {
    throw ParseError(reader.source, 0,
                     "tile rows do not form a complete " +
                         std::to_string(vtiles) + "x" + std::to_string(htiles) +
                         " grid");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const int er = static_cast<int>(i) / htiles;
    const int ec = static_cast<int>(i) % htiles;
    if (cells[i].first != er || cells[i].second != ec) {
      throw ParseError(reader.source, reader.lines[i].first,
                       "tiles must be listed in row-major order; expected (" +
                           std::to_string(er) + "," + std::to_string(ec) + ")");
    }
  }
  return {vtiles, htiles};
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace

void write_coverage_csv(const CoverageGrid& grid,
                        const std::filesystem::path& path) {
  std::ostringstream os;
  os << kCoverageHeader << "\n";
  for (int r = 0; r < grid.vtiles(); ++r) {
    for (int c = 0; c < grid.htiles(); ++c) {
      os << r << ',' << c;
      for (int k = 0; k < kNumClasses; ++k) {
        os << ',' << format_double(grid.at(r, c, k));
      }
      os << "\n";
    }
  }
  write_text_file(path, os.str());
}

CoverageGrid read_coverage_csv(const std::filesystem::path& path,
                               const CoverageCsvOptions& options) {
  static constexpr std::string_view kNames[] = {
      "tile_row", "tile_col", "clean", "transparent", "semitransparent",
      "opaque"};
  const auto reader = read_csv_lines(path, kCoverageHeader);
  std::vector<std::pair<int, int>> cells;
  std::vector<std::array<double, kNumClasses>> rows;
  for (const auto& [lineno, text] : reader.lines) {
    const auto fields = split_fields(text);
    if (fields.size() != 2 + kNumClasses) {
      throw ParseError(reader.source, lineno,
                       "expected 6 fields, got " +
                           std::to_string(fields.size()));
    }
    cells.emplace_back(parse_int_field(fields[0], reader.source, lineno, kNames[0]),
                       parse_int_field(fields[1], reader.source, lineno, kNames[1]));
    std::array<double, kNumClasses> values{};
    double sum = 0.0;
    for (int k = 0; k < kNumClasses; ++k) {
      values[k] = parse_double_field(fields[2 + k], reader.source, lineno,
                                     kNames[2 + k]);
      sum += values[k];
    }
    if (options.ground_truth) {
      for (int k = 0; k < kNumClasses; ++k) {
        if (values[k] < 0.0 || values[k] > 1.0) {
          throw ValidationError(reader.source + " line " +
                                std::to_string(lineno) + ": coverage '" +
                                std::string(kNames[2 + k]) +
                                "' outside [0,1]");
        }
      }
      if (std::abs(sum - 1.0) > options.sum_tolerance) {
        throw ValidationError(reader.source + " line " +
                              std::to_string(lineno) +
                              ": coverages sum to " + format_double(sum) +
                              ", expected 1");
      }
    }
    rows.push_back(values);
  }
  const auto [vtiles, htiles] = grid_shape(cells, reader);
  CoverageGrid grid(vtiles, htiles);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(),
              grid.values().begin() + static_cast<std::ptrdiff_t>(i * kNumClasses));
  }
  return grid;
}

void write_label_csv(const TileLabelGrid& labels,
                     const std::filesystem::path& path) {
  std::ostringstream os;
  os << kLabelHeader << "\n";
  for (int r = 0; r < labels.vtiles(); ++r) {
    for (int c = 0; c < labels.htiles(); ++c) {
      os << r << ',' << c << ',' << to_index(labels.at(r, c)) << "\n";
    }
  }
  write_text_file(path, os.str());
}

TileLabelGrid read_label_csv(const std::filesystem::path& path) {
  const auto reader = read_csv_lines(path, kLabelHeader);
  std::vector<std::pair<int, int>> cells;
  std::vector<SoilingClass> values;
  for (const auto& [lineno, text] : reader.lines) {
    const auto fields = split_fields(text);
    if (fields.size() != 3) {
      throw ParseError(reader.source, lineno,
                       "expected 3 fields, got " + std::to_string(fields.size()));
    }
    cells.emplace_back(parse_int_field(fields[0], reader.source, lineno, "tile_row"),
                       parse_int_field(fields[1], reader.source, lineno, "tile_col"));
    const int label = parse_int_field(fields[2], reader.source, lineno, "label");
    const auto cls = class_from_index(label);
    if (!cls) {
      throw ValidationError(reader.source + " line " + std::to_string(lineno) +
                            ": label " + std::to_string(label) +
                            " out of range 0..3");
    }
    values.push_back(*cls);
  }
  const auto [vtiles, htiles] = grid_shape(cells, reader);
  TileLabelGrid labels(vtiles, htiles);
  for (std::size_t i = 0; i < values.size(); ++i) {
    labels.set(static_cast<int>(i) / htiles, static_cast<int>(i) % htiles,
               values[i]);
  }
  return labels;
}

}  // namespace soiling
