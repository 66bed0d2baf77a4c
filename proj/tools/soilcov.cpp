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

// soilcov: command-line front end for the soiling coverage toolkit.
//
//   soilcov synth    --out DIR [--count N] [--seed S] ...
//   soilcov coverage --annotations PATH --out DIR [--vtiles 4 --htiles 4]
//   soilcov split    --corpus DIR --out manifest.json [--seed S]
//   soilcov train    --corpus DIR --out DIR [--split manifest.json] ...
//   soilcov predict  --checkpoint FILE --out DIR (--images PATH... | --corpus DIR --split FILE)
//   soilcov eval     --truth DIR --pred DIR [--json] [--pooling image|tiles]
//
// Exit codes: 0 ok, 1 validation error, 2 I/O error, 3 numeric error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soiling/checkpoint.hpp"
#include "soiling/coverage.hpp"
#include "soiling/dataset.hpp"
#include "soiling/errors.hpp"
#include "soiling/geometry.hpp"
#include "soiling/metrics.hpp"
#include "soiling/synth.hpp"
#include "soiling/trainer.hpp"

namespace fs = std::filesystem;
using namespace soiling;

namespace {

std::vector<fs::path> list_files(const fs::path& path, const std::string& ext) {
  if (!fs::exists(path)) throw IoError(path.string(), "no such file or directory");
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// A prediction root written by `predict` keeps its CSVs under coverage/.
fs::path coverage_dir(const fs::path& dir) {
  return fs::is_directory(dir / "coverage") ? dir / "coverage" : dir;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- synth ---------------------------------------------------------------

struct SynthArgs {
  fs::path out;
  std::size_t count = 100;
  std::string prefix = "scene";
  dataset::SynthConfig cfg;
  int min_blobs = 0;
  int max_blobs = 2;
  double min_radius = 6.0;
  double max_radius = 18.0;
};

void add_synth(CLI::App& app, SynthArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("synth", "Generate a synthetic soiling corpus");
  sub->add_option("--out", a.out, "Corpus root (images/, annotations/, coverage/)")->required();
  sub->add_option("--count", a.count, "Number of scenes")->capture_default_str();
  sub->add_option("--prefix", a.prefix, "Image id prefix")->capture_default_str();
  sub->add_option("--width", a.cfg.width, "Image width in pixels")->capture_default_str();
  sub->add_option("--height", a.cfg.height, "Image height in pixels")->capture_default_str();
  sub->add_option("--vtiles", a.cfg.vtiles, "Tile rows")->capture_default_str();
  sub->add_option("--htiles", a.cfg.htiles, "Tile columns")->capture_default_str();
  sub->add_option("--min-blobs", a.min_blobs, "Minimum blobs per soiling class")->capture_default_str();
  sub->add_option("--max-blobs", a.max_blobs, "Maximum blobs per soiling class")->capture_default_str();
  sub->add_option("--min-radius", a.min_radius, "Minimum soiling blob radius (px)")->capture_default_str();
  sub->add_option("--max-radius", a.max_radius, "Maximum soiling blob radius (px)")->capture_default_str();
  sub->add_option("--min-vertices", a.cfg.vertices.lo, "Minimum polygon vertices")->capture_default_str();
  sub->add_option("--max-vertices", a.cfg.vertices.hi, "Maximum polygon vertices")->capture_default_str();
  sub->add_option("--seed", a.cfg.seed, "Random seed")->capture_default_str();
  sub->callback([&] {
    run = [&] {
      a.cfg.set_blobs({a.min_blobs, a.max_blobs});
      for (int k = 1; k < kNumClasses; ++k) a.cfg.blob_radius[k] = {a.min_radius, a.max_radius};
      const auto summary = dataset::write_corpus(a.out, a.cfg, a.count, a.prefix);
      for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "wrote " << summary.scenes << " scenes to " << a.out.string() << "\n";
    };
  });
}

// --- coverage ------------------------------------------------------------

struct CoverageArgs {
  fs::path annotations;
  fs::path out;
  int vtiles = 4;
  int htiles = 4;
  bool labels = false;
  bool class_map = false;
};

void add_coverage(CLI::App& app, CoverageArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("coverage", "Convert polygon annotations to tile coverage CSVs");
  sub->add_option("--annotations", a.annotations, "Annotation JSON file or directory")->required();
  sub->add_option("--out", a.out, "Output directory for <image_id>.csv")->required();
  sub->add_option("--vtiles", a.vtiles, "Tile rows")->capture_default_str();
  sub->add_option("--htiles", a.htiles, "Tile columns")->capture_default_str();
  sub->add_flag("--labels", a.labels, "Also write dominant tile labels to labels/<image_id>.csv");
  sub->add_flag("--class-map", a.class_map, "Also write the rasterized class map to maps/<image_id>.pgm");
  sub->callback([&] {
    run = [&] {
      const auto files = list_files(a.annotations, ".json");
      if (files.empty()) throw ValidationError("no annotation files in " + a.annotations.string());
      fs::create_directories(a.out);
      if (a.labels) fs::create_directories(a.out / "labels");
      if (a.class_map) fs::create_directories(a.out / "maps");
      for (const auto& file : files) {
        const auto ann = parse_annotation_file(file);
        const auto map = rasterize(ann);
        const auto grid = compute_coverage(map, make_tile_spec(ann.height, ann.width, a.vtiles, a.htiles));
        write_coverage_csv(grid, a.out / (ann.image_id + ".csv"));
        if (a.labels) write_label_csv(dominant_labels(grid), a.out / "labels" / (ann.image_id + ".csv"));
        if (a.class_map) write_pgm(map, a.out / "maps" / (ann.image_id + ".pgm"));
      }
      std::cout << "wrote " << files.size() << " coverage files to " << a.out.string() << "\n";
    };
  });
}

// --- split ---------------------------------------------------------------

struct SplitArgs {
  fs::path corpus;
  fs::path out;
  std::vector<double> ratios{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
};

void add_split(CLI::App& app, SplitArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("split", "Stratified train/val/test split of a corpus");
  sub->add_option("--corpus", a.corpus, "Corpus root")->required();
  sub->add_option("--out", a.out, "Manifest JSON path")->required();
  sub->add_option("--ratios", a.ratios, "Train, val and test fractions")
      ->expected(3)
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--seed", a.seed, "Random seed")->capture_default_str();
  sub->callback([&] {
    run = [&] {
      const auto items = dataset::scan_corpus(a.corpus);
      const auto m = dataset::stratified_split(items, {a.ratios[0], a.ratios[1], a.ratios[2]}, a.seed);
      for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
      write_file(a.out, dataset::manifest_to_json(m) + "\n");
      std::cout << "train " << m.train.size() << ", val " << m.val.size() << ", test "
                << m.test.size() << "\n";
    };
  });
}

dataset::SplitManifest load_or_make_split(const fs::path& corpus, const fs::path& split,
                                          std::uint64_t seed) {
  if (!split.empty()) return dataset::manifest_from_json(read_file(split));
  return dataset::stratified_split(dataset::scan_corpus(corpus), {0.6, 0.2, 0.2}, seed);
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  fs::path corpus;
  fs::path split;
  fs::path out;
  nn::TrainConfig cfg;
  std::string mode = "coverage";
  bool no_restore = false;
};

void add_train(CLI::App& app, TrainArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("train", "Two-phase training (surrogate, then frozen-encoder soiling head)");
  sub->add_option("--corpus", a.corpus, "Corpus root")->required();
  sub->add_option("--split", a.split, "Split manifest (default: stratified 60/20/20 with --seed)");
  sub->add_option("--out", a.out, "Output directory for model.bin and train_log.jsonl")->required();
  sub->add_option("--epochs", a.cfg.epochs, "Soiling-head epochs")->capture_default_str();
  sub->add_option("--phase1-epochs", a.cfg.phase1_epochs, "Surrogate epochs (-1: same as --epochs)")
      ->capture_default_str();
  sub->add_option("--batch-size", a.cfg.batch_size, "Mini-batch size")->capture_default_str();
  sub->add_option("--lr", a.cfg.adam.learning_rate, "Adam learning rate")->capture_default_str();
  sub->add_option("--beta1", a.cfg.adam.beta1, "Adam beta1")->capture_default_str();
  sub->add_option("--beta2", a.cfg.adam.beta2, "Adam beta2")->capture_default_str();
  sub->add_option("--adam-eps", a.cfg.adam.epsilon, "Adam epsilon")->capture_default_str();
  sub->add_option("--mode", a.mode, "Head mode")
      ->check(CLI::IsMember({"coverage", "classification"}))
      ->capture_default_str();
  sub->add_flag("--augment", a.cfg.augmentation, "Enable flip/colour/noise augmentation");
  sub->add_flag("--no-restore-best", a.no_restore, "Keep the last soiling head instead of the best one");
  sub->add_option("--seed", a.cfg.seed, "Random seed")->capture_default_str();
  sub->callback([&] {
    run = [&] {
      a.cfg.mode = nn::parse_head_mode(a.mode);
      a.cfg.restore_best = !a.no_restore;
      a.cfg.validate();
      const auto m = load_or_make_split(a.corpus, a.split, a.cfg.seed);
      const auto train = nn::load_samples(a.corpus, m.train);
      const auto val = nn::load_samples(a.corpus, m.val);
      if (train.empty()) throw ValidationError("training split is empty");
      nn::ModelConfig mc;
      mc.input_h = train.front().image.h;
      mc.input_w = train.front().image.w;
      mc.vtiles = train.front().coverage.vtiles();
      mc.htiles = train.front().coverage.htiles();
      mc.mode = a.cfg.mode;
      fs::create_directories(a.out);
      std::ofstream log(a.out / "train_log.jsonl", std::ios::binary);
      if (!log) throw IoError((a.out / "train_log.jsonl").string(), "cannot open for writing");
      const auto result = nn::train_two_phase(train, val, a.cfg, mc, [&](const nn::EpochLog& e) {
        const auto line = nn::epoch_log_to_json(e);
        log << line << "\n";
        log.flush();
        std::cout << line << "\n";
      });
      nn::save_checkpoint(result.model, a.out / "model.bin");
      std::cout << "best epoch " << result.best_epoch << ", checkpoint "
                << (a.out / "model.bin").string() << "\n";
    };
  });
}

// --- predict -------------------------------------------------------------

struct PredictArgs {
  fs::path checkpoint;
  std::vector<fs::path> images;
  fs::path corpus;
  fs::path split;
  std::string subset = "test";
  fs::path out;
};

void add_predict(CLI::App& app, PredictArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("predict", "Write coverage and tile-label CSVs for images");
  sub->add_option("--checkpoint", a.checkpoint, "Model checkpoint")->required();
  auto* images = sub->add_option("--images", a.images, "PPM files or directories");
  auto* corpus = sub->add_option("--corpus", a.corpus, "Corpus root (use with --split)");
  sub->add_option("--split", a.split, "Split manifest selecting --subset")->needs(corpus);
  sub->add_option("--subset", a.subset, "Split subset")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  images->excludes(corpus);
  sub->add_option("--out", a.out, "Output root (coverage/, labels/)")->required();
  sub->callback([&] {
    run = [&] {
      std::vector<fs::path> files;
      if (!a.corpus.empty()) {
        if (a.split.empty()) throw ValidationError("predict: --corpus needs --split");
        const auto m = dataset::manifest_from_json(read_file(a.split));
        const auto& ids = a.subset == "train" ? m.train : a.subset == "val" ? m.val : m.test;
        for (const auto& id : ids) files.push_back(a.corpus / "images" / (id + ".ppm"));
      } else {
        for (const auto& p : a.images) {
          for (auto& f : list_files(p, ".ppm")) files.push_back(f);
        }
      }
      if (files.empty()) throw ValidationError("predict: no input images");
      auto model = nn::load_checkpoint(a.checkpoint);
      const auto summary = nn::predict_to_files(model, files, a.out);
      std::cout << "wrote " << summary.files << " predictions, clamped "
                << summary.clamped_values << " values to [0,1]\n";
    };
  });
}

// --- eval ----------------------------------------------------------------

struct EvalArgs {
  fs::path truth;
  fs::path pred;
  bool json = false;
  fs::path report;
  std::string pooling = "image";
};

void add_eval(CLI::App& app, EvalArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("eval", "Compare predicted coverage CSVs with ground truth");
  sub->add_option("--truth", a.truth, "Ground-truth coverage directory")->required();
  sub->add_option("--pred", a.pred, "Prediction directory (or a predict output root)")->required();
  sub->add_flag("--json", a.json, "Print only the JSON report");
  sub->add_option("--report", a.report, "Also write the JSON report to this file");
  sub->add_option("--pooling", a.pooling, "Overall RMSE over images: mean of per-image values or pooled tiles")
      ->check(CLI::IsMember({"image", "tiles"}))
      ->capture_default_str();
  sub->callback([&] {
    run = [&] {
      const auto pred_dir = coverage_dir(a.pred);
      const auto truth_dir = coverage_dir(a.truth);
      const auto pred_files = list_files(pred_dir, ".csv");
      if (pred_files.empty()) throw ValidationError("no prediction CSVs in " + pred_dir.string());
      std::vector<CoverageGrid> truth, pred;
      truth.reserve(pred_files.size());
      pred.reserve(pred_files.size());
      for (const auto& file : pred_files) {
        const auto truth_file = truth_dir / file.filename();
        if (!fs::exists(truth_file)) {
          throw IoError(truth_file.string(), "no ground truth for prediction " + file.string());
        }
        truth.push_back(read_coverage_csv(truth_file, {.ground_truth = true}));
        pred.push_back(read_coverage_csv(file));
        if (!truth.back().same_shape(pred.back())) {
          throw DimensionError(file.string() + ": tile grid differs from " + truth_file.string());
        }
      }
      std::vector<metrics::GridPair> pairs;
      for (std::size_t i = 0; i < truth.size(); ++i) pairs.push_back({&truth[i], &pred[i]});
      const auto pooling = a.pooling == "tiles" ? metrics::Pooling::kPooledTiles
                                                : metrics::Pooling::kPerImageMean;
      const auto report = metrics::evaluate(pairs, pooling);
      const auto json = metrics::report_to_json(report);
      if (!a.report.empty()) write_file(a.report, json + "\n");
      if (!a.json) std::cout << metrics::report_to_text(report) << "\n";
      std::cout << json << "\n";
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soiling coverage toolkit: polygon-to-tile labels, metrics, splits and a toy trainer"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::function<void()> run;
  SynthArgs synth;
  CoverageArgs coverage;
  SplitArgs split;
  TrainArgs train;
  PredictArgs predict;
  EvalArgs eval;
  add_synth(app, synth, run);
  add_coverage(app, coverage, run);
  add_split(app, split, run);
  add_train(app, train, run);
  add_predict(app, predict, run);
  add_eval(app, eval, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    run();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(ErrorKind::kIo);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_code_for(ErrorKind::kNumeric);
  }
  return 0;
}
