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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "soiling/coverage.hpp"
#include "soiling/image.hpp"
#include "soiling/model.hpp"
#include "soiling/rng.hpp"

namespace soiling::nn {

// One training example, input already scaled to [-0.5, 0.5].
struct Sample {
  std::string image_id;
  Tensor<float> image;  // [1, 3, H, W]
  CoverageGrid coverage;
};

Tensor<float> image_to_tensor(const RgbImage& image);

// Loads images/<id>.ppm and coverage/<id>.csv for every id (all coverage
// files, sorted, when `ids` is empty).
std::vector<Sample> load_samples(const std::filesystem::path& corpus_root,
                                 const std::vector<std::string>& ids = {});

enum class Objective {
  kCoverage,        // mean over images of sqrt(MSE_image + delta)
  kClassification,  // mean categorical cross-entropy over tiles
  kSurrogate,       // MSE against surrogate_targets
};

template <typename Real>
struct Batch {
  Tensor<Real> images;                 // [B, 3, H, W]
  std::vector<CoverageGrid> coverage;  // B grids
};

// Phase-1 regression target, [B, 2C, vtiles, htiles]. Channels 0..C-1 hold
// the per-tile mean of each input channel, channels C..2C-1 the per-tile mean
// absolute difference between horizontally and vertically adjacent pixels.
template <typename Real>
Tensor<Real> surrogate_targets(const Tensor<Real>& images, int vtiles,
                               int htiles);

inline constexpr double kRmseSmoothing = 1e-8;

// Zeroes all gradients, runs forward and backward, and returns the loss.
// Gradients land in Param::grad for trainable parameters; frozen parameters
// keep zero-filled gradients. Throws NumericError naming the first layer
// with a non-finite activation when the loss is not finite.
template <typename Real>
double loss_and_grad(ToyModel<Real>& model, const Batch<Real>& batch,
                     Objective objective);

// Loss only, same forward path as loss_and_grad (batch-statistics mode).
template <typename Real>
double loss_only(ToyModel<Real>& model, const Batch<Real>& batch,
                 Objective objective);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Real>
struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;
};

// Bias-corrected Adam. The timestep always advances; parameters whose
// trainable flag is clear are not touched.
template <typename Real>
void adam_step(const std::vector<Param<Real>*>& params, AdamState<Real>& state,
               const AdamConfig& cfg);

struct AugmentConfig {
  double p_flip = 0.5;
  double p_brightness = 0.5;
  double brightness_delta = 0.1;
  double p_contrast = 0.5;
  double contrast_range = 0.2;
  double p_color = 0.5;
  double hue_radians = 0.1;
  double saturation_range = 0.2;
  double p_noise = 0.5;
  double noise_sigma = 0.02;
};

// Horizontal flip (mirrors the coverage grid columns too), brightness,
// contrast, hue/saturation jitter and Gaussian noise, each applied with its
// own per-sample probability.
void augment(Tensor<float>& image, CoverageGrid& coverage,
             const AugmentConfig& cfg, Rng& rng);

struct TrainConfig {
  int batch_size = 64;
  int epochs = 50;          // phase 2 (soiling head)
  int phase1_epochs = -1;   // surrogate phase; -1 means same as epochs
  AdamConfig adam;
  std::uint64_t seed = 0;
  HeadMode mode = HeadMode::kCoverage;
  bool augmentation = false;
  AugmentConfig augment;
  bool restore_best = true;  // keep the soiling head of the best val epoch

  void validate() const;
};

struct EpochLog {
  int phase = 0;
  int epoch = 0;  // 1-based within the phase
  double loss = 0.0;
  double val_loss = 0.0;
  std::optional<std::array<double, kNumClasses>> val_rmse_per_class;
  std::optional<double> val_rmse;
  std::optional<double> val_accuracy;
  std::uint64_t encoder_checksum = 0;
};

// One JSON object per line.
std::string epoch_log_to_json(const EpochLog& entry);

struct TrainResult {
  ToyModel<float> model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  std::uint64_t phase1_checksum = 0;
};

// Phase 1 trains encoder + surrogate head on surrogate_targets.
// Phase 2 freezes the encoder (weights and batch-norm statistics) and trains
// the soiling head alone. `on_epoch` sees every log entry as it is produced.
TrainResult train_two_phase(const std::vector<Sample>& train,
                            const std::vector<Sample>& val,
                            const TrainConfig& cfg, const ModelConfig& model_cfg,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

struct ValidationMetrics {
  double loss = 0.0;
  std::array<double, kNumClasses> rmse_per_class{};
  double rmse = 0.0;      // mean of per-image values
  double accuracy = 0.0;  // tile-label agreement of dominant classes
};

ValidationMetrics validate(ToyModel<float>& model, const std::vector<Sample>& samples,
                           int batch_size = 64);

struct PredictSummary {
  std::size_t files = 0;
  std::size_t clamped_values = 0;
};

// Writes <out>/coverage/<id>.csv (clamped to [0,1]) and <out>/labels/<id>.csv
// (dominant labels of the written coverage) for each image.
PredictSummary predict_to_files(ToyModel<float>& model,
                                const std::vector<std::filesystem::path>& images,
                                const std::filesystem::path& out_dir);

}  // namespace soiling::nn
