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

#include "soiling/coverage.hpp"
#include "soiling/nn/layers.hpp"
#include "soiling/nn/tensor.hpp"

namespace soiling::nn {

enum class HeadMode {
  kCoverage,        // softsign per class and tile
  kClassification,  // softmax over the 4 classes per tile
};

std::string head_mode_name(HeadMode mode);
HeadMode parse_head_mode(const std::string& name);

enum class Group { kEncoder, kSurrogateHead, kSoilingHead };

struct ModelConfig {
  int input_h = 64;
  int input_w = 64;
  int in_channels = 3;
  int vtiles = 4;
  int htiles = 4;
  std::array<int, 4> encoder_channels{8, 16, 32, 32};
  int head_channels = 32;
  int surrogate_channels = 32;
  HeadMode mode = HeadMode::kCoverage;

  // Throws DimensionError when the encoder output cannot be pooled onto the
  // tile grid.
  void validate() const;
  int feature_h() const;
  int feature_w() const;
};

// One encoder stage: 3x3 stride-2 convolution, batch norm, ReLU.
template <typename Real>
struct ConvBlock {
  Conv2d<Real> conv;
  BatchNorm2d<Real> bn;
  // Forward caches.
  Tensor<Real> input, conv_out, bn_out, out;
};

// Small shared encoder with two decoders:
//   encoder        4 x ConvBlock, each halving resolution
//   surrogate head 3x3 conv + ReLU, 1x1 conv to 2 * in_channels, pooled to
//                  tiles (regresses surrogate_targets in phase 1)
//   soiling head   2 x (3x3 conv + BN + ReLU), pooled to tiles, 1x1 conv to
//                  4 channels; softsign or softmax is applied by the caller
template <typename Real>
class ToyModel {
 public:
  ToyModel() = default;
  ToyModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  // Encoder batch norm uses batch statistics only when `training` is set and
  // the encoder is not frozen.
  Tensor<Real> forward_encoder(const Tensor<Real>& images, bool training);
  // Accumulates encoder gradients from d(features).
  void backward_encoder(const Tensor<Real>& dfeatures);

  // Raw 4-channel tile map (pre-activation).
  Tensor<Real> forward_soiling(const Tensor<Real>& features, bool training);
  // Returns d(features) when want_input_grad, else an empty tensor.
  Tensor<Real> backward_soiling(const Tensor<Real>& dlogits, bool want_input_grad);

  // 2 * in_channels tile map.
  Tensor<Real> forward_surrogate(const Tensor<Real>& features);
  Tensor<Real> backward_surrogate(const Tensor<Real>& dout, bool want_input_grad);

  // Freezing clears the trainable flags of every encoder parameter and
  // switches encoder batch norm to its running statistics.
  void freeze_encoder();
  bool encoder_frozen() const { return encoder_frozen_; }
  void set_trainable(Group group, bool trainable);

  std::vector<Param<Real>*> params(Group group);
  std::vector<Param<Real>*> params();
  std::vector<const Param<Real>*> params() const;
  std::vector<Buffer<Real>*> buffers(Group group);
  std::vector<const Buffer<Real>*> buffers() const;
  void zero_grad();

  // FNV-1a over the bytes of every encoder parameter and running statistic.
  std::uint64_t encoder_checksum() const;

  // Name of the first cached activation containing a non-finite value, or
  // an empty string.
  std::string first_nonfinite_activation() const;

  // FNV-1a over the on/off state of every cached ReLU input. Two forward
  // passes with equal patterns lie on the same linear piece of every ReLU.
  std::uint64_t relu_pattern() const;

  template <typename Other>
  ToyModel<Other> cast() const;

 private:
  template <typename>
  friend class ToyModel;

  ModelConfig config_;
  bool encoder_frozen_ = false;
  std::vector<ConvBlock<Real>> encoder_;

  Conv2d<Real> sur_conv1_, sur_conv2_;
  Tensor<Real> sur_in_, sur_c1_, sur_r1_, sur_c2_, sur_out_;

  Conv2d<Real> soil_conv1_, soil_conv2_, soil_out_conv_;
  BatchNorm2d<Real> soil_bn1_, soil_bn2_;
  Tensor<Real> soil_in_, soil_c1_, soil_b1_, soil_r1_, soil_c2_, soil_b2_,
      soil_r2_, soil_pool_, soil_logits_;
};

// Inference: encoder and head batch norm use running statistics. Coverage
// mode returns softsign outputs, classification mode softmax probabilities,
// both as coverage-shaped grids (one per image).
template <typename Real>
std::vector<CoverageGrid> predict(ToyModel<Real>& model, const Tensor<Real>& images);

}  // namespace soiling::nn
