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

#include "soiling/model.hpp"

#include <cstring>

#include "soiling/errors.hpp"

namespace soiling::nn {

std::string head_mode_name(HeadMode mode) {
  return mode == HeadMode::kCoverage ? "coverage" : "classification";
}

HeadMode parse_head_mode(const std::string& name) {
  if (name == "coverage") return HeadMode::kCoverage;
  if (name == "classification") return HeadMode::kClassification;
  throw ValidationError("unknown mode '" + name +
                        "' (expected coverage or classification)");
}

int ModelConfig::feature_h() const {
  int h = input_h;
  for (std::size_t i = 0; i < encoder_channels.size(); ++i) h = (h + 2 - 3) / 2 + 1;
  return h;
}

int ModelConfig::feature_w() const {
  int w = input_w;
  for (std::size_t i = 0; i < encoder_channels.size(); ++i) w = (w + 2 - 3) / 2 + 1;
  return w;
}

void ModelConfig::validate() const {
  if (input_h <= 0 || input_w <= 0 || in_channels <= 0 || vtiles <= 0 ||
      htiles <= 0) {
    throw DimensionError("model config has non-positive sizes");
  }
  const int fh = feature_h();
  const int fw = feature_w();
  if (fh % vtiles != 0 || fw % htiles != 0) {
    throw DimensionError("encoder output " + std::to_string(fh) + "x" +
                         std::to_string(fw) + " does not divide into " +
                         std::to_string(vtiles) + "x" + std::to_string(htiles) +
                         " tiles");
  }
}

template <typename Real>
ToyModel<Real>::ToyModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  Rng rng(seed);
  int in_ch = config_.in_channels;
  for (std::size_t i = 0; i < config_.encoder_channels.size(); ++i) {
    const std::string name = "encoder." + std::to_string(i);
    const int out_ch = config_.encoder_channels[i];
    ConvBlock<Real> block{Conv2d<Real>(name + ".conv", in_ch, out_ch, 3, 2, 1),
                          BatchNorm2d<Real>(name + ".bn", out_ch),
                          {}, {}, {}, {}};
    block.conv.init(rng);
    encoder_.push_back(std::move(block));
    in_ch = out_ch;
  }
  const int feat = in_ch;
  sur_conv1_ = Conv2d<Real>("surrogate.conv1", feat, config_.surrogate_channels, 3, 1, 1);
  sur_conv2_ = Conv2d<Real>("surrogate.conv2", config_.surrogate_channels,
                          2 * config_.in_channels, 1, 1, 0);
  sur_conv1_.init(rng);
  sur_conv2_.init(rng);
  // Small output weights keep the initial regression near zero.
  for (auto& v : sur_conv2_.weight.value) v *= Real(0.1);
  const int hc = config_.head_channels;
  soil_conv1_ = Conv2d<Real>("soiling.conv1", feat, hc, 3, 1, 1);
  soil_bn1_ = BatchNorm2d<Real>("soiling.bn1", hc);
  soil_conv2_ = Conv2d<Real>("soiling.conv2", hc, hc, 3, 1, 1);
  soil_bn2_ = BatchNorm2d<Real>("soiling.bn2", hc);
  soil_out_conv_ = Conv2d<Real>("soiling.out", hc, kNumClasses, 1, 1, 0);
  soil_conv1_.init(rng);
  soil_conv2_.init(rng);
  soil_out_conv_.init(rng);
  // Small output weights keep initial softsign outputs near zero.
  for (auto& v : soil_out_conv_.weight.value) v *= Real(0.1);
}

template <typename Real>
Tensor<Real> ToyModel<Real>::forward_encoder(const Tensor<Real>& images,
                                             bool training) {
  if (images.c != config_.in_channels || images.h != config_.input_h ||
      images.w != config_.input_w) {
    throw DimensionError("model expects [N," + std::to_string(config_.in_channels) +
                         "," + std::to_string(config_.input_h) + "," +
                         std::to_string(config_.input_w) + "] input, got " +
                         images.shape_string());
  }
  const bool bn_training = training && !encoder_frozen_;
  const Tensor<Real>* x = &images;
  for (auto& block : encoder_) {
    block.input = *x;
    block.conv.forward(block.input, block.conv_out);
    block.bn.forward(block.conv_out, block.bn_out, bn_training);
    relu_forward(block.bn_out, block.out);
    x = &block.out;
  }
  return *x;
}

template <typename Real>
void ToyModel<Real>::backward_encoder(const Tensor<Real>& dfeatures) {
  if (encoder_frozen_) return;
  Tensor<Real> grad = dfeatures;
  Tensor<Real> tmp;
  for (std::size_t i = encoder_.size(); i-- > 0;) {
    auto& block = encoder_[i];
    relu_backward(block.out, grad, tmp);
    block.bn.backward(tmp, &grad);
    block.conv.backward(block.input, grad, i > 0 ? &tmp : nullptr);
    if (i > 0) grad = std::move(tmp);
  }
}

template <typename Real>
Tensor<Real> ToyModel<Real>::forward_soiling(const Tensor<Real>& features,
                                             bool training) {
  soil_in_ = features;
  soil_conv1_.forward(soil_in_, soil_c1_);
  soil_bn1_.forward(soil_c1_, soil_b1_, training);
  relu_forward(soil_b1_, soil_r1_);
  soil_conv2_.forward(soil_r1_, soil_c2_);
  soil_bn2_.forward(soil_c2_, soil_b2_, training);
  relu_forward(soil_b2_, soil_r2_);
  avg_pool_forward(soil_r2_, config_.vtiles, config_.htiles, soil_pool_);
  soil_out_conv_.forward(soil_pool_, soil_logits_);
  return soil_logits_;
}

template <typename Real>
Tensor<Real> ToyModel<Real>::backward_soiling(const Tensor<Real>& dlogits,
                                              bool want_input_grad) {
  Tensor<Real> g, h;
  soil_out_conv_.backward(soil_pool_, dlogits, &g);
  avg_pool_backward(g, soil_r2_.h, soil_r2_.w, h);
  relu_backward(soil_r2_, h, g);
  soil_bn2_.backward(g, &h);
  soil_conv2_.backward(soil_r1_, h, &g);
  relu_backward(soil_r1_, g, h);
  soil_bn1_.backward(h, &g);
  Tensor<Real> dx;
  soil_conv1_.backward(soil_in_, g, want_input_grad ? &dx : nullptr);
  return dx;
}

template <typename Real>
Tensor<Real> ToyModel<Real>::forward_surrogate(const Tensor<Real>& features) {
  sur_in_ = features;
  sur_conv1_.forward(sur_in_, sur_c1_);
  relu_forward(sur_c1_, sur_r1_);
  sur_conv2_.forward(sur_r1_, sur_c2_);
  avg_pool_forward(sur_c2_, config_.vtiles, config_.htiles, sur_out_);
  return sur_out_;
}

template <typename Real>
Tensor<Real> ToyModel<Real>::backward_surrogate(const Tensor<Real>& dout,
                                                bool want_input_grad) {
  Tensor<Real> g, h;
  avg_pool_backward(dout, sur_c2_.h, sur_c2_.w, g);
  sur_conv2_.backward(sur_r1_, g, &h);
  relu_backward(sur_r1_, h, g);
  Tensor<Real> dx;
  sur_conv1_.backward(sur_in_, g, want_input_grad ? &dx : nullptr);
  return dx;
}

template <typename Real>
void ToyModel<Real>::freeze_encoder() {
  encoder_frozen_ = true;
  set_trainable(Group::kEncoder, false);
}

template <typename Real>
void ToyModel<Real>::set_trainable(Group group, bool trainable) {
  for (auto* p : params(group)) p->trainable = trainable;
}

template <typename Real>
std::vector<Param<Real>*> ToyModel<Real>::params(Group group) {
  std::vector<Param<Real>*> out;
  switch (group) {
    case Group::kEncoder:
      for (auto& b : encoder_) {
        out.insert(out.end(), {&b.conv.weight, &b.conv.bias, &b.bn.gamma, &b.bn.beta});
      }
      break;
    case Group::kSurrogateHead:
      out = {&sur_conv1_.weight, &sur_conv1_.bias, &sur_conv2_.weight,
             &sur_conv2_.bias};
      break;
    case Group::kSoilingHead:
      out = {&soil_conv1_.weight, &soil_conv1_.bias, &soil_bn1_.gamma,
             &soil_bn1_.beta,     &soil_conv2_.weight, &soil_conv2_.bias,
             &soil_bn2_.gamma,    &soil_bn2_.beta,     &soil_out_conv_.weight,
             &soil_out_conv_.bias};
      break;
  }
  return out;
}

template <typename Real>
std::vector<Param<Real>*> ToyModel<Real>::params() {
  std::vector<Param<Real>*> out;
  for (auto g : {Group::kEncoder, Group::kSurrogateHead, Group::kSoilingHead}) {
    auto part = params(g);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

template <typename Real>
std::vector<const Param<Real>*> ToyModel<Real>::params() const {
  auto all = const_cast<ToyModel*>(this)->params();
  return {all.begin(), all.end()};
}

template <typename Real>
std::vector<Buffer<Real>*> ToyModel<Real>::buffers(Group group) {
  std::vector<Buffer<Real>*> out;
  if (group == Group::kEncoder) {
    for (auto& b : encoder_) out.insert(out.end(), {&b.bn.running_mean, &b.bn.running_var});
  } else if (group == Group::kSoilingHead) {
    out = {&soil_bn1_.running_mean, &soil_bn1_.running_var,
           &soil_bn2_.running_mean, &soil_bn2_.running_var};
  }
  return out;
}

template <typename Real>
std::vector<const Buffer<Real>*> ToyModel<Real>::buffers() const {
  auto* self = const_cast<ToyModel*>(this);
  std::vector<const Buffer<Real>*> out;
  for (auto g : {Group::kEncoder, Group::kSurrogateHead, Group::kSoilingHead}) {
    for (auto* b : self->buffers(g)) out.push_back(b);
  }
  return out;
}

template <typename Real>
void ToyModel<Real>::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

template <typename Real>
std::uint64_t ToyModel<Real>::encoder_checksum() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&](const std::vector<Real>& values) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
    for (std::size_t i = 0; i < values.size() * sizeof(Real); ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  };
  auto* self = const_cast<ToyModel*>(this);
  for (auto* p : self->params(Group::kEncoder)) mix(p->value);
  for (auto* b : self->buffers(Group::kEncoder)) mix(b->value);
  return hash;
}

template <typename Real>
std::uint64_t ToyModel<Real>::relu_pattern() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&](const Tensor<Real>& pre) {
    for (const Real v : pre.data) {
      hash ^= v > Real(0) ? 1U : 0U;
      hash *= 0x100000001b3ULL;
    }
  };
  for (const auto& b : encoder_) mix(b.bn_out);
  mix(sur_c1_);
  mix(soil_b1_);
  mix(soil_b2_);
  return hash;
}

template <typename Real>
std::string ToyModel<Real>::first_nonfinite_activation() const {
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    const auto& b = encoder_[i];
    const std::string name = "encoder." + std::to_string(i);
    if (!b.conv_out.all_finite()) return name + ".conv";
    if (!b.bn_out.all_finite()) return name + ".bn";
  }
  const std::pair<const char*, const Tensor<Real>*> order[] = {
      {"surrogate.conv1", &sur_c1_}, {"surrogate.conv2", &sur_c2_},
      {"soiling.conv1", &soil_c1_},  {"soiling.bn1", &soil_b1_},
      {"soiling.conv2", &soil_c2_},  {"soiling.bn2", &soil_b2_},
      {"soiling.out", &soil_logits_}};
  for (const auto& [name, t] : order) {
    if (!t->all_finite()) return name;
  }
  return "";
}

template <typename Real>
template <typename Other>
ToyModel<Other> ToyModel<Real>::cast() const {
  ToyModel<Other> out(config_, 0);
  out.encoder_frozen_ = encoder_frozen_;
  auto src = params();
  auto dst = out.params();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i]->trainable = src[i]->trainable;
    for (std::size_t k = 0; k < src[i]->size(); ++k) {
      dst[i]->value[k] = static_cast<Other>(src[i]->value[k]);
    }
  }
  auto sb = buffers();
  std::vector<Buffer<Other>*> db;
  for (auto g : {Group::kEncoder, Group::kSurrogateHead, Group::kSoilingHead}) {
    for (auto* b : out.buffers(g)) db.push_back(b);
  }
  for (std::size_t i = 0; i < sb.size(); ++i) {
    for (std::size_t k = 0; k < sb[i]->value.size(); ++k) {
      db[i]->value[k] = static_cast<Other>(sb[i]->value[k]);
    }
  }
  return out;
}

template <typename Real>
std::vector<CoverageGrid> predict(ToyModel<Real>& model, const Tensor<Real>& images) {
  const auto features = model.forward_encoder(images, false);
  const auto logits = model.forward_soiling(features, false);
  Tensor<Real> out;
  if (model.config().mode == HeadMode::kCoverage) {
    softsign_forward(logits, out);
  } else {
    softmax_channels(logits, out);
  }
  std::vector<CoverageGrid> grids;
  for (int n = 0; n < out.n; ++n) {
    CoverageGrid grid(out.h, out.w);
    for (int r = 0; r < out.h; ++r) {
      for (int c = 0; c < out.w; ++c) {
        for (int k = 0; k < kNumClasses; ++k) {
          grid.at(r, c, k) = static_cast<double>(out(n, k, r, c));
        }
      }
    }
    grids.push_back(std::move(grid));
  }
  return grids;
}

template class ToyModel<float>;
template class ToyModel<double>;
template ToyModel<double> ToyModel<float>::cast<double>() const;
template ToyModel<float> ToyModel<double>::cast<float>() const;
template ToyModel<float> ToyModel<float>::cast<float>() const;
template ToyModel<double> ToyModel<double>::cast<double>() const;
template std::vector<CoverageGrid> predict(ToyModel<float>&, const Tensor<float>&);
template std::vector<CoverageGrid> predict(ToyModel<double>&, const Tensor<double>&);

}  // namespace soiling::nn
