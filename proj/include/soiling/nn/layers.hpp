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

#include <string>
#include <vector>

#include "soiling/nn/tensor.hpp"
#include "soiling/rng.hpp"

namespace soiling::nn {

// y = x / (1 + |x|)
template <typename Real>
Real softsign(Real x) {
  return x / (Real(1) + std::abs(x));
}

// dy/dx * upstream = dy / (1 + |x|)^2
template <typename Real>
Real softsign_grad(Real x, Real upstream) {
  const Real d = Real(1) + std::abs(x);
  return upstream / (d * d);
}

template <typename Real>
void softsign_forward(const Tensor<Real>& x, Tensor<Real>& y);
template <typename Real>
void softsign_backward(const Tensor<Real>& x, const Tensor<Real>& dy,
                       Tensor<Real>& dx);

// Softmax over channels at every spatial position.
template <typename Real>
void softmax_channels(const Tensor<Real>& logits, Tensor<Real>& probs);

// 2-D convolution with square kernel, zero padding.
template <typename Real>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_ch, int out_ch, int kernel, int stride,
         int pad);

  // He-normal weights, zero bias.
  void init(Rng& rng);

  void forward(const Tensor<Real>& x, Tensor<Real>& y) const;
  // Accumulates weight/bias gradients when trainable; writes dx when
  // dx != nullptr.
  void backward(const Tensor<Real>& x, const Tensor<Real>& dy,
                Tensor<Real>* dx);

  int out_size(int in) const { return (in + 2 * pad_ - kernel_) / stride_ + 1; }
  int out_channels() const { return out_ch_; }

  Param<Real> weight;  // [out, in, k, k]
  Param<Real> bias;    // [out]

 private:
  int in_ch_ = 0;
  int out_ch_ = 0;
  int kernel_ = 1;
  int stride_ = 1;
  int pad_ = 0;
};

// Per-channel batch normalization. Training mode normalizes with batch
// statistics and folds them into the running averages:
//   running = momentum * running + (1 - momentum) * batch.
template <typename Real>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, int channels, Real momentum = Real(0.9),
              Real eps = Real(1e-5));

  void forward(const Tensor<Real>& x, Tensor<Real>& y, bool training);
  void backward(const Tensor<Real>& dy, Tensor<Real>* dx);

  Param<Real> gamma;
  Param<Real> beta;
  Buffer<Real> running_mean;
  Buffer<Real> running_var;

 private:
  Real momentum_ = Real(0.9);
  Real eps_ = Real(1e-5);
  bool last_training_ = false;
  // Cached by forward for backward.
  Tensor<Real> xhat_;
  std::vector<Real> inv_std_;
};

template <typename Real>
void relu_forward(const Tensor<Real>& x, Tensor<Real>& y);
// Uses the forward output to build the mask.
template <typename Real>
void relu_backward(const Tensor<Real>& y, const Tensor<Real>& dy,
                   Tensor<Real>& dx);

// Non-overlapping average pooling down to (out_h, out_w); input size must be
// an exact multiple.
template <typename Real>
void avg_pool_forward(const Tensor<Real>& x, int out_h, int out_w,
                      Tensor<Real>& y);
template <typename Real>
void avg_pool_backward(const Tensor<Real>& dy, int in_h, int in_w,
                       Tensor<Real>& dx);

}  // namespace soiling::nn
