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

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace soiling::nn {

// Dense NCHW tensor.
template <typename Real>
struct Tensor {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<Real> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, Real fill = Real(0))
      : n(n_), c(c_), h(h_), w(w_),
        data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t index(int in, int ic, int iy, int ix) const {
    return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
  }
  Real& operator()(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
  Real operator()(int in, int ic, int iy, int ix) const {
    return data[index(in, ic, iy, ix)];
  }
  Real* sample(int in) { return data.data() + static_cast<std::size_t>(in) * c * plane(); }
  const Real* sample(int in) const {
    return data.data() + static_cast<std::size_t>(in) * c * plane();
  }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  bool all_finite() const {
    for (Real v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
  std::string shape_string() const;
};

// A learnable tensor with its gradient and trainable flag.
template <typename Real>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string name_, std::vector<int> shape_, Real fill = Real(0));
  std::size_t size() const { return value.size(); }
  void zero_grad();
};

// Non-learnable state that is still saved and checksummed (BN running stats).
template <typename Real>
struct Buffer {
  std::string name;
  std::vector<int> shape;
  std::vector<Real> value;
};

}  // namespace soiling::nn
