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

#include "soiling/nn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace soiling::nn {

template <typename Real>
std::string Tensor<Real>::shape_string() const {
  return "[" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + "]";
}

template <typename Real>
Param<Real>::Param(std::string name_, std::vector<int> shape_, Real fill)
    : name(std::move(name_)), shape(std::move(shape_)) {
  const auto count = static_cast<std::size_t>(std::accumulate(
      shape.begin(), shape.end(), 1, std::multiplies<int>()));
  value.assign(count, fill);
  grad.assign(count, Real(0));
}

template <typename Real>
void Param<Real>::zero_grad() {
  std::fill(grad.begin(), grad.end(), Real(0));
}

template struct Tensor<float>;
template struct Tensor<double>;
template struct Param<float>;
template struct Param<double>;

}  // namespace soiling::nn
