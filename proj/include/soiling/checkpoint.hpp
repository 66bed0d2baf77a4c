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

#include <filesystem>

#include "soiling/model.hpp"

namespace soiling::nn {

// Flat little-endian binary checkpoint:
//
//   magic      8 bytes  "SOILCKPT"
//   version    u32      1
//   n_config   u32      number of (name, i32) configuration entries
//   entries    n_config x { u32 name_len, name bytes, i32 value }
//   n_blobs    u32
//   blobs      n_blobs x { u32 name_len, name bytes, u32 ndims,
//                          ndims x u32 dim, prod(dims) x f32 value }
//
// Configuration keys: input_h, input_w, in_channels, vtiles, htiles,
// encoder_channels.0..3, head_channels, surrogate_channels, mode
// (0 coverage, 1 classification), encoder_frozen. Blobs hold every
// parameter followed by every batch-norm running statistic, keyed by name.
void save_checkpoint(const ToyModel<float>& model, const std::filesystem::path& path);

ToyModel<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace soiling::nn
