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

#include "soiling/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "soiling/errors.hpp"

namespace soiling::nn {

namespace {

constexpr char kMagic[8] = {'S', 'O', 'I', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(std::vector<char> bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void expect_magic() {
    need(sizeof(kMagic));
    if (std::memcmp(bytes_.data(), kMagic, sizeof(kMagic)) != 0) {
      throw ParseError(source_, 0, "bad checkpoint magic");
    }
    pos_ += sizeof(kMagic);
  }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ParseError(source_, 0, "truncated checkpoint");
  }
  std::vector<char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

template <typename T>
void write_blob(Writer& w, const std::string& name, const std::vector<int>& shape,
                const std::vector<T>& values) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(shape.size()));
  for (int d : shape) w.u32(static_cast<std::uint32_t>(d));
  for (auto v : values) w.f32(static_cast<float>(v));
}

}  // namespace

void save_checkpoint(const ToyModel<float>& model, const std::filesystem::path& path) {
  const auto& cfg = model.config();
  std::vector<std::pair<std::string, std::int32_t>> config = {
      {"input_h", cfg.input_h},
      {"input_w", cfg.input_w},
      {"in_channels", cfg.in_channels},
      {"vtiles", cfg.vtiles},
      {"htiles", cfg.htiles},
      {"encoder_channels.0", cfg.encoder_channels[0]},
      {"encoder_channels.1", cfg.encoder_channels[1]},
      {"encoder_channels.2", cfg.encoder_channels[2]},
      {"encoder_channels.3", cfg.encoder_channels[3]},
      {"head_channels", cfg.head_channels},
      {"surrogate_channels", cfg.surrogate_channels},
      {"mode", cfg.mode == HeadMode::kCoverage ? 0 : 1},
      {"encoder_frozen", model.encoder_frozen() ? 1 : 0},
  };
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(config.size()));
  for (const auto& [name, value] : config) {
    w.str(name);
    w.i32(value);
  }
  const auto params = model.params();
  const auto buffers = model.buffers();
  w.u32(static_cast<std::uint32_t>(params.size() + buffers.size()));
  for (const auto* p : params) write_blob(w, p->name, p->shape, p->value);
  for (const auto* b : buffers) write_blob(w, b->name, b->shape, b->value);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError(path.string(), "write failed");
}

ToyModel<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path.string());
  r.expect_magic();
  const auto version = r.u32();
  if (version != kVersion) {
    throw ParseError(path.string(), 0, "unsupported checkpoint version " + std::to_string(version));
  }
  std::map<std::string, std::int32_t> config;
  const auto n_config = r.u32();
  for (std::uint32_t i = 0; i < n_config; ++i) {
    auto name = r.str();
    config[name] = r.i32();
  }
  auto get = [&](const std::string& key) {
    auto it = config.find(key);
    if (it == config.end()) throw ParseError(path.string(), 0, "missing config key '" + key + "'");
    return it->second;
  };
  ModelConfig cfg;
  cfg.input_h = get("input_h");
  cfg.input_w = get("input_w");
  cfg.in_channels = get("in_channels");
  cfg.vtiles = get("vtiles");
  cfg.htiles = get("htiles");
  for (int i = 0; i < 4; ++i) cfg.encoder_channels[i] = get("encoder_channels." + std::to_string(i));
  cfg.head_channels = get("head_channels");
  cfg.surrogate_channels = get("surrogate_channels");
  cfg.mode = get("mode") == 0 ? HeadMode::kCoverage : HeadMode::kClassification;

  ToyModel<float> model(cfg, 0);
  if (get("encoder_frozen") != 0) model.freeze_encoder();

  std::map<std::string, std::vector<float>*> slots;
  std::map<std::string, std::vector<int>> shapes;
  for (auto g : {Group::kEncoder, Group::kSurrogateHead, Group::kSoilingHead}) {
    for (auto* p : model.params(g)) {
      slots[p->name] = &p->value;
      shapes[p->name] = p->shape;
    }
    for (auto* b : model.buffers(g)) {
      slots[b->name] = &b->value;
      shapes[b->name] = b->shape;
    }
  }
  const auto n_blobs = r.u32();
  std::size_t filled = 0;
  for (std::uint32_t i = 0; i < n_blobs; ++i) {
    const auto name = r.str();
    const auto ndims = r.u32();
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < ndims; ++d) shape.push_back(static_cast<int>(r.u32()));
    auto it = slots.find(name);
    if (it == slots.end()) throw ParseError(path.string(), 0, "unknown blob '" + name + "'");
    if (shape != shapes[name]) throw ParseError(path.string(), 0, "shape mismatch for blob '" + name + "'");
    for (auto& v : *it->second) v = r.f32();
    ++filled;
  }
  if (filled != slots.size()) {
    throw ParseError(path.string(), 0, "checkpoint is missing blobs");
  }
  return model;
}

}  // namespace soiling::nn
