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

#include "soiling/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "soiling/errors.hpp"

namespace soiling::nn {

namespace fs = std::filesystem;

Tensor<float> image_to_tensor(const RgbImage& image) {
  Tensor<float> t(1, 3, image.height(), image.width());
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) {
        t(0, ch, y, x) = static_cast<float>(image.at(x, y, ch)) / 255.0f - 0.5f;
      }
    }
  }
  return t;
}

std::vector<Sample> load_samples(const fs::path& corpus_root,
                                 const std::vector<std::string>& ids) {
  std::vector<std::string> stems = ids;
  if (stems.empty()) {
    const fs::path cov_dir = corpus_root / "coverage";
    if (!fs::is_directory(cov_dir)) {
      throw IoError(cov_dir.string(), "coverage directory not found");
    }
    for (const auto& entry : fs::directory_iterator(cov_dir)) {
      if (entry.path().extension() == ".csv") stems.push_back(entry.path().stem().string());
    }
    std::sort(stems.begin(), stems.end());
  }
  std::vector<Sample> samples;
  samples.reserve(stems.size());
  for (const auto& id : stems) {
    Sample s;
    s.image_id = id;
    s.image = image_to_tensor(read_ppm(corpus_root / "images" / (id + ".ppm")));
    s.coverage = read_coverage_csv(corpus_root / "coverage" / (id + ".csv"),
                                   {.ground_truth = true});
    samples.push_back(std::move(s));
  }
  return samples;
}

template <typename Real>
Tensor<Real> surrogate_targets(const Tensor<Real>& images, int vtiles, int htiles) {
  const int th = images.h / vtiles;
  const int tw = images.w / htiles;
  const double inv = 1.0 / (static_cast<double>(th) * tw);
  Tensor<Real> out(images.n, 2 * images.c, vtiles, htiles);
  for (int n = 0; n < images.n; ++n) {
    for (int ch = 0; ch < images.c; ++ch) {
      for (int r = 0; r < vtiles; ++r) {
        for (int c = 0; c < htiles; ++c) {
          double mean = 0.0;
          double grad = 0.0;
          for (int y = r * th; y < (r + 1) * th; ++y) {
            for (int x = c * tw; x < (c + 1) * tw; ++x) {
              const double v = images(n, ch, y, x);
              mean += v;
              if (x + 1 < images.w) grad += std::abs(images(n, ch, y, x + 1) - v);
              if (y + 1 < images.h) grad += std::abs(images(n, ch, y + 1, x) - v);
            }
          }
          out(n, ch, r, c) = static_cast<Real>(mean * inv);
          out(n, images.c + ch, r, c) = static_cast<Real>(grad * inv);
        }
      }
    }
  }
  return out;
}

namespace {

void check_batch(const ModelConfig& cfg, const Tensor<float>& images,
                 const std::vector<CoverageGrid>& coverage) {
  (void)images;
  for (const auto& g : coverage) {
    if (g.vtiles() != cfg.vtiles || g.htiles() != cfg.htiles) {
      throw DimensionError("coverage grid " + std::to_string(g.vtiles()) + "x" +
                           std::to_string(g.htiles()) + " does not match model tiles " +
                           std::to_string(cfg.vtiles) + "x" + std::to_string(cfg.htiles));
    }
  }
}

template <typename Real>
void check_finite(double loss, const ToyModel<Real>& model) {
  if (std::isfinite(loss)) return;
  const auto layer = model.first_nonfinite_activation();
  throw NumericError("non-finite loss" +
                     (layer.empty() ? std::string(" (activations finite; loss head)")
                                    : " (first non-finite activation: " + layer + ")"));
}

// Loss of the selected head on encoder features. When `backward` is set,
// head gradients are accumulated and d(features) is returned in *dfeatures.
template <typename Real>
double head_loss(ToyModel<Real>& model, const Tensor<Real>& features,
                 const Tensor<Real>& images, const std::vector<CoverageGrid>& coverage,
                 Objective objective, bool training, Tensor<Real>* dfeatures) {
  const int batch = features.n;
  const auto& cfg = model.config();
  const int tiles = cfg.vtiles * cfg.htiles;
  const bool backward = dfeatures != nullptr;
  double loss = 0.0;

  if (objective == Objective::kSurrogate) {
    const auto out = model.forward_surrogate(features);
    const auto target = surrogate_targets(images, cfg.vtiles, cfg.htiles);
    const double scale = 1.0 / (static_cast<double>(batch) * tiles);
    Tensor<Real> dout(out.n, out.c, out.h, out.w);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = static_cast<double>(out.data[i]) - target.data[i];
      loss += d * d;
      dout.data[i] = static_cast<Real>(2.0 * d * scale);
    }
    loss *= scale;
    check_finite(loss, model);
    if (backward) *dfeatures = model.backward_surrogate(dout, !model.encoder_frozen());
    return loss;
  }

  const auto logits = model.forward_soiling(features, training);
  Tensor<Real> dlogits(logits.n, logits.c, logits.h, logits.w);
  if (objective == Objective::kCoverage) {
    for (int n = 0; n < batch; ++n) {
      double sq = 0.0;
      for (int r = 0; r < cfg.vtiles; ++r) {
        for (int c = 0; c < cfg.htiles; ++c) {
          for (int k = 0; k < kNumClasses; ++k) {
            const double d = static_cast<double>(softsign(logits(n, k, r, c))) -
                             coverage[n].at(r, c, k);
            sq += d * d;
          }
        }
      }
      const double root = std::sqrt(sq / tiles + kRmseSmoothing);
      loss += root;
      const double factor = 1.0 / (static_cast<double>(batch) * tiles * root);
      for (int r = 0; r < cfg.vtiles; ++r) {
        for (int c = 0; c < cfg.htiles; ++c) {
          for (int k = 0; k < kNumClasses; ++k) {
            const Real z = logits(n, k, r, c);
            const double d = static_cast<double>(softsign(z)) - coverage[n].at(r, c, k);
            dlogits(n, k, r, c) = softsign_grad(z, static_cast<Real>(d * factor));
          }
        }
      }
    }
    loss /= batch;
  } else {
    const double scale = 1.0 / (static_cast<double>(batch) * tiles);
    for (int n = 0; n < batch; ++n) {
      const auto labels = dominant_labels(coverage[n]);
      for (int r = 0; r < cfg.vtiles; ++r) {
        for (int c = 0; c < cfg.htiles; ++c) {
          double peak = logits(n, 0, r, c);
          for (int k = 1; k < kNumClasses; ++k) {
            peak = std::max(peak, static_cast<double>(logits(n, k, r, c)));
          }
          double total = 0.0;
          for (int k = 0; k < kNumClasses; ++k) total += std::exp(logits(n, k, r, c) - peak);
          const double log_total = std::log(total);
          const int label = to_index(labels.at(r, c));
          loss -= static_cast<double>(logits(n, label, r, c)) - peak - log_total;
          for (int k = 0; k < kNumClasses; ++k) {
            const double prob = std::exp(logits(n, k, r, c) - peak - log_total);
            dlogits(n, k, r, c) =
                static_cast<Real>((prob - (k == label ? 1.0 : 0.0)) * scale);
          }
        }
      }
    }
    loss *= scale;
  }
  check_finite(loss, model);
  if (backward) *dfeatures = model.backward_soiling(dlogits, !model.encoder_frozen());
  return loss;
}

template <typename Real>
double run_batch(ToyModel<Real>& model, const Batch<Real>& batch,
                 Objective objective, bool training, bool backward) {
  if (batch.images.n == 0) throw ValidationError("empty batch");
  if (objective != Objective::kSurrogate &&
      static_cast<int>(batch.coverage.size()) != batch.images.n) {
    throw DimensionError("batch has " + std::to_string(batch.images.n) +
                         " images but " + std::to_string(batch.coverage.size()) +
                         " coverage grids");
  }
  for (const auto& g : batch.coverage) {
    if (g.vtiles() != model.config().vtiles || g.htiles() != model.config().htiles) {
      throw DimensionError("coverage grid does not match model tile grid");
    }
  }
  if (backward) model.zero_grad();
  const auto features = model.forward_encoder(batch.images, training);
  Tensor<Real> dfeatures;
  const double loss = head_loss(model, features, batch.images, batch.coverage,
                                objective, training, backward ? &dfeatures : nullptr);
  if (backward && !model.encoder_frozen()) model.backward_encoder(dfeatures);
  return loss;
}

Objective objective_for(HeadMode mode) {
  return mode == HeadMode::kCoverage ? Objective::kCoverage
                                     : Objective::kClassification;
}

Tensor<float> stack_images(const std::vector<const Tensor<float>*>& images) {
  const auto& first = *images.front();
  Tensor<float> out(static_cast<int>(images.size()), first.c, first.h, first.w);
  const std::size_t per = first.size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::copy(images[i]->data.begin(), images[i]->data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(i * per));
  }
  return out;
}

}  // namespace

template <typename Real>
double loss_and_grad(ToyModel<Real>& model, const Batch<Real>& batch,
                     Objective objective) {
  return run_batch(model, batch, objective, true, true);
}

template <typename Real>
double loss_only(ToyModel<Real>& model, const Batch<Real>& batch,
                 Objective objective) {
  return run_batch(model, batch, objective, true, false);
}

template <typename Real>
void adam_step(const std::vector<Param<Real>*>& params, AdamState<Real>& state,
               const AdamConfig& cfg) {
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i]->size(), Real(0));
      state.v[i].assign(params[i]->size(), Real(0));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (!p.trainable) continue;
    if (state.m[i].size() != p.size()) {
      throw DimensionError("adam state for " + p.name + " has wrong size");
    }
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = p.grad[k];
      const double mk = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      const double vk = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
      m[k] = static_cast<Real>(mk);
      v[k] = static_cast<Real>(vk);
      const double m_hat = mk / correction1;
      const double v_hat = vk / correction2;
      p.value[k] = static_cast<Real>(p.value[k] - cfg.learning_rate * m_hat /
                                                      (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

void augment(Tensor<float>& image, CoverageGrid& coverage,
             const AugmentConfig& cfg, Rng& rng) {
  const int h = image.h;
  const int w = image.w;
  const std::size_t plane = image.plane();
  // Work in [0, 1].
  for (auto& v : image.data) v += 0.5f;

  if (rng.bernoulli(cfg.p_flip)) {
    for (int ch = 0; ch < image.c; ++ch) {
      for (int y = 0; y < h; ++y) {
        float* row = &image(0, ch, y, 0);
        std::reverse(row, row + w);
      }
    }
    CoverageGrid flipped(coverage.vtiles(), coverage.htiles());
    for (int r = 0; r < coverage.vtiles(); ++r) {
      for (int c = 0; c < coverage.htiles(); ++c) {
        for (int k = 0; k < kNumClasses; ++k) {
          flipped.at(r, coverage.htiles() - 1 - c, k) = coverage.at(r, c, k);
        }
      }
    }
    coverage = std::move(flipped);
  }
  if (rng.bernoulli(cfg.p_brightness)) {
    const auto delta = static_cast<float>(rng.uniform(-cfg.brightness_delta, cfg.brightness_delta));
    for (auto& v : image.data) v += delta;
  }
  if (rng.bernoulli(cfg.p_contrast)) {
    const double factor = rng.uniform(1.0 - cfg.contrast_range, 1.0 + cfg.contrast_range);
    const double mean =
        std::accumulate(image.data.begin(), image.data.end(), 0.0) / image.size();
    for (auto& v : image.data) v = static_cast<float>(mean + (v - mean) * factor);
  }
  if (rng.bernoulli(cfg.p_color) && image.c == 3) {
    // Hue rotation and saturation scaling in YIQ space.
    const double theta = rng.uniform(-cfg.hue_radians, cfg.hue_radians);
    const double sat = rng.uniform(1.0 - cfg.saturation_range, 1.0 + cfg.saturation_range);
    const double cs = std::cos(theta) * sat;
    const double sn = std::sin(theta) * sat;
    float* r = image.data.data();
    float* g = r + plane;
    float* b = g + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const double yy = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
      const double ii = 0.596 * r[i] - 0.274 * g[i] - 0.322 * b[i];
      const double qq = 0.211 * r[i] - 0.523 * g[i] + 0.312 * b[i];
      const double i2 = cs * ii - sn * qq;
      const double q2 = sn * ii + cs * qq;
      r[i] = static_cast<float>(yy + 0.956 * i2 + 0.621 * q2);
      g[i] = static_cast<float>(yy - 0.272 * i2 - 0.647 * q2);
      b[i] = static_cast<float>(yy - 1.106 * i2 + 1.703 * q2);
    }
  }
  if (rng.bernoulli(cfg.p_noise)) {
    for (auto& v : image.data) v += static_cast<float>(cfg.noise_sigma * rng.normal());
  }
  for (auto& v : image.data) v = std::clamp(v, 0.0f, 1.0f) - 0.5f;
}

void TrainConfig::validate() const {
  if (batch_size < 1 || epochs < 1 || phase1_epochs < -1 || phase1_epochs == 0 ||
      !(adam.learning_rate > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0)) {
    throw ValidationError("train config: hyperparameters must be positive");
  }
}

std::string epoch_log_to_json(const EpochLog& e) {
  nlohmann::json doc;
  doc["phase"] = e.phase;
  doc["epoch"] = e.epoch;
  doc["loss"] = e.loss;
  doc["val_loss"] = e.val_loss;
  if (e.val_rmse_per_class) {
    nlohmann::json pc = nlohmann::json::object();
    for (auto cls : kAllClasses) {
      pc[std::string(class_name(cls))] = (*e.val_rmse_per_class)[to_index(cls)];
    }
    doc["val_rmse_per_class"] = pc;
  } else {
    doc["val_rmse_per_class"] = nullptr;
  }
  doc["val_rmse"] = e.val_rmse ? nlohmann::json(*e.val_rmse) : nlohmann::json(nullptr);
  if (e.val_accuracy) doc["val_accuracy"] = *e.val_accuracy;
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(e.encoder_checksum));
  doc["encoder_checksum"] = hex;
  return doc.dump();
}

ValidationMetrics validate(ToyModel<float>& model, const std::vector<Sample>& samples,
                           int batch_size) {
  ValidationMetrics out;
  if (samples.empty()) return out;
  const auto objective = objective_for(model.config().mode);
  std::array<double, kNumClasses> sq{};
  double rmse_sum = 0.0;
  std::size_t tiles = 0;
  std::size_t agree = 0;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<const Tensor<float>*> imgs;
    Batch<float> batch;
    for (std::size_t i = start; i < end; ++i) {
      imgs.push_back(&samples[i].image);
      batch.coverage.push_back(samples[i].coverage);
    }
    batch.images = stack_images(imgs);
    loss_sum += run_batch(model, batch, objective, false, false) *
                static_cast<double>(end - start);
    const auto preds = predict(model, batch.images);
    for (std::size_t i = start; i < end; ++i) {
      const auto& truth = samples[i].coverage;
      const auto& pred = preds[i - start];
      for (int t = 0; t < truth.num_tiles(); ++t) {
        for (int k = 0; k < kNumClasses; ++k) {
          const double d = truth.tile(t)[k] - pred.tile(t)[k];
          sq[k] += d * d;
        }
      }
      double image_sq = 0.0;
      for (std::size_t k = 0; k < truth.values().size(); ++k) {
        const double d = truth.values()[k] - pred.values()[k];
        image_sq += d * d;
      }
      rmse_sum += std::sqrt(image_sq / truth.num_tiles());
      const auto tl = dominant_labels(truth);
      const auto pl = dominant_labels(pred);
      for (std::size_t k = 0; k < tl.labels().size(); ++k) agree += tl.labels()[k] == pl.labels()[k];
      tiles += static_cast<std::size_t>(truth.num_tiles());
    }
  }
  for (int k = 0; k < kNumClasses; ++k) out.rmse_per_class[k] = std::sqrt(sq[k] / tiles);
  out.rmse = rmse_sum / static_cast<double>(samples.size());
  out.accuracy = static_cast<double>(agree) / static_cast<double>(tiles);
  out.loss = loss_sum / static_cast<double>(samples.size());
  return out;
}

TrainResult train_two_phase(const std::vector<Sample>& train,
                            const std::vector<Sample>& val, const TrainConfig& cfg,
                            const ModelConfig& model_cfg,
                            const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (train.empty()) throw ValidationError("training set is empty");
  ModelConfig mcfg = model_cfg;
  mcfg.mode = cfg.mode;
  TrainResult result{ToyModel<float>(mcfg, cfg.seed), {}, 0, 0};
  auto& model = result.model;
  for (const auto* set : {&train, &val}) {
    for (const auto& s : *set) {
      if (s.image.c != mcfg.in_channels || s.image.h != mcfg.input_h ||
          s.image.w != mcfg.input_w) {
        throw DimensionError("sample " + s.image_id + " has shape " +
                             s.image.shape_string());
      }
      check_batch(mcfg, s.image, {s.coverage});
    }
  }
  auto emit = [&](const EpochLog& e) {
    result.log.push_back(e);
    if (on_epoch) on_epoch(e);
  };

  const std::size_t n = train.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const std::uint64_t aug_seed = mix64(cfg.seed ^ 0x6175676d656e7421ULL);

  // Assembles the training batch at positions [start, end) of `order`.
  auto make_batch = [&](const std::vector<std::size_t>& order, std::size_t start,
                        std::size_t end, int phase, int epoch) {
    Batch<float> batch;
    std::vector<Tensor<float>> images;
    images.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
      const auto& s = train[order[i]];
      Tensor<float> img = s.image;
      CoverageGrid cov = s.coverage;
      if (cfg.augmentation) {
        Rng rng = Rng::stream(aug_seed + static_cast<std::uint64_t>(phase),
                              static_cast<std::uint64_t>(epoch) * n + i);
        augment(img, cov, cfg.augment, rng);
      }
      images.push_back(std::move(img));
      batch.coverage.push_back(std::move(cov));
    }
    std::vector<const Tensor<float>*> ptrs;
    for (const auto& t : images) ptrs.push_back(&t);
    batch.images = stack_images(ptrs);
    return batch;
  };

  auto epoch_order = [&](int phase, int epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(phase) * 100000 + epoch);
    rng.shuffle(order);
    return order;
  };

  // Phase 1: encoder + surrogate head.
  model.set_trainable(Group::kSoilingHead, false);
  {
    AdamState<float> state;
    auto params = model.params();
    const int epochs = cfg.phase1_epochs < 0 ? cfg.epochs : cfg.phase1_epochs;
    for (int epoch = 1; epoch <= epochs; ++epoch) {
      const auto order = epoch_order(1, epoch);
      double total = 0.0;
      for (std::size_t start = 0; start < n; start += bs) {
        const std::size_t end = std::min(n, start + bs);
        const auto batch = make_batch(order, start, end, 1, epoch);
        total += loss_and_grad(model, batch, Objective::kSurrogate) *
                 static_cast<double>(end - start);
        adam_step(params, state, cfg.adam);
      }
      EpochLog entry;
      entry.phase = 1;
      entry.epoch = epoch;
      entry.loss = total / static_cast<double>(n);
      if (!val.empty()) {
        double vl = 0.0;
        for (std::size_t start = 0; start < val.size(); start += bs) {
          const std::size_t end = std::min(val.size(), start + bs);
          std::vector<const Tensor<float>*> ptrs;
          for (std::size_t i = start; i < end; ++i) ptrs.push_back(&val[i].image);
          Batch<float> vb{stack_images(ptrs), {}};
          vl += run_batch(model, vb, Objective::kSurrogate, false, false) *
                static_cast<double>(end - start);
        }
        entry.val_loss = vl / static_cast<double>(val.size());
      }
      entry.encoder_checksum = model.encoder_checksum();
      emit(entry);
    }
  }

  // Phase 2: frozen encoder, soiling head only.
  model.freeze_encoder();
  model.set_trainable(Group::kSurrogateHead, false);
  model.set_trainable(Group::kSoilingHead, true);
  result.phase1_checksum = model.encoder_checksum();
  const auto objective = objective_for(cfg.mode);

  // With a frozen encoder and no augmentation the features never change.
  std::vector<Tensor<float>> cached;
  if (!cfg.augmentation) {
    cached.reserve(n);
    for (const auto& s : train) cached.push_back(model.forward_encoder(s.image, false));
  }

  struct Snapshot {
    std::vector<std::vector<float>> params;
    std::vector<std::vector<float>> buffers;
  };
  auto take_snapshot = [&]() {
    Snapshot snap;
    for (auto* p : model.params(Group::kSoilingHead)) snap.params.push_back(p->value);
    for (auto* b : model.buffers(Group::kSoilingHead)) snap.buffers.push_back(b->value);
    return snap;
  };
  std::optional<Snapshot> best;
  double best_score = std::numeric_limits<double>::infinity();

  AdamState<float> state;
  auto params = model.params();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = epoch_order(2, epoch);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(n, start + bs);
      double loss;
      if (!cached.empty()) {
        std::vector<const Tensor<float>*> feats;
        std::vector<const Tensor<float>*> imgs;
        std::vector<CoverageGrid> cov;
        for (std::size_t i = start; i < end; ++i) {
          feats.push_back(&cached[order[i]]);
          imgs.push_back(&train[order[i]].image);
          cov.push_back(train[order[i]].coverage);
        }
        model.zero_grad();
        Tensor<float> dfeat;
        loss = head_loss(model, stack_images(feats), stack_images(imgs), cov,
                         objective, true, &dfeat);
      } else {
        const auto batch = make_batch(order, start, end, 2, epoch);
        loss = loss_and_grad(model, batch, objective);
      }
      total += loss * static_cast<double>(end - start);
      adam_step(params, state, cfg.adam);
    }
    EpochLog entry;
    entry.phase = 2;
    entry.epoch = epoch;
    entry.loss = total / static_cast<double>(n);
    if (!val.empty()) {
      const auto vm = validate(model, val, cfg.batch_size);
      entry.val_loss = vm.loss;
      entry.val_rmse_per_class = vm.rmse_per_class;
      entry.val_rmse = vm.rmse;
      entry.val_accuracy = vm.accuracy;
      const double score = cfg.mode == HeadMode::kCoverage ? vm.rmse : vm.loss;
      if (score < best_score) {
        best_score = score;
        result.best_epoch = epoch;
        if (cfg.restore_best) best = take_snapshot();
      }
    } else {
      result.best_epoch = epoch;
    }
    entry.encoder_checksum = model.encoder_checksum();
    emit(entry);
  }
  if (best) {
    auto ps = model.params(Group::kSoilingHead);
    auto bs_ = model.buffers(Group::kSoilingHead);
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = best->params[i];
    for (std::size_t i = 0; i < bs_.size(); ++i) bs_[i]->value = best->buffers[i];
  }
  return result;
}

PredictSummary predict_to_files(ToyModel<float>& model,
                                const std::vector<fs::path>& images,
                                const fs::path& out_dir) {
  PredictSummary summary;
  std::error_code ec;
  for (const char* sub : {"coverage", "labels"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) throw IoError((out_dir / sub).string(), ec.message());
  }
  for (const auto& path : images) {
    const auto tensor = image_to_tensor(read_ppm(path));
    auto grid = predict(model, tensor).front();
    for (auto& v : grid.values()) {
      const double clamped = std::clamp(v, 0.0, 1.0);
      if (clamped != v) ++summary.clamped_values;
      v = clamped;
    }
    const auto stem = path.stem().string();
    write_coverage_csv(grid, out_dir / "coverage" / (stem + ".csv"));
    write_label_csv(dominant_labels(grid), out_dir / "labels" / (stem + ".csv"));
    ++summary.files;
  }
  return summary;
}

template Tensor<float> surrogate_targets(const Tensor<float>&, int, int);
template Tensor<double> surrogate_targets(const Tensor<double>&, int, int);
template double loss_and_grad(ToyModel<float>&, const Batch<float>&, Objective);
template double loss_and_grad(ToyModel<double>&, const Batch<double>&, Objective);
template double loss_only(ToyModel<float>&, const Batch<float>&, Objective);
template double loss_only(ToyModel<double>&, const Batch<double>&, Objective);
template void adam_step(const std::vector<Param<float>*>&, AdamState<float>&,
                        const AdamConfig&);
template void adam_step(const std::vector<Param<double>*>&, AdamState<double>&,
                        const AdamConfig&);

}  // namespace soiling::nn
