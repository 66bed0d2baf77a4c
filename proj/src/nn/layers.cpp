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

#include "soiling/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "soiling/errors.hpp"

namespace soiling::nn {

template <typename Real>
void softsign_forward(const Tensor<Real>& x, Tensor<Real>& y) {
  y = Tensor<Real>(x.n, x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = softsign(x.data[i]);
}

template <typename Real>
void softsign_backward(const Tensor<Real>& x, const Tensor<Real>& dy,
                       Tensor<Real>& dx) {
  dx = Tensor<Real>(x.n, x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.size(); ++i) {
    dx.data[i] = softsign_grad(x.data[i], dy.data[i]);
  }
}

template <typename Real>
void softmax_channels(const Tensor<Real>& logits, Tensor<Real>& probs) {
  probs = Tensor<Real>(logits.n, logits.c, logits.h, logits.w);
  for (int n = 0; n < logits.n; ++n) {
    for (int y = 0; y < logits.h; ++y) {
      for (int x = 0; x < logits.w; ++x) {
        Real peak = logits(n, 0, y, x);
        for (int c = 1; c < logits.c; ++c) peak = std::max(peak, logits(n, c, y, x));
        Real total = 0;
        for (int c = 0; c < logits.c; ++c) {
          const Real e = std::exp(logits(n, c, y, x) - peak);
          probs(n, c, y, x) = e;
          total += e;
        }
        for (int c = 0; c < logits.c; ++c) probs(n, c, y, x) /= total;
      }
    }
  }
}

template <typename Real>
Conv2d<Real>::Conv2d(const std::string& name, int in_ch, int out_ch, int kernel,
                     int stride, int pad)
    : weight(name + ".weight", {out_ch, in_ch, kernel, kernel}),
      bias(name + ".bias", {out_ch}),
      in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      pad_(pad) {}

template <typename Real>
void Conv2d<Real>::init(Rng& rng) {
  const double fan_in = static_cast<double>(in_ch_) * kernel_ * kernel_;
  const double stddev = std::sqrt(2.0 / fan_in);
  for (auto& v : weight.value) v = static_cast<Real>(stddev * rng.normal());
  std::fill(bias.value.begin(), bias.value.end(), Real(0));
}

template <typename Real>
void Conv2d<Real>::forward(const Tensor<Real>& x, Tensor<Real>& y) const {
  if (x.c != in_ch_) {
    throw DimensionError(weight.name + ": expected " + std::to_string(in_ch_) +
                         " input channels, got " + x.shape_string());
  }
  const int oh = out_size(x.h);
  const int ow = out_size(x.w);
  y = Tensor<Real>(x.n, out_ch_, oh, ow);
  const int k = kernel_;
  for (int n = 0; n < x.n; ++n) {
    for (int oc = 0; oc < out_ch_; ++oc) {
      Real* out = y.data.data() + y.index(n, oc, 0, 0);
      std::fill(out, out + static_cast<std::ptrdiff_t>(y.plane()), bias.value[oc]);
      for (int ic = 0; ic < in_ch_; ++ic) {
        const Real* in = x.data.data() + x.index(n, ic, 0, 0);
        const Real* wk = weight.value.data() +
                         (static_cast<std::size_t>(oc) * in_ch_ + ic) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const Real wv = wk[ky * k + kx];
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride_ - pad_ + ky;
              if (iy < 0 || iy >= x.h) continue;
              const Real* in_row = in + static_cast<std::size_t>(iy) * x.w;
              Real* out_row = out + static_cast<std::size_t>(oy) * ow;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride_ - pad_ + kx;
                if (ix < 0 || ix >= x.w) continue;
                out_row[ox] += wv * in_row[ix];
              }
            }
          }
        }
      }
    }
  }
}

template <typename Real>
void Conv2d<Real>::backward(const Tensor<Real>& x, const Tensor<Real>& dy,
                            Tensor<Real>* dx) {
  const int oh = dy.h;
  const int ow = dy.w;
  const int k = kernel_;
  const bool want_params = weight.trainable;
  if (dx) *dx = Tensor<Real>(x.n, x.c, x.h, x.w);
  if (!want_params && !dx) return;
  for (int n = 0; n < x.n; ++n) {
    for (int oc = 0; oc < out_ch_; ++oc) {
      const Real* g = dy.data.data() + dy.index(n, oc, 0, 0);
      if (want_params && bias.trainable) {
        Real acc = 0;
        for (std::size_t i = 0; i < dy.plane(); ++i) acc += g[i];
        bias.grad[oc] += acc;
      }
      for (int ic = 0; ic < in_ch_; ++ic) {
        const Real* in = x.data.data() + x.index(n, ic, 0, 0);
        Real* din = dx ? dx->data.data() + dx->index(n, ic, 0, 0) : nullptr;
        const std::size_t wbase = (static_cast<std::size_t>(oc) * in_ch_ + ic) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const Real wv = weight.value[wbase + ky * k + kx];
            Real wacc = 0;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride_ - pad_ + ky;
              if (iy < 0 || iy >= x.h) continue;
              const Real* g_row = g + static_cast<std::size_t>(oy) * ow;
              const std::size_t in_off = static_cast<std::size_t>(iy) * x.w;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride_ - pad_ + kx;
                if (ix < 0 || ix >= x.w) continue;
                wacc += g_row[ox] * in[in_off + ix];
                if (din) din[in_off + ix] += wv * g_row[ox];
              }
            }
            if (want_params) weight.grad[wbase + ky * k + kx] += wacc;
          }
        }
      }
    }
  }
}

template <typename Real>
BatchNorm2d<Real>::BatchNorm2d(const std::string& name, int channels,
                               Real momentum, Real eps)
    : gamma(name + ".gamma", {channels}, Real(1)),
      beta(name + ".beta", {channels}, Real(0)),
      running_mean{name + ".running_mean", {channels},
                   std::vector<Real>(static_cast<std::size_t>(channels), Real(0))},
      running_var{name + ".running_var", {channels},
                  std::vector<Real>(static_cast<std::size_t>(channels), Real(1))},
      momentum_(momentum),
      eps_(eps) {}

template <typename Real>
void BatchNorm2d<Real>::forward(const Tensor<Real>& x, Tensor<Real>& y,
                                bool training) {
  const int channels = x.c;
  y = Tensor<Real>(x.n, x.c, x.h, x.w);
  xhat_ = Tensor<Real>(x.n, x.c, x.h, x.w);
  inv_std_.assign(static_cast<std::size_t>(channels), Real(0));
  last_training_ = training;
  const std::size_t plane = x.plane();
  const double count = static_cast<double>(x.n) * static_cast<double>(plane);
  for (int c = 0; c < channels; ++c) {
    double mean;
    double var;
    if (training) {
      double sum = 0.0;
      for (int n = 0; n < x.n; ++n) {
        const Real* p = x.data.data() + x.index(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (int n = 0; n < x.n; ++n) {
        const Real* p = x.data.data() + x.index(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
      running_mean.value[c] = static_cast<Real>(
          momentum_ * running_mean.value[c] + (1 - momentum_) * mean);
      const double unbiased = count > 1 ? var * count / (count - 1) : var;
      running_var.value[c] = static_cast<Real>(
          momentum_ * running_var.value[c] + (1 - momentum_) * unbiased);
    } else {
      mean = running_mean.value[c];
      var = running_var.value[c];
    }
    const Real inv_std = static_cast<Real>(1.0 / std::sqrt(var + eps_));
    inv_std_[c] = inv_std;
    const Real m = static_cast<Real>(mean);
    const Real g = gamma.value[c];
    const Real b = beta.value[c];
    for (int n = 0; n < x.n; ++n) {
      const std::size_t off = x.index(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        const Real xh = (x.data[off + i] - m) * inv_std;
        xhat_.data[off + i] = xh;
        y.data[off + i] = g * xh + b;
      }
    }
  }
}

template <typename Real>
void BatchNorm2d<Real>::backward(const Tensor<Real>& dy, Tensor<Real>* dx) {
  const int channels = dy.c;
  const std::size_t plane = dy.plane();
  const double count = static_cast<double>(dy.n) * static_cast<double>(plane);
  if (dx) *dx = Tensor<Real>(dy.n, dy.c, dy.h, dy.w);
  for (int c = 0; c < channels; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int n = 0; n < dy.n; ++n) {
      const std::size_t off = dy.index(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += dy.data[off + i];
        sum_dy_xhat += dy.data[off + i] * xhat_.data[off + i];
      }
    }
    if (gamma.trainable) gamma.grad[c] += static_cast<Real>(sum_dy_xhat);
    if (beta.trainable) beta.grad[c] += static_cast<Real>(sum_dy);
    if (!dx) continue;
    const Real scale = gamma.value[c] * inv_std_[c];
    if (last_training_) {
      const Real mean_dy = static_cast<Real>(sum_dy / count);
      const Real mean_dy_xhat = static_cast<Real>(sum_dy_xhat / count);
      for (int n = 0; n < dy.n; ++n) {
        const std::size_t off = dy.index(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          dx->data[off + i] =
              scale * (dy.data[off + i] - mean_dy - xhat_.data[off + i] * mean_dy_xhat);
        }
      }
    } else {
      for (int n = 0; n < dy.n; ++n) {
        const std::size_t off = dy.index(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) dx->data[off + i] = scale * dy.data[off + i];
      }
    }
  }
}

template <typename Real>
void relu_forward(const Tensor<Real>& x, Tensor<Real>& y) {
  y = Tensor<Real>(x.n, x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > 0 ? x.data[i] : Real(0);
}

template <typename Real>
void relu_backward(const Tensor<Real>& y, const Tensor<Real>& dy,
                   Tensor<Real>& dx) {
  dx = Tensor<Real>(y.n, y.c, y.h, y.w);
  for (std::size_t i = 0; i < y.size(); ++i) dx.data[i] = y.data[i] > 0 ? dy.data[i] : Real(0);
}

template <typename Real>
void avg_pool_forward(const Tensor<Real>& x, int out_h, int out_w,
                      Tensor<Real>& y) {
  if (out_h <= 0 || out_w <= 0 || x.h % out_h != 0 || x.w % out_w != 0) {
    throw DimensionError("cannot pool " + x.shape_string() + " to " +
                         std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  const int fh = x.h / out_h;
  const int fw = x.w / out_w;
  const Real inv = Real(1) / static_cast<Real>(fh * fw);
  y = Tensor<Real>(x.n, x.c, out_h, out_w);
  for (int n = 0; n < x.n; ++n) {
    for (int c = 0; c < x.c; ++c) {
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
          Real acc = 0;
          for (int dy = 0; dy < fh; ++dy) {
            for (int dx = 0; dx < fw; ++dx) acc += x(n, c, oy * fh + dy, ox * fw + dx);
          }
          y(n, c, oy, ox) = acc * inv;
        }
      }
    }
  }
}

template <typename Real>
void avg_pool_backward(const Tensor<Real>& dy, int in_h, int in_w,
                       Tensor<Real>& dx) {
  const int fh = in_h / dy.h;
  const int fw = in_w / dy.w;
  const Real inv = Real(1) / static_cast<Real>(fh * fw);
  dx = Tensor<Real>(dy.n, dy.c, in_h, in_w);
  for (int n = 0; n < dy.n; ++n) {
    for (int c = 0; c < dy.c; ++c) {
      for (int y = 0; y < in_h; ++y) {
        for (int x = 0; x < in_w; ++x) dx(n, c, y, x) = dy(n, c, y / fh, x / fw) * inv;
      }
    }
  }
}

#define SOILING_INSTANTIATE(Real)                                              \
  template void softsign_forward<Real>(const Tensor<Real>&, Tensor<Real>&);    \
  template void softsign_backward<Real>(const Tensor<Real>&,                   \
                                        const Tensor<Real>&, Tensor<Real>&);   \
  template void softmax_channels<Real>(const Tensor<Real>&, Tensor<Real>&);    \
  template class Conv2d<Real>;                                                 \
  template class BatchNorm2d<Real>;                                            \
  template void relu_forward<Real>(const Tensor<Real>&, Tensor<Real>&);        \
  template void relu_backward<Real>(const Tensor<Real>&, const Tensor<Real>&,  \
                                    Tensor<Real>&);                            \
  template void avg_pool_forward<Real>(const Tensor<Real>&, int, int,          \
                                       Tensor<Real>&);                         \
  template void avg_pool_backward<Real>(const Tensor<Real>&, int, int,         \
                                        Tensor<Real>&);

SOILING_INSTANTIATE(float)
SOILING_INSTANTIATE(double)

#undef SOILING_INSTANTIATE

}  // namespace soiling::nn
