// Copyright 2026 The ssnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SSNET_NN_HPP_
#define SSNET_NN_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ssnet/rng.hpp"
#include "ssnet/tensor.hpp"

namespace ssnet {
namespace nn {

enum class Pad { kZero, kReplicate };

// im2col scratch cap (floats); large convolutions are processed in
// column chunks so peak memory stays bounded regardless of input size.
inline constexpr i64 kIm2ColBudget = 16 * 1024 * 1024;

inline i64 conv_out_dim(i64 in, i64 k, i64 stride, i64 pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Writes columns [col0, col1) of the im2col matrix for one image.
// x: [C,H,W]; out buffer is K x (col1-col0), K = C*kh*kw, row-major.
inline void im2col_chunk(const float* x, i64 c, i64 h, i64 w, i64 kh, i64 kw, i64 stride, i64 pad,
                         Pad mode, i64 ow, i64 col0, i64 col1, float* out) {
  const i64 cols = col1 - col0;
  for (i64 ic = 0; ic < c; ++ic) {
    for (i64 ky = 0; ky < kh; ++ky) {
      for (i64 kx = 0; kx < kw; ++kx) {
        float* row = out + ((ic * kh + ky) * kw + kx) * cols;
        for (i64 col = col0; col < col1; ++col) {
          i64 oy = col / ow, ox = col % ow;
          i64 iy = oy * stride - pad + ky;
          i64 ix = ox * stride - pad + kx;
          float v;
          if (mode == Pad::kReplicate) {
            iy = std::clamp<i64>(iy, 0, h - 1);
            ix = std::clamp<i64>(ix, 0, w - 1);
            v = x[(ic * h + iy) * w + ix];
          } else {
            v = (iy < 0 || ix < 0 || iy >= h || ix >= w) ? 0.0f : x[(ic * h + iy) * w + ix];
          }
          row[col - col0] = v;
        }
      }
    }
  }
}

// Scatter-add transpose of im2col_chunk (input gradient accumulation).
inline void col2im_chunk(const float* cols_buf, i64 c, i64 h, i64 w, i64 kh, i64 kw, i64 stride,
                         i64 pad, Pad mode, i64 ow, i64 col0, i64 col1, float* dx) {
  const i64 cols = col1 - col0;
  for (i64 ic = 0; ic < c; ++ic) {
    for (i64 ky = 0; ky < kh; ++ky) {
      for (i64 kx = 0; kx < kw; ++kx) {
        const float* row = cols_buf + ((ic * kh + ky) * kw + kx) * cols;
        for (i64 col = col0; col < col1; ++col) {
          i64 oy = col / ow, ox = col % ow;
          i64 iy = oy * stride - pad + ky;
          i64 ix = ox * stride - pad + kx;
          if (mode == Pad::kReplicate) {
            iy = std::clamp<i64>(iy, 0, h - 1);
            ix = std::clamp<i64>(ix, 0, w - 1);
          } else if (iy < 0 || ix < 0 || iy >= h || ix >= w) {
            continue;
          }
          dx[(ic * h + iy) * w + ix] += row[col - col0];
        }
      }
    }
  }
}

// 2D convolution (cross-correlation) layer. Weights are stored GEMM-ready
// as [cout, cin*kh*kw].
struct Conv2d {
  Tensor w, b;
  i64 cin = 0, cout = 0, kh = 0, kw = 0, stride = 1, pad = 0;
  Pad pad_mode = Pad::kZero;
  bool has_bias = true;

  Conv2d() = default;
  Conv2d(i64 cin_, i64 cout_, i64 k, i64 stride_, i64 pad_, Pad mode = Pad::kZero,
         bool bias = true)
      : cin(cin_), cout(cout_), kh(k), kw(k), stride(stride_), pad(pad_), pad_mode(mode),
        has_bias(bias) {
    w = Tensor::zeros({cout, cin * kh * kw});
    if (has_bias) b = Tensor::zeros({cout});
  }

  // Fan-in scaled normal init (He).
  void init_he(Rng& rng) {
    double std_dev = std::sqrt(2.0 / static_cast<double>(cin * kh * kw));
    for (i64 i = 0; i < w.numel(); ++i) w[i] = static_cast<float>(rng.normal(0.0, std_dev));
    if (has_bias) b.zero();
  }

  i64 param_count() const { return w.numel() + (has_bias ? b.numel() : 0); }

  // x: [B,cin,H,W] -> [B,cout,OH,OW]
  Tensor forward(const Tensor& x) const {
    check_arg(x.rank() == 4 && x.dim(1) == cin, "conv2d: bad input shape");
    const i64 bsz = x.dim(0), h = x.dim(2), wd = x.dim(3);
    const i64 oh = conv_out_dim(h, kh, stride, pad), ow = conv_out_dim(wd, kw, stride, pad);
    check_arg(oh > 0 && ow > 0, "conv2d: output would be empty");
    Tensor y({bsz, cout, oh, ow});

    if (kh == 1 && kw == 1 && stride == 1 && pad == 0) {
      ConstMatMap wm(w.data(), cout, cin);
      for (i64 n = 0; n < bsz; ++n) {
        ConstMatMap xm(x.data() + n * cin * h * wd, cin, h * wd);
        MatMap ym(y.data() + n * cout * oh * ow, cout, oh * ow);
        ym.noalias() = wm * xm;
      }
    } else {
      const i64 k = cin * kh * kw;
      const i64 total = oh * ow;
      const i64 chunk = std::max<i64>(1, std::min(total, kIm2ColBudget / std::max<i64>(k, 1)));
      std::vector<float> cols(static_cast<size_t>(k * chunk));
      ConstMatMap wm(w.data(), cout, k);
      for (i64 n = 0; n < bsz; ++n) {
        for (i64 c0 = 0; c0 < total; c0 += chunk) {
          i64 c1 = std::min(total, c0 + chunk);
          im2col_chunk(x.data() + n * cin * h * wd, cin, h, wd, kh, kw, stride, pad, pad_mode, ow,
                       c0, c1, cols.data());
          ConstMatMap cm(cols.data(), k, c1 - c0);
          // Output rows are oh*ow apart, so the chunk is written row by row.
          Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> ych =
              wm * cm;
          for (i64 oc = 0; oc < cout; ++oc)
            Eigen::Map<Eigen::RowVectorXf>(y.data() + (n * cout + oc) * total + c0, c1 - c0) =
                ych.row(oc);
        }
      }
    }
    if (has_bias) {
      for (i64 n = 0; n < bsz; ++n)
        for (i64 oc = 0; oc < cout; ++oc) {
          float* p = y.data() + (n * cout + oc) * oh * ow;
          for (i64 i = 0; i < oh * ow; ++i) p[i] += b[oc];
        }
    }
    return y;
  }

  // Accumulates dw/db; if dx != nullptr also accumulates input gradient.
  void backward(const Tensor& x, const Tensor& dy, Tensor& dw, Tensor& db, Tensor* dx) const {
    const i64 bsz = x.dim(0), h = x.dim(2), wd = x.dim(3);
    const i64 oh = dy.dim(2), ow = dy.dim(3);
    check_arg(dy.dim(0) == bsz && dy.dim(1) == cout, "conv2d backward: bad dy");

    if (kh == 1 && kw == 1 && stride == 1 && pad == 0) {
      MatMap dwm(dw.data(), cout, cin);
      ConstMatMap wm(w.data(), cout, cin);
      for (i64 n = 0; n < bsz; ++n) {
        ConstMatMap xm(x.data() + n * cin * h * wd, cin, h * wd);
        ConstMatMap dym(dy.data() + n * cout * oh * ow, cout, oh * ow);
        dwm.noalias() += dym * xm.transpose();
        if (dx) {
          MatMap dxm(dx->data() + n * cin * h * wd, cin, h * wd);
          dxm.noalias() += wm.transpose() * dym;
        }
      }
    } else {
      const i64 k = cin * kh * kw;
      const i64 total = oh * ow;
      const i64 chunk = std::max<i64>(1, std::min(total, kIm2ColBudget / std::max<i64>(k, 1)));
      std::vector<float> cols(static_cast<size_t>(k * chunk));
      std::vector<float> dcols(static_cast<size_t>(k * chunk));
      MatMap dwm(dw.data(), cout, k);
      ConstMatMap wm(w.data(), cout, k);
      for (i64 n = 0; n < bsz; ++n) {
        for (i64 c0 = 0; c0 < total; c0 += chunk) {
          i64 c1 = std::min(total, c0 + chunk);
          im2col_chunk(x.data() + n * cin * h * wd, cin, h, wd, kh, kw, stride, pad, pad_mode, ow,
                       c0, c1, cols.data());
          ConstMatMap cm(cols.data(), k, c1 - c0);
          Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dych(cout, c1 - c0);
          for (i64 oc = 0; oc < cout; ++oc)
            dych.row(oc) = Eigen::Map<const Eigen::RowVectorXf>(
                dy.data() + (n * cout + oc) * total + c0, c1 - c0);
          dwm.noalias() += dych * cm.transpose();
          if (dx) {
            MatMap dcm(dcols.data(), k, c1 - c0);
            dcm.noalias() = wm.transpose() * dych;
            col2im_chunk(dcols.data(), cin, h, wd, kh, kw, stride, pad, pad_mode, ow, c0, c1,
                         dx->data() + n * cin * h * wd);
          }
        }
      }
    }
    if (has_bias) {
      for (i64 n = 0; n < bsz; ++n)
        for (i64 oc = 0; oc < cout; ++oc) {
          const float* p = dy.data() + (n * cout + oc) * oh * ow;
          double acc = 0.0;
          for (i64 i = 0; i < oh * ow; ++i) acc += p[i];
          db[oc] += static_cast<float>(acc);
        }
    }
  }
};

// Per-channel affine y = a*x + b (frozen batch-norm at inference).
struct ChannelAffine {
  Tensor scale, shift;

  explicit ChannelAffine(i64 c = 0) {
    if (c > 0) {
      scale = Tensor::full({c}, 1.0f);
      shift = Tensor::zeros({c});
    }
  }

  void apply(Tensor& x) const {
    const i64 bsz = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    for (i64 n = 0; n < bsz; ++n)
      for (i64 ic = 0; ic < c; ++ic) {
        float* p = x.data() + (n * c + ic) * hw;
        const float a = scale[ic], b = shift[ic];
        for (i64 i = 0; i < hw; ++i) p[i] = a * p[i] + b;
      }
  }
};

inline void relu_(Tensor& x) {
  for (i64 i = 0; i < x.numel(); ++i) x[i] = std::max(0.0f, x[i]);
}

inline Tensor relu(const Tensor& x) {
  Tensor y = x;
  relu_(y);
  return y;
}

// dx = dy * 1[pre > 0]
inline void relu_backward_(const Tensor& pre, Tensor& dy) {
  for (i64 i = 0; i < pre.numel(); ++i)
    if (pre[i] <= 0.0f) dy[i] = 0.0f;
}

inline Tensor leaky_relu(const Tensor& x, float slope) {
  Tensor y = x;
  for (i64 i = 0; i < y.numel(); ++i)
    if (y[i] < 0.0f) y[i] *= slope;
  return y;
}

inline void leaky_relu_backward_(const Tensor& pre, float slope, Tensor& dy) {
  for (i64 i = 0; i < pre.numel(); ++i)
    if (pre[i] < 0.0f) dy[i] *= slope;
}

// 3x3/2/1 max pooling (the resnet stem).
inline Tensor maxpool3x3s2(const Tensor& x) {
  const i64 bsz = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const i64 oh = conv_out_dim(h, 3, 2, 1), ow = conv_out_dim(w, 3, 2, 1);
  Tensor y({bsz, c, oh, ow});
  for (i64 n = 0; n < bsz; ++n)
    for (i64 ic = 0; ic < c; ++ic) {
      const float* src = x.data() + (n * c + ic) * h * w;
      float* dst = y.data() + (n * c + ic) * oh * ow;
      for (i64 oy = 0; oy < oh; ++oy)
        for (i64 ox = 0; ox < ow; ++ox) {
          float m = -std::numeric_limits<float>::infinity();
          for (i64 ky = 0; ky < 3; ++ky)
            for (i64 kx = 0; kx < 3; ++kx) {
              i64 iy = oy * 2 - 1 + ky, ix = ox * 2 - 1 + kx;
              if (iy < 0 || ix < 0 || iy >= h || ix >= w) continue;
              m = std::max(m, src[iy * w + ix]);
            }
          dst[oy * ow + ox] = m;
        }
    }
  return y;
}

// 3x3 stride-1 mean filter with edge replication; separable, shape-preserving.
inline Tensor mean3x3_replicate(const Tensor& x) {
  const i64 bsz = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({bsz, c, h, w});
  std::vector<float> tmp(static_cast<size_t>(h * w));
  for (i64 n = 0; n < bsz; ++n)
    for (i64 ic = 0; ic < c; ++ic) {
      const float* src = x.data() + (n * c + ic) * h * w;
      // Horizontal pass.
      for (i64 yy = 0; yy < h; ++yy)
        for (i64 xx = 0; xx < w; ++xx) {
          i64 xm = std::max<i64>(xx - 1, 0), xp = std::min<i64>(xx + 1, w - 1);
          tmp[static_cast<size_t>(yy * w + xx)] =
              (src[yy * w + xm] + src[yy * w + xx] + src[yy * w + xp]) * (1.0f / 3.0f);
        }
      float* dst = y.data() + (n * c + ic) * h * w;
      for (i64 yy = 0; yy < h; ++yy) {
        i64 ym = std::max<i64>(yy - 1, 0), yp = std::min<i64>(yy + 1, h - 1);
        for (i64 xx = 0; xx < w; ++xx)
          dst[yy * w + xx] = (tmp[static_cast<size_t>(ym * w + xx)] +
                              tmp[static_cast<size_t>(yy * w + xx)] +
                              tmp[static_cast<size_t>(yp * w + xx)]) *
                             (1.0f / 3.0f);
      }
    }
  return y;
}

// Bilinear interpolation with half-pixel centers (align_corners = false).
inline Tensor bilinear_resize(const Tensor& x, i64 oh, i64 ow) {
  const i64 bsz = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (oh == h && ow == w) return x;
  Tensor y({bsz, c, oh, ow});

  std::vector<i64> x0(static_cast<size_t>(ow)), x1(static_cast<size_t>(ow));
  std::vector<float> fx(static_cast<size_t>(ow));
  for (i64 ox = 0; ox < ow; ++ox) {
    double sx = (ox + 0.5) * static_cast<double>(w) / static_cast<double>(ow) - 0.5;
    i64 ix = static_cast<i64>(std::floor(sx));
    fx[static_cast<size_t>(ox)] = static_cast<float>(sx - ix);
    x0[static_cast<size_t>(ox)] = std::clamp<i64>(ix, 0, w - 1);
    x1[static_cast<size_t>(ox)] = std::clamp<i64>(ix + 1, 0, w - 1);
  }
  for (i64 n = 0; n < bsz; ++n)
    for (i64 ic = 0; ic < c; ++ic) {
      const float* src = x.data() + (n * c + ic) * h * w;
      float* dst = y.data() + (n * c + ic) * oh * ow;
      for (i64 oy = 0; oy < oh; ++oy) {
        double sy = (oy + 0.5) * static_cast<double>(h) / static_cast<double>(oh) - 0.5;
        i64 iy = static_cast<i64>(std::floor(sy));
        float fy = static_cast<float>(sy - iy);
        i64 y0 = std::clamp<i64>(iy, 0, h - 1), y1 = std::clamp<i64>(iy + 1, 0, h - 1);
        const float* r0 = src + y0 * w;
        const float* r1 = src + y1 * w;
        for (i64 ox = 0; ox < ow; ++ox) {
          float a = r0[x0[static_cast<size_t>(ox)]], bq = r0[x1[static_cast<size_t>(ox)]];
          float cq = r1[x0[static_cast<size_t>(ox)]], d = r1[x1[static_cast<size_t>(ox)]];
          float f = fx[static_cast<size_t>(ox)];
          dst[oy * ow + ox] = (1 - fy) * (a + f * (bq - a)) + fy * (cq + f * (d - cq));
        }
      }
    }
  return y;
}

// Separable Gaussian with symmetric boundary reflection.
inline Tensor gaussian_blur(const Tensor& x, double sigma, i64 radius) {
  check_arg(sigma > 0.0 && radius > 0, "gaussian_blur: bad parameters");
  const i64 bsz = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  std::vector<float> kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (i64 i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    kernel[static_cast<size_t>(i + radius)] = static_cast<float>(v);
    sum += v;
  }
  for (float& v : kernel) v = static_cast<float>(v / sum);

  auto reflect = [](i64 i, i64 n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - i - 1;
    }
    return i;
  };

  Tensor tmp({bsz, c, h, w}), y({bsz, c, h, w});
  for (i64 n = 0; n < bsz; ++n)
    for (i64 ic = 0; ic < c; ++ic) {
      const float* src = x.data() + (n * c + ic) * h * w;
      float* mid = tmp.data() + (n * c + ic) * h * w;
      for (i64 yy = 0; yy < h; ++yy)
        for (i64 xx = 0; xx < w; ++xx) {
          float acc = 0.0f;
          for (i64 d = -radius; d <= radius; ++d)
            acc += kernel[static_cast<size_t>(d + radius)] * src[yy * w + reflect(xx + d, w)];
          mid[yy * w + xx] = acc;
        }
      float* dst = y.data() + (n * c + ic) * h * w;
      for (i64 yy = 0; yy < h; ++yy)
        for (i64 xx = 0; xx < w; ++xx) {
          float acc = 0.0f;
          for (i64 d = -radius; d <= radius; ++d)
            acc += kernel[static_cast<size_t>(d + radius)] * mid[reflect(yy + d, h) * w + xx];
          dst[yy * w + xx] = acc;
        }
    }
  return y;
}

// Fully connected layer, w: [out, in].
struct Linear {
  Tensor w, b;
  i64 in = 0, out = 0;

  Linear() = default;
  Linear(i64 in_, i64 out_) : in(in_), out(out_) {
    w = Tensor::zeros({out, in});
    b = Tensor::zeros({out});
  }

  void init_he(Rng& rng) {
    double std_dev = std::sqrt(2.0 / static_cast<double>(in));
    for (i64 i = 0; i < w.numel(); ++i) w[i] = static_cast<float>(rng.normal(0.0, std_dev));
    b.zero();
  }

  i64 param_count() const { return w.numel() + b.numel(); }

  // x: [B, in] -> [B, out]
  Tensor forward(const Tensor& x) const {
    const i64 bsz = x.dim(0);
    Tensor y({bsz, out});
    ConstMatMap xm(x.data(), bsz, in), wm(w.data(), out, in);
    MatMap ym(y.data(), bsz, out);
    ym.noalias() = xm * wm.transpose();
    for (i64 n = 0; n < bsz; ++n)
      for (i64 o = 0; o < out; ++o) y.at(n, o) += b[o];
    return y;
  }

  void backward(const Tensor& x, const Tensor& dy, Tensor& dw, Tensor& db, Tensor* dx) const {
    const i64 bsz = x.dim(0);
    ConstMatMap xm(x.data(), bsz, in), dym(dy.data(), bsz, out), wm(w.data(), out, in);
    MatMap dwm(dw.data(), out, in);
    dwm.noalias() += dym.transpose() * xm;
    for (i64 n = 0; n < bsz; ++n)
      for (i64 o = 0; o < out; ++o) db[o] += dy.at(n, o);
    if (dx) {
      MatMap dxm(dx->data(), bsz, in);
      dxm.noalias() += dym * wm;
    }
  }
};

}  // namespace nn
}  // namespace ssnet

#endif  // SSNET_NN_HPP_
