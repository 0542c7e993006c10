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

#ifndef SSNET_ANOMALY_HPP_
#define SSNET_ANOMALY_HPP_

#include <string>
#include <vector>

#include "ssnet/featurizer.hpp"
#include "ssnet/rng.hpp"
#include "ssnet/tensor.hpp"

namespace ssnet {

// How synthetic regions are shaped: thresholded Perlin blobs, or the
// whole-copy variant where noise covers every cell (ablation).
enum class GeneratorStyle { kPerlinMasked, kSimplenetFullCopy };

inline GeneratorStyle generator_style_from(const std::string& s) {
  if (s == "perlin_masked") return GeneratorStyle::kPerlinMasked;
  if (s == "simplenet_full_copy") return GeneratorStyle::kSimplenetFullCopy;
  throw std::invalid_argument(cat("unknown generator_style '", s, "'"));
}

struct NoiseConfig {
  double gauss_mu = 0.0;
  double gauss_sigma = 0.015;
  double perlin_threshold = 0.6;   // 0.2 suits high-variance texture data
  double anomaly_probability = 0.5;
  bool duplicate_features = true;
  bool overlap_allowed = false;
  bool synthetic_enabled = true;
  GeneratorStyle style = GeneratorStyle::kPerlinMasked;

  void validate() const {
    check_arg(gauss_sigma >= 0.0, "noise: gauss_sigma must be >= 0");
    check_arg(perlin_threshold > -1.0 && perlin_threshold < 1.0,
              "noise: perlin_threshold must lie in (-1, 1)");
    check_arg(anomaly_probability >= 0.0 && anomaly_probability <= 1.0,
              "noise: anomaly_probability must lie in [0, 1]");
  }
};

// Masks are rank-2 tensors holding exactly 0 or 1.
inline bool mask_any(const Tensor& m) {
  for (i64 i = 0; i < m.numel(); ++i)
    if (m[i] != 0.0f) return true;
  return false;
}

inline i64 mask_area(const Tensor& m) {
  i64 n = 0;
  for (i64 i = 0; i < m.numel(); ++i) n += (m[i] != 0.0f);
  return n;
}

struct MaskSet {
  Tensor thresholded;   // raw thresholded noise field
  Tensor ground_truth;  // real defect cells
  Tensor synthetic;     // cells that actually receive noise
  Tensor combined;      // training target: synthetic OR ground truth
};

namespace detail {

inline i64 next_pow2(i64 v) {
  i64 p = 1;
  while (p < v) p <<= 1;
  return p;
}

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

}  // namespace detail

// Single-octave gradient noise on an s x s grid (s a power of two) with an
// (ry, rx) lattice. Unit gradients plus the sqrt(2) factor bound the output
// to [-1, 1].
inline Tensor perlin_field(i64 s, i64 ry, i64 rx, Rng& rng) {
  check_arg(s > 0 && ry > 0 && rx > 0 && s % ry == 0 && s % rx == 0,
            "perlin_field: lattice must divide the grid");
  std::vector<double> gx(static_cast<size_t>((ry + 1) * (rx + 1)));
  std::vector<double> gy(gx.size());
  for (size_t i = 0; i < gx.size(); ++i) {
    double a = rng.uniform(0.0, 2.0 * M_PI);
    gx[i] = std::cos(a);
    gy[i] = std::sin(a);
  }
  const double sy = static_cast<double>(ry) / static_cast<double>(s);
  const double sx = static_cast<double>(rx) / static_cast<double>(s);
  Tensor out({s, s});
  for (i64 y = 0; y < s; ++y) {
    double py = y * sy;
    i64 j0 = static_cast<i64>(py);
    double fy = py - j0;
    double qy = detail::fade(fy);
    for (i64 x = 0; x < s; ++x) {
      double px = x * sx;
      i64 i0 = static_cast<i64>(px);
      double fx = px - i0;
      double qx = detail::fade(fx);
      auto dot = [&](i64 j, i64 i, double dx, double dy) {
        size_t g = static_cast<size_t>(j * (rx + 1) + i);
        return gx[g] * dx + gy[g] * dy;
      };
      double n00 = dot(j0, i0, fx, fy);
      double n10 = dot(j0, i0 + 1, fx - 1.0, fy);
      double n01 = dot(j0 + 1, i0, fx, fy - 1.0);
      double n11 = dot(j0 + 1, i0 + 1, fx - 1.0, fy - 1.0);
      double nx0 = n00 + qx * (n10 - n00);
      double nx1 = n01 + qx * (n11 - n01);
      out.at(y, x) = static_cast<float>(M_SQRT2 * (nx0 + qy * (nx1 - nx0)));
    }
  }
  return out;
}

// Binary mask from a fractal noise field sampled at feature resolution.
// The lattice scale is 2^k per axis, k uniform in {0..5} (capped so the
// lattice fits the grid); the field is generated on the enclosing power-of-
// two square and cropped.
inline Tensor perlin_mask(i64 h, i64 w, double threshold, Rng& rng) {
  check_arg(h > 0 && w > 0, "perlin_mask: bad dims");
  const i64 s = detail::next_pow2(std::max<i64>({h, w, 2}));
  i64 kmax = 0;
  while ((i64{1} << (kmax + 1)) <= std::min<i64>(s, 32)) ++kmax;
  const i64 ry = i64{1} << rng.uniform_int(kmax + 1);
  const i64 rx = i64{1} << rng.uniform_int(kmax + 1);
  Tensor field = perlin_field(s, ry, rx, rng);
  Tensor mask({h, w});
  for (i64 y = 0; y < h; ++y)
    for (i64 x = 0; x < w; ++x) mask.at(y, x) = field.at(y, x) > threshold ? 1.0f : 0.0f;
  return mask;
}

// m_a keeps thresholded cells away from real defects (unless overlap is
// allowed); the combined target is synthetic OR ground truth.
inline MaskSet compose_masks(const Tensor& thresholded, const Tensor& ground_truth,
                             bool overlap_allowed) {
  check_arg(thresholded.same_shape(ground_truth), "compose_masks: shape mismatch");
  MaskSet ms;
  ms.thresholded = thresholded;
  ms.ground_truth = ground_truth;
  ms.synthetic = Tensor(thresholded.shape());
  ms.combined = Tensor(thresholded.shape());
  for (i64 i = 0; i < thresholded.numel(); ++i) {
    float t = thresholded[i] != 0.0f ? 1.0f : 0.0f;
    float g = ground_truth[i] != 0.0f ? 1.0f : 0.0f;
    float a = overlap_allowed ? t : (t != 0.0f && g == 0.0f ? 1.0f : 0.0f);
    ms.synthetic[i] = a;
    ms.combined[i] = (a != 0.0f || g != 0.0f) ? 1.0f : 0.0f;
  }
  return ms;
}

// Any-overlap block reduction: a target cell is positive iff any source
// pixel in its block is. Blocks are floor-boundary partitions, so every
// source pixel belongs to exactly one cell.
inline Tensor downsample_gt(const Tensor& gt, i64 fh, i64 fw) {
  check_arg(gt.rank() == 2, "downsample_gt: mask must be rank 2");
  const i64 h = gt.dim(0), w = gt.dim(1);
  Tensor out({fh, fw});
  for (i64 i = 0; i < fh; ++i) {
    i64 y0 = i * h / fh, y1 = std::max((i + 1) * h / fh, y0 + 1);
    for (i64 j = 0; j < fw; ++j) {
      i64 x0 = j * w / fw, x1 = std::max((j + 1) * w / fw, x0 + 1);
      float v = 0.0f;
      for (i64 y = y0; y < y1 && v == 0.0f; ++y)
        for (i64 x = x0; x < x1; ++x)
          if (gt.at(std::min(y, h - 1), std::min(x, w - 1)) != 0.0f) {
            v = 1.0f;
            break;
          }
      out.at(i, j) = v;
    }
  }
  return out;
}

struct PerturbResult {
  FeatureBatch perturbed;        // [B or 2B, C, h, w]
  std::vector<MaskSet> masks;    // per output entry, at feature resolution
  std::vector<int> labels;       // y = 1 iff combined mask has a positive cell
};

// Latent-space anomaly injection. With duplication the batch is doubled
// (entry i >= B is a copy of i - B); every output entry independently draws
// a synthetic mask with probability anomaly_probability and receives i.i.d.
// Gaussian noise on its synthetic cells only.
inline PerturbResult perturb(const FeatureBatch& adapted, const std::vector<Tensor>& gt_masks,
                             const NoiseConfig& cfg, Rng& rng) {
  cfg.validate();
  const i64 bsz = adapted.batch(), c = adapted.channels();
  const i64 h = adapted.height(), w = adapted.width();
  check_arg(static_cast<i64>(gt_masks.size()) == bsz, "perturb: one gt mask per input entry");
  for (const Tensor& m : gt_masks)
    check_arg(m.rank() == 2 && m.dim(0) == h && m.dim(1) == w,
              "perturb: gt masks must be at feature resolution");

  const i64 out_b = cfg.duplicate_features ? 2 * bsz : bsz;
  PerturbResult res;
  res.perturbed.stride = adapted.stride;
  res.perturbed.data = Tensor({out_b, c, h, w});
  for (i64 i = 0; i < out_b; ++i) {
    const i64 src = i % bsz;
    std::copy(adapted.data.data() + src * c * h * w, adapted.data.data() + (src + 1) * c * h * w,
              res.perturbed.data.data() + i * c * h * w);
  }

  const i64 hw = h * w;
  for (i64 i = 0; i < out_b; ++i) {
    const Tensor& gt = gt_masks[static_cast<size_t>(i % bsz)];
    MaskSet ms;
    if (cfg.synthetic_enabled && rng.bernoulli(cfg.anomaly_probability)) {
      Tensor thr = cfg.style == GeneratorStyle::kSimplenetFullCopy
                       ? Tensor::full({h, w}, 1.0f)
                       : perlin_mask(h, w, cfg.perlin_threshold, rng);
      ms = compose_masks(thr, gt, cfg.overlap_allowed);
      float* base = res.perturbed.data.data() + i * c * hw;
      for (i64 ch = 0; ch < c; ++ch)
        for (i64 p = 0; p < hw; ++p)
          if (ms.synthetic[p] != 0.0f)
            base[ch * hw + p] += static_cast<float>(rng.normal(cfg.gauss_mu, cfg.gauss_sigma));
    } else {
      ms = compose_masks(Tensor({h, w}), gt, cfg.overlap_allowed);
    }
    res.labels.push_back(mask_any(ms.combined) ? 1 : 0);
    res.masks.push_back(std::move(ms));
  }
  return res;
}

}  // namespace ssnet

#endif  // SSNET_ANOMALY_HPP_
