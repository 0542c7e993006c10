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

#ifndef SSNET_LOSSES_HPP_
#define SSNET_LOSSES_HPP_

#include <cmath>
#include <vector>

#include "ssnet/tensor.hpp"

namespace ssnet {

struct LossConfig {
  double th = 0.5;              // truncation margin on logits
  double focal_gamma = 2.0;
  double focal_alpha = -1.0;    // < 0 disables class weighting
  bool seg_focal_enabled = true;
  double clip_grad_norm = -1.0; // < 0 disables clipping

  void validate() const {
    check_arg(th >= 0.0, "loss: th must be >= 0");
    check_arg(focal_gamma >= 0.0, "loss: focal_gamma must be >= 0");
    check_arg(focal_alpha < 0.0 || focal_alpha <= 1.0, "loss: focal_alpha must be in [0,1]");
  }
};

namespace detail {

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Losses reduce as mean over cells, then mean over batch entries.
inline double batch_cell_scale(const Tensor& t) {
  const i64 bsz = t.dim(0);
  const i64 cells = t.numel() / bsz;
  return 1.0 / (static_cast<double>(bsz) * static_cast<double>(cells));
}

}  // namespace detail

// Hinge-style L1 on logits, truncated at the margin: anomalous cells pay
// max(0, th - x), normal cells pay max(0, th + x). Targets are 0/1 masks
// with the same element count as the logits.
inline double truncated_l1(const Tensor& logits, const Tensor& targets, double th,
                           Tensor* dlogits = nullptr) {
  check_arg(logits.numel() == targets.numel(), "truncated_l1: size mismatch");
  const double scale = detail::batch_cell_scale(logits);
  double loss = 0.0;
  for (i64 i = 0; i < logits.numel(); ++i) {
    const double x = logits[i];
    if (targets[i] != 0.0f) {
      loss += std::max(0.0, th - x);
      if (dlogits && x < th) (*dlogits)[i] += static_cast<float>(-scale);
    } else {
      loss += std::max(0.0, th + x);
      if (dlogits && x > -th) (*dlogits)[i] += static_cast<float>(scale);
    }
  }
  return loss * scale;
}

// Focal loss on logits with optional alpha weighting; gamma = 0 and no
// alpha reduces to binary cross-entropy. Computed via log-sigmoid forms so
// extreme logits stay finite.
inline double focal_loss(const Tensor& logits, const Tensor& targets, double gamma, double alpha,
                         Tensor* dlogits = nullptr) {
  check_arg(logits.numel() == targets.numel(), "focal_loss: size mismatch");
  const double scale = detail::batch_cell_scale(logits);
  double loss = 0.0;
  for (i64 i = 0; i < logits.numel(); ++i) {
    const double x = logits[i];
    const double logp = -detail::softplus(-x);   // log sigmoid(x)
    const double log1mp = -detail::softplus(x);  // log(1 - sigmoid(x))
    const double p = std::exp(logp), q = std::exp(log1mp);
    if (targets[i] != 0.0f) {
      const double w = alpha >= 0.0 ? alpha : 1.0;
      const double mod = std::exp(gamma * log1mp);  // (1-p)^gamma
      loss += -w * mod * logp;
      if (dlogits) (*dlogits)[i] += static_cast<float>(scale * w * mod * (gamma * p * logp - q));
    } else {
      const double w = alpha >= 0.0 ? 1.0 - alpha : 1.0;
      const double mod = std::exp(gamma * logp);    // p^gamma
      loss += -w * mod * log1mp;
      if (dlogits) (*dlogits)[i] += static_cast<float>(scale * w * mod * (p - gamma * q * log1mp));
    }
  }
  return loss * scale;
}

struct LossBreakdown {
  double total = 0.0;
  double seg = 0.0;
  double cls = 0.0;
  double seg_trunc = 0.0;
  double seg_focal = 0.0;
};

// L = L_seg + L_cls with L_seg = truncated L1 + focal on the cell grid and
// L_cls = focal on the image score. Pass scores = nullptr when the
// classification head is disabled. Gradients accumulate into the optional
// outputs.
inline LossBreakdown total_loss(const Tensor& seg_logits, const Tensor& seg_targets,
                                const Tensor* scores, const Tensor* score_targets,
                                const LossConfig& cfg, Tensor* dseg = nullptr,
                                Tensor* dscores = nullptr) {
  cfg.validate();
  LossBreakdown out;
  out.seg_trunc = truncated_l1(seg_logits, seg_targets, cfg.th, dseg);
  if (cfg.seg_focal_enabled)
    out.seg_focal = focal_loss(seg_logits, seg_targets, cfg.focal_gamma, cfg.focal_alpha, dseg);
  out.seg = out.seg_trunc + out.seg_focal;
  if (scores) {
    check_arg(score_targets != nullptr, "total_loss: scores need targets");
    out.cls = focal_loss(*scores, *score_targets, cfg.focal_gamma, cfg.focal_alpha, dscores);
  }
  out.total = out.seg + out.cls;
  return out;
}

// Scales the gradient set so its global L2 norm is at most max_norm.
// Returns the pre-clip norm.
inline double clip_gradients(const std::vector<Tensor*>& grads, double max_norm) {
  check_arg(max_norm > 0.0, "clip_gradients: max_norm must be > 0");
  double sq = 0.0;
  for (const Tensor* g : grads)
    for (i64 i = 0; i < g->numel(); ++i) sq += static_cast<double>((*g)[i]) * (*g)[i];
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const float s = static_cast<float>(max_norm / norm);
    for (Tensor* g : grads)
      for (i64 i = 0; i < g->numel(); ++i) (*g)[i] *= s;
  }
  return norm;
}

}  // namespace ssnet

#endif  // SSNET_LOSSES_HPP_
