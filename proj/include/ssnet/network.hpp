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

#ifndef SSNET_NETWORK_HPP_
#define SSNET_NETWORK_HPP_

#include <functional>
#include <optional>
#include <vector>

#include "ssnet/featurizer.hpp"
#include "ssnet/nn.hpp"

namespace ssnet {

struct HeadConfig {
  i64 seg_hidden = 1024;
  i64 cls_conv_channels = 128;
  bool cls_enabled = true;
  // Sever the gradient path from the classification loss into the
  // segmentation head and adaptor (the unsupervised regime).
  bool stop_grad_to_seg = true;
  float leaky_slope = 0.2f;

  void validate() const {
    check_arg(seg_hidden > 0 && cls_conv_channels > 0, "heads: channel counts must be positive");
  }
};

// Per-parameter gradient buffers, one tensor per trainable array.
struct Gradients {
  Tensor adaptor_w, adaptor_b;
  Tensor seg1_w, seg1_b, seg2_w, seg2_b;
  Tensor cls_conv_w, cls_conv_b, cls_fc_w, cls_fc_b;

  void zero() {
    for (Tensor* t : all())
      if (!t->empty()) t->zero();
  }

  std::vector<Tensor*> all() {
    return {&adaptor_w, &adaptor_b, &seg1_w,     &seg1_b,     &seg2_w,
            &seg2_b,    &cls_conv_w, &cls_conv_b, &cls_fc_w,   &cls_fc_b};
  }

  std::vector<Tensor*> adaptor_group() { return {&adaptor_w, &adaptor_b}; }

  std::vector<Tensor*> head_group() {
    return {&seg1_w, &seg1_b, &seg2_w, &seg2_b, &cls_conv_w, &cls_conv_b, &cls_fc_w, &cls_fc_b};
  }
};

// Intermediates kept from the training forward pass; cheap elementwise
// activations are recomputed during backward instead of being stored.
struct ForwardCache {
  Tensor perturbed;   // [N,C,h,w], N = B or 2B
  Tensor seg_pre;     // [N,hidden,h,w]
  Tensor seg_logits;  // [N,1,h,w]
  Tensor cls_in;      // [N,C+1,h,w]
  Tensor cls_pre;     // [N,cc,h,w]
  Tensor pooled;      // [N, 2*cc + 2]
  std::vector<i64> argmax_conv;  // per (n, channel), index into h*w
  std::vector<i64> argmax_map;   // per n
  Tensor scores;      // [N]
};

struct InferOutput {
  Tensor seg_logits;            // [B,1,h,w]
  std::optional<Tensor> scores; // [B]; absent when the cls head is disabled
};

// Trainable part of the model: 1x1 adaptor, two-layer 1x1 segmentation
// head, and a small convolutional classification head fed by the adapted
// features concatenated with the segmentation logits.
class Network {
 public:
  Network(i64 in_channels, const HeadConfig& cfg) : cfg_(cfg), channels_(in_channels) {
    cfg.validate();
    adaptor_ = nn::Conv2d(in_channels, in_channels, 1, 1, 0);
    seg1_ = nn::Conv2d(in_channels, cfg.seg_hidden, 1, 1, 0);
    seg2_ = nn::Conv2d(cfg.seg_hidden, 1, 1, 1, 0);
    if (cfg.cls_enabled) {
      // Edge-replicate padding keeps a constant field constant, making the
      // pooled statistics independent of spatial size.
      cls_conv_ = nn::Conv2d(in_channels + 1, cfg.cls_conv_channels, 5, 1, 2, nn::Pad::kReplicate);
      cls_fc_ = nn::Linear(2 * cfg.cls_conv_channels + 2, 1);
    }
  }

  const HeadConfig& config() const { return cfg_; }
  i64 channels() const { return channels_; }

  void init(u64 seed) {
    Rng rng(splitmix64(seed ^ 0x6e657477ull));
    adaptor_.init_he(rng);
    seg1_.init_he(rng);
    seg2_.init_he(rng);
    if (cfg_.cls_enabled) {
      cls_conv_.init_he(rng);
      cls_fc_.init_he(rng);
    }
  }

  Gradients make_gradients() const {
    Gradients g;
    g.adaptor_w = Tensor(adaptor_.w.shape());
    g.adaptor_b = Tensor(adaptor_.b.shape());
    g.seg1_w = Tensor(seg1_.w.shape());
    g.seg1_b = Tensor(seg1_.b.shape());
    g.seg2_w = Tensor(seg2_.w.shape());
    g.seg2_b = Tensor(seg2_.b.shape());
    if (cfg_.cls_enabled) {
      g.cls_conv_w = Tensor(cls_conv_.w.shape());
      g.cls_conv_b = Tensor(cls_conv_.b.shape());
      g.cls_fc_w = Tensor(cls_fc_.w.shape());
      g.cls_fc_b = Tensor(cls_fc_.b.shape());
    }
    return g;
  }

  // 1x1 channel adaptor.
  Tensor adapt(const Tensor& features) const { return adaptor_.forward(features); }

  // Cell-level logits from (possibly perturbed) adapted features.
  Tensor segment(const Tensor& p, Tensor* pre_out = nullptr) const {
    Tensor pre = seg1_.forward(p);
    Tensor act = nn::leaky_relu(pre, cfg_.leaky_slope);
    if (pre_out) *pre_out = std::move(pre);
    return seg2_.forward(act);
  }

  // Image score from features + segmentation logits. Fills cache fields
  // when given one.
  Tensor classify(const Tensor& p, const Tensor& seg_logits, ForwardCache* cache = nullptr) const {
    check_arg(cfg_.cls_enabled, "classify: classification head is disabled");
    Tensor cls_in = concat_channels(p, seg_logits);
    Tensor pre = cls_conv_.forward(cls_in);
    Tensor act = nn::relu(pre);

    const i64 n = act.dim(0), cc = act.dim(1), hw = act.dim(2) * act.dim(3);
    Tensor pooled({n, 2 * cc + 2});
    std::vector<i64> amax_conv(static_cast<size_t>(n * cc));
    std::vector<i64> amax_map(static_cast<size_t>(n));
    for (i64 b = 0; b < n; ++b) {
      for (i64 c = 0; c < cc; ++c) {
        const float* px = act.data() + (b * cc + c) * hw;
        double sum = 0.0;
        i64 arg = 0;
        for (i64 i = 0; i < hw; ++i) {
          sum += px[i];
          if (px[i] > px[arg]) arg = i;
        }
        pooled.at(b, c) = static_cast<float>(sum / static_cast<double>(hw));
        pooled.at(b, cc + c) = px[arg];
        amax_conv[static_cast<size_t>(b * cc + c)] = arg;
      }
      const float* mp = seg_logits.data() + b * hw;
      double sum = 0.0;
      i64 arg = 0;
      for (i64 i = 0; i < hw; ++i) {
        sum += mp[i];
        if (mp[i] > mp[arg]) arg = i;
      }
      pooled.at(b, 2 * cc) = static_cast<float>(sum / static_cast<double>(hw));
      pooled.at(b, 2 * cc + 1) = mp[arg];
      amax_map[static_cast<size_t>(b)] = arg;
    }
    Tensor scores2d = cls_fc_.forward(pooled);
    Tensor scores = scores2d.reshaped({n});
    if (cache) {
      cache->cls_in = std::move(cls_in);
      cache->cls_pre = std::move(pre);
      cache->pooled = std::move(pooled);
      cache->argmax_conv = std::move(amax_conv);
      cache->argmax_map = std::move(amax_map);
    }
    return scores;
  }

  // Training forward over a perturbed batch; keeps what backward needs.
  ForwardCache forward_train(Tensor perturbed) const {
    ForwardCache cache;
    cache.perturbed = std::move(perturbed);
    cache.seg_logits = segment(cache.perturbed, &cache.seg_pre);
    if (cfg_.cls_enabled) cache.scores = classify(cache.perturbed, cache.seg_logits, &cache);
    return cache;
  }

  // Inference forward: no duplication, no noise.
  InferOutput forward_infer(const Tensor& features) const {
    Tensor a = adapt(features);
    InferOutput out;
    out.seg_logits = segment(a);
    if (cfg_.cls_enabled) out.scores = classify(a, out.seg_logits);
    return out;
  }

  // Backward through heads and adaptor.
  //
  // dseg: dL/d seg_logits  [N,1,h,w]  (may be empty)
  // dscores: dL/d scores   [N]        (may be empty; requires cls head)
  // features: adaptor input [B,C,h,w] with N == B or N == 2B; gradients of
  // duplicated entries fold back onto their source.
  //
  // With stop_grad_to_seg the classification loss reaches only the
  // classification head's own parameters.
  void backward(const ForwardCache& cache, const Tensor& features, const Tensor& dseg,
                const Tensor& dscores, Gradients& g) const {
    const i64 n = cache.perturbed.dim(0), c = channels_;
    const i64 h = cache.perturbed.dim(2), w = cache.perturbed.dim(3);
    const i64 hw = h * w;
    const i64 bsz = features.dim(0);
    check_arg(n == bsz || n == 2 * bsz, "backward: batch mismatch");

    Tensor dmap({n, 1, h, w});
    if (!dseg.empty()) {
      check_arg(dseg.numel() == dmap.numel(), "backward: bad dseg");
      for (i64 i = 0; i < dmap.numel(); ++i) dmap[i] = dseg[i];
    }
    Tensor dp({n, c, h, w});

    if (!dscores.empty()) {
      check_arg(cfg_.cls_enabled, "backward: scores gradient without cls head");
      const i64 cc = cfg_.cls_conv_channels;
      Tensor dpooled({n, 2 * cc + 2});
      cls_fc_.backward(cache.pooled, dscores.reshaped({n, 1}), g.cls_fc_w, g.cls_fc_b, &dpooled);

      Tensor dact({n, cc, h, w});
      for (i64 b = 0; b < n; ++b) {
        for (i64 ch = 0; ch < cc; ++ch) {
          float* dpx = dact.data() + (b * cc + ch) * hw;
          const float davg = dpooled.at(b, ch) / static_cast<float>(hw);
          for (i64 i = 0; i < hw; ++i) dpx[i] += davg;
          dpx[cache.argmax_conv[static_cast<size_t>(b * cc + ch)]] += dpooled.at(b, cc + ch);
        }
      }
      nn::relu_backward_(cache.cls_pre, dact);
      if (cfg_.stop_grad_to_seg) {
        cls_conv_.backward(cache.cls_in, dact, g.cls_conv_w, g.cls_conv_b, nullptr);
      } else {
        Tensor dcls_in({n, c + 1, h, w});
        cls_conv_.backward(cache.cls_in, dact, g.cls_conv_w, g.cls_conv_b, &dcls_in);
        for (i64 b = 0; b < n; ++b) {
          // Split the concatenation gradient back into features and map.
          const float* src = dcls_in.data() + b * (c + 1) * hw;
          float* dpb = dp.data() + b * c * hw;
          for (i64 i = 0; i < c * hw; ++i) dpb[i] += src[i];
          float* dmb = dmap.data() + b * hw;
          for (i64 i = 0; i < hw; ++i) dmb[i] += src[c * hw + i];
          // Direct pooled-statistics paths of the map.
          const float davg = dpooled.at(b, 2 * cc) / static_cast<float>(hw);
          for (i64 i = 0; i < hw; ++i) dmb[i] += davg;
          dmb[cache.argmax_map[static_cast<size_t>(b)]] += dpooled.at(b, 2 * cc + 1);
        }
      }
    }

    // Segmentation head.
    Tensor act = nn::leaky_relu(cache.seg_pre, cfg_.leaky_slope);
    Tensor dact({n, cfg_.seg_hidden, h, w});
    seg2_.backward(act, dmap, g.seg2_w, g.seg2_b, &dact);
    nn::leaky_relu_backward_(cache.seg_pre, cfg_.leaky_slope, dact);
    seg1_.backward(cache.perturbed, dact, g.seg1_w, g.seg1_b, &dp);

    // Fold duplicated entries onto their sources, then the adaptor.
    Tensor da({bsz, c, h, w});
    for (i64 i = 0; i < n; ++i) {
      const i64 src = i % bsz;
      float* dst = da.data() + src * c * hw;
      const float* s = dp.data() + i * c * hw;
      for (i64 j = 0; j < c * hw; ++j) dst[j] += s[j];
    }
    adaptor_.backward(features, da, g.adaptor_w, g.adaptor_b, nullptr);
  }

  void apply_update(const std::function<void(Tensor&, const std::string&)>& fn) {
    visit_params([&](const std::string& name, Tensor& t) { fn(t, name); });
  }

  void visit_params(const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("adaptor.w", adaptor_.w);
    fn("adaptor.b", adaptor_.b);
    fn("seg.conv1.w", seg1_.w);
    fn("seg.conv1.b", seg1_.b);
    fn("seg.conv2.w", seg2_.w);
    fn("seg.conv2.b", seg2_.b);
    if (cfg_.cls_enabled) {
      fn("cls.conv.w", cls_conv_.w);
      fn("cls.conv.b", cls_conv_.b);
      fn("cls.fc.w", cls_fc_.w);
      fn("cls.fc.b", cls_fc_.b);
    }
  }

  // Parameter/gradient bindings for the optimizer, adaptor group first.
  struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
    bool adaptor_group;
  };

  std::vector<ParamRef> bind(Gradients& g) {
    std::vector<ParamRef> out = {{"adaptor.w", &adaptor_.w, &g.adaptor_w, true},
                                 {"adaptor.b", &adaptor_.b, &g.adaptor_b, true},
                                 {"seg.conv1.w", &seg1_.w, &g.seg1_w, false},
                                 {"seg.conv1.b", &seg1_.b, &g.seg1_b, false},
                                 {"seg.conv2.w", &seg2_.w, &g.seg2_w, false},
                                 {"seg.conv2.b", &seg2_.b, &g.seg2_b, false}};
    if (cfg_.cls_enabled) {
      out.push_back({"cls.conv.w", &cls_conv_.w, &g.cls_conv_w, false});
      out.push_back({"cls.conv.b", &cls_conv_.b, &g.cls_conv_b, false});
      out.push_back({"cls.fc.w", &cls_fc_.w, &g.cls_fc_w, false});
      out.push_back({"cls.fc.b", &cls_fc_.b, &g.cls_fc_b, false});
    }
    return out;
  }

  i64 param_count() {
    i64 ntotal = 0;
    visit_params([&](const std::string&, Tensor& t) { ntotal += t.numel(); });
    return ntotal;
  }

  static Tensor concat_channels(const Tensor& a, const Tensor& b) {
    check_arg(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
              "concat: shape mismatch");
    const i64 n = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
    Tensor out({n, ca + cb, a.dim(2), a.dim(3)});
    for (i64 i = 0; i < n; ++i) {
      std::copy(a.data() + i * ca * hw, a.data() + (i + 1) * ca * hw,
                out.data() + i * (ca + cb) * hw);
      std::copy(b.data() + i * cb * hw, b.data() + (i + 1) * cb * hw,
                out.data() + (i * (ca + cb) + ca) * hw);
    }
    return out;
  }

 private:
  HeadConfig cfg_;
  i64 channels_;
  nn::Conv2d adaptor_, seg1_, seg2_, cls_conv_;
  nn::Linear cls_fc_;
};

}  // namespace ssnet

#endif  // SSNET_NETWORK_HPP_
