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

#ifndef SSNET_BACKBONE_HPP_
#define SSNET_BACKBONE_HPP_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ssnet/archive.hpp"
#include "ssnet/nn.hpp"

namespace ssnet {

inline void add_(Tensor& x, const Tensor& y) {
  check_arg(x.numel() == y.numel(), "add_: size mismatch");
  for (i64 i = 0; i < x.numel(); ++i) x[i] += y[i];
}

// Frozen feature extractor: stages indexed 1..4 with strides 4/8/16/32.
// Batch norm layers are kept in inference form as per-channel affines.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual const std::string& name() const = 0;
  // Feature volumes for the requested stage indices, each [B,C,h,w].
  virtual std::vector<Tensor> extract(const Tensor& x, const std::vector<int>& layers) const = 0;
  virtual i64 stage_channels(int layer) const = 0;
  virtual int max_stage() const = 0;

  i64 stage_stride(int layer) const { return i64{4} << (layer - 1); }

  virtual void visit_params(const std::function<void(const std::string&, Tensor&)>& fn) = 0;

  i64 param_count() {
    i64 n = 0;
    visit_params([&](const std::string&, Tensor& t) { n += t.numel(); });
    return n;
  }

  // Deterministic fan-in-scaled init: convolutions He-normal, affines identity.
  void init_random(u64 seed) {
    Rng rng(splitmix64(seed ^ 0x5353424eull));
    visit_params([&](const std::string& name, Tensor& t) {
      if (name.ends_with(".scale")) {
        t.fill(1.0f);
      } else if (name.ends_with(".shift") || name.ends_with(".b")) {
        t.zero();
      } else {
        // Weight [cout, fan_in].
        double std_dev = std::sqrt(2.0 / static_cast<double>(t.dim(1)));
        for (i64 i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.normal(0.0, std_dev));
      }
    });
  }

  void load_from_archive(const Archive& a) {
    visit_params([&](const std::string& name, Tensor& t) {
      const Tensor& src = a.get(name);
      check_run(src.numel() == t.numel(), cat("backbone weights: shape mismatch for ", name));
      t = src.reshaped(t.shape());
    });
  }

  void save_to_archive(Archive& a, const std::string& prefix) {
    visit_params([&](const std::string& name, Tensor& t) { a.put(prefix + name, t); });
  }
};

namespace detail {

struct Bottleneck {
  nn::Conv2d c1, c2, c3, down;
  nn::ChannelAffine a1, a2, a3, adown;
  bool has_down = false;

  Bottleneck(i64 cin, i64 width, i64 cout, i64 stride) {
    c1 = nn::Conv2d(cin, width, 1, 1, 0, nn::Pad::kZero, /*bias=*/false);
    c2 = nn::Conv2d(width, width, 3, stride, 1, nn::Pad::kZero, false);
    c3 = nn::Conv2d(width, cout, 1, 1, 0, nn::Pad::kZero, false);
    a1 = nn::ChannelAffine(width);
    a2 = nn::ChannelAffine(width);
    a3 = nn::ChannelAffine(cout);
    has_down = (stride != 1 || cin != cout);
    if (has_down) {
      down = nn::Conv2d(cin, cout, 1, stride, 0, nn::Pad::kZero, false);
      adown = nn::ChannelAffine(cout);
    }
  }

  Tensor forward(const Tensor& x) const {
    Tensor out = c1.forward(x);
    a1.apply(out);
    nn::relu_(out);
    out = c2.forward(out);
    a2.apply(out);
    nn::relu_(out);
    out = c3.forward(out);
    a3.apply(out);
    if (has_down) {
      Tensor skip = down.forward(x);
      adown.apply(skip);
      add_(out, skip);
    } else {
      add_(out, x);
    }
    nn::relu_(out);
    return out;
  }

  void visit(const std::string& p, const std::function<void(const std::string&, Tensor&)>& fn) {
    fn(p + ".conv1.w", c1.w);
    fn(p + ".bn1.scale", a1.scale);
    fn(p + ".bn1.shift", a1.shift);
    fn(p + ".conv2.w", c2.w);
    fn(p + ".bn2.scale", a2.scale);
    fn(p + ".bn2.shift", a2.shift);
    fn(p + ".conv3.w", c3.w);
    fn(p + ".bn3.scale", a3.scale);
    fn(p + ".bn3.shift", a3.shift);
    if (has_down) {
      fn(p + ".down.conv.w", down.w);
      fn(p + ".down.bn.scale", adown.scale);
      fn(p + ".down.bn.shift", adown.shift);
    }
  }
};

}  // namespace detail

// Bottleneck residual network in the torchvision layout. Only the stages up
// to the deepest requested one are materialized.
class ResNetBackbone : public Backbone {
 public:
  // block_counts per stage; width_factor 2 gives the "wide" variant.
  ResNetBackbone(std::string name, std::vector<int> block_counts, i64 base_width, int max_layer)
      : name_(std::move(name)), max_stage_(max_layer) {
    check_arg(max_layer >= 1 && max_layer <= static_cast<int>(block_counts.size()),
              "resnet: bad max layer");
    stem_ = nn::Conv2d(3, 64, 7, 2, 3, nn::Pad::kZero, false);
    astem_ = nn::ChannelAffine(64);
    i64 cin = 64;
    for (int stage = 1; stage <= max_layer; ++stage) {
      i64 planes = i64{64} << (stage - 1);
      i64 width = planes * base_width / 64;
      i64 cout = planes * 4;
      std::vector<detail::Bottleneck> blocks;
      for (int b = 0; b < block_counts[static_cast<size_t>(stage - 1)]; ++b) {
        i64 stride = (b == 0 && stage > 1) ? 2 : 1;
        blocks.emplace_back(b == 0 ? cin : cout, width, cout, stride);
      }
      cin = cout;
      stages_.push_back(std::move(blocks));
    }
  }

  const std::string& name() const override { return name_; }
  int max_stage() const override { return max_stage_; }

  i64 stage_channels(int layer) const override {
    check_arg(layer >= 1 && layer <= max_stage_, "resnet: layer out of range");
    return (i64{64} << (layer - 1)) * 4;
  }

  std::vector<Tensor> extract(const Tensor& x, const std::vector<int>& layers) const override {
    Tensor h = stem_.forward(x);
    astem_.apply(h);
    nn::relu_(h);
    h = nn::maxpool3x3s2(h);
    std::vector<Tensor> out(layers.size());
    for (int stage = 1; stage <= max_stage_; ++stage) {
      for (const auto& blk : stages_[static_cast<size_t>(stage - 1)]) h = blk.forward(h);
      for (size_t i = 0; i < layers.size(); ++i)
        if (layers[i] == stage) out[i] = h;
      bool more = false;
      for (int l : layers) more = more || l > stage;
      if (!more) break;
    }
    return out;
  }

  void visit_params(const std::function<void(const std::string&, Tensor&)>& fn) override {
    fn("stem.conv.w", stem_.w);
    fn("stem.bn.scale", astem_.scale);
    fn("stem.bn.shift", astem_.shift);
    for (size_t s = 0; s < stages_.size(); ++s)
      for (size_t b = 0; b < stages_[s].size(); ++b)
        stages_[s][b].visit(cat("layer", s + 1, ".", b), fn);
  }

 private:
  std::string name_;
  int max_stage_;
  nn::Conv2d stem_;
  nn::ChannelAffine astem_;
  std::vector<std::vector<detail::Bottleneck>> stages_;
};

// Small plain CNN with the same stage contract; meant for smoke tests and
// the synthetic corpus, where a full pretrained network is overkill.
class TinyBackbone : public Backbone {
 public:
  explicit TinyBackbone(int max_layer) : max_stage_(max_layer) {
    auto conv = [](i64 cin, i64 cout, i64 stride) {
      return nn::Conv2d(cin, cout, 3, stride, 1, nn::Pad::kZero, true);
    };
    convs_ = {conv(3, 24, 2),  conv(24, 32, 2),            // stage 1, stride 4
              conv(32, 64, 2), conv(64, 64, 1),            // stage 2, stride 8
              conv(64, 128, 2), conv(128, 128, 1),         // stage 3, stride 16
              conv(128, 256, 2)};                          // stage 4, stride 32
  }

  const std::string& name() const override { return name_; }
  int max_stage() const override { return max_stage_; }

  i64 stage_channels(int layer) const override {
    check_arg(layer >= 1 && layer <= 4, "tinynet: layer out of range");
    const i64 ch[] = {32, 64, 128, 256};
    return ch[layer - 1];
  }

  std::vector<Tensor> extract(const Tensor& x, const std::vector<int>& layers) const override {
    // Stage boundaries in convs_: [0,2) [2,4) [4,6) [6,7).
    const size_t ends[] = {2, 4, 6, 7};
    Tensor h = x;
    std::vector<Tensor> out(layers.size());
    size_t i = 0;
    for (int stage = 1; stage <= max_stage_; ++stage) {
      for (; i < ends[stage - 1]; ++i) {
        h = convs_[i].forward(h);
        nn::relu_(h);
      }
      for (size_t j = 0; j < layers.size(); ++j)
        if (layers[j] == stage) out[j] = h;
      bool more = false;
      for (int l : layers) more = more || l > stage;
      if (!more) break;
    }
    return out;
  }

  void visit_params(const std::function<void(const std::string&, Tensor&)>& fn) override {
    for (size_t i = 0; i < convs_.size(); ++i) {
      fn(cat("conv", i, ".w"), convs_[i].w);
      fn(cat("conv", i, ".b"), convs_[i].b);
    }
  }

 private:
  std::string name_ = "tinynet";
  int max_stage_;
  std::vector<nn::Conv2d> convs_;
};

inline std::unique_ptr<Backbone> make_backbone(const std::string& name, int max_layer) {
  if (name == "wide_resnet50_2")
    return std::make_unique<ResNetBackbone>(name, std::vector<int>{3, 4, 6, 3}, 128, max_layer);
  if (name == "resnet50")
    return std::make_unique<ResNetBackbone>(name, std::vector<int>{3, 4, 6, 3}, 64, max_layer);
  if (name == "tinynet") return std::make_unique<TinyBackbone>(max_layer);
  throw std::invalid_argument(cat("unknown backbone '", name, "'"));
}

// weights: "random:<seed>" for a deterministic fan-in init, or
// "file:<path>" for a named-array archive (e.g. converted pretrained weights).
inline void load_backbone_weights(Backbone& bb, const std::string& weights) {
  if (weights.rfind("random:", 0) == 0) {
    bb.init_random(std::stoull(weights.substr(7)));
  } else if (weights.rfind("file:", 0) == 0) {
    Archive a = Archive::load(weights.substr(5));
    check_run(a.kind == "weights", "backbone weights: archive kind must be 'weights'");
    bb.load_from_archive(a);
  } else {
    throw std::invalid_argument(
        cat("backbone weights must be 'random:<seed>' or 'file:<path>', got '", weights, "'"));
  }
}

}  // namespace ssnet

#endif  // SSNET_BACKBONE_HPP_
