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

#ifndef SSNET_FEATURIZER_HPP_
#define SSNET_FEATURIZER_HPP_

#include <memory>
#include <string>
#include <vector>

#include "ssnet/backbone.hpp"

namespace ssnet {

struct BackboneSpec {
  std::string name = "wide_resnet50_2";
  std::vector<int> layers = {2, 3};    // stage indices, strictly increasing
  std::string weights = "random:0";
};

struct FeatureBatch {
  Tensor data;      // [B,C,h,w]
  i64 stride = 0;   // image pixels per feature cell

  i64 batch() const { return data.dim(0); }
  i64 channels() const { return data.dim(1); }
  i64 height() const { return data.dim(2); }
  i64 width() const { return data.dim(3); }
};

// Frozen multi-scale feature extraction: backbone stages -> common grid ->
// channel concatenation -> 3x3 neighborhood mean.
class Featurizer {
 public:
  // load_weights=false leaves the backbone uninitialized, for callers that
  // restore parameters from a checkpoint instead of spec.weights.
  explicit Featurizer(const BackboneSpec& spec, bool upscale = true, bool load_weights = true)
      : spec_(spec), upscale_(upscale) {
    check_arg(!spec.layers.empty(), "featurizer: need at least one layer");
    for (size_t i = 1; i < spec.layers.size(); ++i)
      check_arg(spec.layers[i] > spec.layers[i - 1], "featurizer: layers must be increasing");
    backbone_ = make_backbone(spec.name, spec.layers.back());
    if (load_weights) load_backbone_weights(*backbone_, spec.weights);
  }

  const BackboneSpec& spec() const { return spec_; }
  Backbone& backbone() { return *backbone_; }
  bool upscale() const { return upscale_; }

  i64 out_channels() const {
    i64 c = 0;
    for (int l : spec_.layers) c += backbone_->stage_channels(l);
    return c;
  }

  // Stride of the merged grid relative to the input image.
  i64 out_stride() const {
    i64 s = backbone_->stage_stride(spec_.layers.front());
    return upscale_ ? s / 2 : s;
  }

  // Raw per-stage volumes, shallowest first.
  std::vector<FeatureBatch> extract(const Tensor& images) const {
    check_arg(images.rank() == 4 && images.dim(1) == 3, "extract: images must be [B,3,H,W]");
    i64 s0 = backbone_->stage_stride(spec_.layers.front());
    check_arg(images.dim(2) % s0 == 0 && images.dim(3) % s0 == 0,
              cat("extract: image dims must be divisible by ", s0));
    std::vector<Tensor> vols = backbone_->extract(images, spec_.layers);
    std::vector<FeatureBatch> out;
    for (size_t i = 0; i < vols.size(); ++i)
      out.push_back({std::move(vols[i]), backbone_->stage_stride(spec_.layers[i])});
    return out;
  }

  // All volumes are interpolated onto a common grid and concatenated along
  // channels. With upscaling the grid is twice the shallowest volume
  // (half its stride); without, the shallowest grid itself.
  FeatureBatch upscale_and_merge(const std::vector<FeatureBatch>& vols) const {
    check_arg(vols.size() >= 2, "upscale_and_merge: need at least two volumes");
    for (size_t i = 1; i < vols.size(); ++i)
      check_arg(vols[i].stride == 2 * vols[i - 1].stride,
                "upscale_and_merge: volumes must come from consecutive stages");
    const i64 bsz = vols[0].batch();
    i64 th = vols[0].height(), tw = vols[0].width(), ts = vols[0].stride;
    if (upscale_) {
      th *= 2;
      tw *= 2;
      ts /= 2;
    }
    i64 cs = 0;
    for (const auto& v : vols) cs += v.channels();
    FeatureBatch merged{Tensor({bsz, cs, th, tw}), ts};
    i64 coff = 0;
    for (const auto& v : vols) {
      check_arg(v.batch() == bsz, "upscale_and_merge: batch mismatch");
      Tensor r = nn::bilinear_resize(v.data, th, tw);
      const i64 c = v.channels();
      for (i64 n = 0; n < bsz; ++n)
        std::copy(r.data() + n * c * th * tw, r.data() + (n + 1) * c * th * tw,
                  merged.data.data() + (n * cs + coff) * th * tw);
      coff += c;
    }
    return merged;
  }

  // 3x3 mean with edge replication; smooths the merged map without
  // changing its resolution.
  static FeatureBatch neighborhood_pool(const FeatureBatch& f) {
    return {nn::mean3x3_replicate(f.data), f.stride};
  }

  // Full pipeline: extract -> merge -> pool.
  FeatureBatch featurize(const Tensor& images) const {
    std::vector<FeatureBatch> vols = extract(images);
    FeatureBatch merged;
    if (vols.size() == 1) {
      merged = std::move(vols[0]);
      if (upscale_) {
        const i64 th = merged.height() * 2, tw = merged.width() * 2;
        merged = {nn::bilinear_resize(merged.data, th, tw), merged.stride / 2};
      }
    } else {
      merged = upscale_and_merge(vols);
    }
    return neighborhood_pool(merged);
  }

 private:
  BackboneSpec spec_;
  bool upscale_;
  std::unique_ptr<Backbone> backbone_;
};

}  // namespace ssnet

#endif  // SSNET_FEATURIZER_HPP_
