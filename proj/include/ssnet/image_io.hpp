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

#ifndef SSNET_IMAGE_IO_HPP_
#define SSNET_IMAGE_IO_HPP_

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "ssnet/anomaly.hpp"
#include "ssnet/nn.hpp"
#include "ssnet/tensor.hpp"

namespace ssnet {

// Channel statistics of the pretraining corpus (RGB).
inline constexpr float kNormMean[3] = {0.485f, 0.456f, 0.406f};
inline constexpr float kNormStd[3] = {0.229f, 0.224f, 0.225f};

inline void normalize_(Tensor& chw) {
  const i64 hw = chw.dim(1) * chw.dim(2);
  for (i64 c = 0; c < 3; ++c) {
    float* p = chw.data() + c * hw;
    for (i64 i = 0; i < hw; ++i) p[i] = (p[i] - kNormMean[c]) / kNormStd[c];
  }
}

inline Tensor denormalize(const Tensor& chw) {
  Tensor out = chw;
  const i64 hw = chw.dim(1) * chw.dim(2);
  for (i64 c = 0; c < 3; ++c) {
    float* p = out.data() + c * hw;
    for (i64 i = 0; i < hw; ++i) p[i] = p[i] * kNormStd[c] + kNormMean[c];
  }
  return out;
}

// RGB image as [3,H,W] in [0,1], resized with half-pixel bilinear (matching
// the rest of the pipeline) and normalized.
inline Tensor load_image(const std::filesystem::path& path, i64 h, i64 w,
                         bool normalize = true) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  check_run(!bgr.empty(), cat("cannot read image ", path.string()));
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Tensor t({3, rgb.rows, rgb.cols});
  const i64 hw = static_cast<i64>(rgb.rows) * rgb.cols;
  for (int y = 0; y < rgb.rows; ++y) {
    const cv::Vec3b* row = rgb.ptr<cv::Vec3b>(y);
    for (int x = 0; x < rgb.cols; ++x) {
      const i64 p = static_cast<i64>(y) * rgb.cols + x;
      t[p] = row[x][0] / 255.0f;
      t[hw + p] = row[x][1] / 255.0f;
      t[2 * hw + p] = row[x][2] / 255.0f;
    }
  }
  if (t.dim(1) != h || t.dim(2) != w) {
    Tensor batched = t.reshaped({1, 3, t.dim(1), t.dim(2)});
    t = nn::bilinear_resize(batched, h, w).reshaped({3, h, w});
  }
  if (normalize) normalize_(t);
  return t;
}

// Binary mask as [H,W] of 0/1. Resizing uses any-overlap block reduction,
// which can only dilate, never lose, small defects.
inline Tensor load_mask(const std::filesystem::path& path, i64 h, i64 w) {
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  check_run(!gray.empty(), cat("cannot read mask ", path.string()));
  Tensor t({gray.rows, gray.cols});
  for (int y = 0; y < gray.rows; ++y)
    for (int x = 0; x < gray.cols; ++x)
      t.at(y, x) = gray.at<std::uint8_t>(y, x) > 127 ? 1.0f : 0.0f;
  if (t.dim(0) != h || t.dim(1) != w) t = downsample_gt(t, h, w);
  return t;
}

// [3,H,W] float in [0,1] -> 8-bit PNG.
inline void save_image_rgb(const std::filesystem::path& path, const Tensor& chw) {
  const i64 h = chw.dim(1), w = chw.dim(2), hw = h * w;
  cv::Mat bgr(static_cast<int>(h), static_cast<int>(w), CV_8UC3);
  for (i64 y = 0; y < h; ++y) {
    cv::Vec3b* row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
    for (i64 x = 0; x < w; ++x) {
      const i64 p = y * w + x;
      auto q = [&](i64 c) {
        return cv::saturate_cast<std::uint8_t>(std::lround(chw[c * hw + p] * 255.0f));
      };
      row[x] = cv::Vec3b(q(2), q(1), q(0));
    }
  }
  check_run(cv::imwrite(path.string(), bgr), cat("cannot write ", path.string()));
}

inline void save_mask(const std::filesystem::path& path, const Tensor& mask) {
  const i64 h = mask.dim(0), w = mask.dim(1);
  cv::Mat gray(static_cast<int>(h), static_cast<int>(w), CV_8UC1);
  for (i64 y = 0; y < h; ++y)
    for (i64 x = 0; x < w; ++x)
      gray.at<std::uint8_t>(static_cast<int>(y), static_cast<int>(x)) =
          mask.at(y, x) != 0.0f ? 255 : 0;
  check_run(cv::imwrite(path.string(), gray), cat("cannot write ", path.string()));
}

// Minimal .npy (format version 1.0) float32 writer/reader for rank-2
// arrays; byte-for-byte deterministic for fixed content.
inline void save_npy(const std::filesystem::path& path, const Tensor& t) {
  check_arg(t.rank() == 2, "save_npy: rank-2 tensors only");
  std::string dict = cat("{'descr': '<f4', 'fortran_order': False, 'shape': (", t.dim(0), ", ",
                         t.dim(1), "), }");
  size_t header = 10 + dict.size() + 1;
  size_t pad = (64 - header % 64) % 64;
  dict.append(pad, ' ');
  dict.push_back('\n');
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  check_run(os.good(), cat("cannot write ", path.string()));
  os.write("\x93NUMPY\x01\x00", 8);
  const std::uint16_t len = static_cast<std::uint16_t>(dict.size());
  os.write(reinterpret_cast<const char*>(&len), 2);
  os.write(dict.data(), static_cast<std::streamsize>(dict.size()));
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.numel() * sizeof(float)));
  check_run(os.good(), cat("write failed for ", path.string()));
}

inline Tensor load_npy(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  check_run(is.good(), cat("cannot open ", path.string()));
  char magic[8];
  is.read(magic, 8);
  check_run(is.good() && std::memcmp(magic, "\x93NUMPY", 6) == 0, "save_npy: bad magic");
  std::uint16_t len = 0;
  is.read(reinterpret_cast<char*>(&len), 2);
  std::string dict(len, '\0');
  is.read(dict.data(), len);
  auto pos = dict.find("'shape': (");
  check_run(pos != std::string::npos, "npy: no shape");
  i64 h = 0, w = 0;
  std::sscanf(dict.c_str() + pos, "'shape': (%lld, %lld)", reinterpret_cast<long long*>(&h),
              reinterpret_cast<long long*>(&w));
  check_run(h > 0 && w > 0, "npy: bad shape");
  Tensor t({h, w});
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.numel() * sizeof(float)));
  check_run(is.good(), "npy: truncated payload");
  return t;
}

// Input blended with a color-mapped anomaly map; the image score is printed
// in the corner. chw must be the normalized network input.
inline void save_overlay(const std::filesystem::path& path, const Tensor& chw, const Tensor& map,
                         double score) {
  Tensor rgb = denormalize(chw);
  const i64 h = map.dim(0), w = map.dim(1), hw = h * w;
  check_arg(rgb.dim(1) == h && rgb.dim(2) == w, "overlay: map/image dims differ");

  float lo = map[0], hi = map[0];
  for (i64 i = 0; i < map.numel(); ++i) {
    lo = std::min(lo, map[i]);
    hi = std::max(hi, map[i]);
  }
  const float range = hi - lo > 1e-12f ? hi - lo : 1.0f;

  cv::Mat heat_u8(static_cast<int>(h), static_cast<int>(w), CV_8UC1);
  cv::Mat base(static_cast<int>(h), static_cast<int>(w), CV_8UC3);
  for (i64 y = 0; y < h; ++y) {
    cv::Vec3b* row = base.ptr<cv::Vec3b>(static_cast<int>(y));
    for (i64 x = 0; x < w; ++x) {
      const i64 p = y * w + x;
      heat_u8.at<std::uint8_t>(static_cast<int>(y), static_cast<int>(x)) =
          cv::saturate_cast<std::uint8_t>(std::lround((map[p] - lo) / range * 255.0f));
      auto q = [&](i64 c) {
        return cv::saturate_cast<std::uint8_t>(std::lround(rgb[c * hw + p] * 255.0f));
      };
      row[x] = cv::Vec3b(q(2), q(1), q(0));
    }
  }
  cv::Mat heat;
  cv::applyColorMap(heat_u8, heat, cv::COLORMAP_JET);
  cv::Mat blend;
  cv::addWeighted(base, 0.5, heat, 0.5, 0.0, blend);
  char text[32];
  std::snprintf(text, sizeof(text), "%.3f", score);
  int baseline = 0;
  const cv::Size ts = cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, 0.45, 1, &baseline);
  cv::putText(blend, text, cv::Point(std::max(0, static_cast<int>(w) - ts.width - 4), 16),
              cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(255, 255, 255), 1, cv::LINE_AA);
  check_run(cv::imwrite(path.string(), blend), cat("cannot write ", path.string()));
}

}  // namespace ssnet

#endif  // SSNET_IMAGE_IO_HPP_
