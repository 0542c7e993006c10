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

#ifndef SSNET_METRICS_HPP_
#define SSNET_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssnet/tensor.hpp"

namespace ssnet {

// Mann-Whitney AUC: probability a positive outranks a negative, ties
// counted half. Computed from average ranks, O(n log n).
inline double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_arg(scores.size() == labels.size() && !scores.empty(), "auroc: bad inputs");
  i64 npos = 0;
  for (int l : labels) npos += l ? 1 : 0;
  const i64 n = static_cast<i64>(scores.size());
  const i64 nneg = n - npos;
  check_arg(npos > 0 && nneg > 0, "auroc: need both classes");

  std::vector<i64> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](i64 a, i64 b) { return scores[static_cast<size_t>(a)] < scores[static_cast<size_t>(b)]; });

  double rank_sum_pos = 0.0;
  i64 i = 0;
  while (i < n) {
    i64 j = i;
    while (j < n && scores[static_cast<size_t>(order[j])] == scores[static_cast<size_t>(order[i])]) ++j;
    // Average rank for the tie group [i, j), 1-based ranks.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (i64 k = i; k < j; ++k)
      if (labels[static_cast<size_t>(order[k])]) rank_sum_pos += avg_rank;
    i = j;
  }
  const double npos_d = static_cast<double>(npos);
  return (rank_sum_pos - npos_d * (npos_d + 1.0) / 2.0) / (npos_d * static_cast<double>(nneg));
}

// Step-wise PR integral: sum over descending distinct thresholds of
// precision times the recall increment.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_arg(scores.size() == labels.size() && !scores.empty(), "average_precision: bad inputs");
  i64 total_pos = 0;
  for (int l : labels) total_pos += l ? 1 : 0;
  check_arg(total_pos > 0, "average_precision: need at least one positive");

  std::vector<i64> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](i64 a, i64 b) { return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)]; });

  double ap = 0.0;
  double prev_recall = 0.0;
  i64 tp = 0, seen = 0;
  const i64 n = static_cast<i64>(scores.size());
  i64 i = 0;
  while (i < n) {
    i64 j = i;
    while (j < n && scores[static_cast<size_t>(order[j])] == scores[static_cast<size_t>(order[i])]) ++j;
    for (i64 k = i; k < j; ++k) {
      ++seen;
      tp += labels[static_cast<size_t>(order[k])] ? 1 : 0;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

// Area under the per-region-overlap vs. FPR curve, up to fpr_limit and
// normalized by it. Maps and binary ground-truth masks are paired per
// image; regions are 8-connected components; every distinct map value is a
// threshold (ties handled jointly), binarization is "value >= t".
inline double aupro(const std::vector<Tensor>& maps, const std::vector<Tensor>& gts,
                    double fpr_limit = 0.3) {
  check_arg(maps.size() == gts.size() && !maps.empty(), "aupro: need paired maps and masks");
  check_arg(fpr_limit > 0.0 && fpr_limit <= 1.0, "aupro: fpr_limit must be in (0, 1]");

  // Global region labeling; region_of[pixel] = -1 for background.
  struct PixelRef {
    float value;
    i64 region;  // -1 = negative
  };
  std::vector<PixelRef> pixels;
  std::vector<i64> region_area;
  i64 negatives = 0;

  for (size_t im = 0; im < maps.size(); ++im) {
    const Tensor& map = maps[im];
    const Tensor& gt = gts[im];
    check_arg(map.rank() == 2 && gt.same_shape(map), "aupro: map/mask shape mismatch");
    const i64 h = map.dim(0), w = map.dim(1);
    std::vector<i64> labels(static_cast<size_t>(h * w), -1);
    std::vector<i64> stack;
    for (i64 y = 0; y < h; ++y) {
      for (i64 x = 0; x < w; ++x) {
        if (gt.at(y, x) == 0.0f || labels[static_cast<size_t>(y * w + x)] >= 0) continue;
        const i64 rid = static_cast<i64>(region_area.size());
        region_area.push_back(0);
        stack.assign(1, y * w + x);
        labels[static_cast<size_t>(y * w + x)] = rid;
        while (!stack.empty()) {
          const i64 p = stack.back();
          stack.pop_back();
          ++region_area[static_cast<size_t>(rid)];
          const i64 cy = p / w, cx = p % w;
          for (i64 dy = -1; dy <= 1; ++dy)
            for (i64 dx = -1; dx <= 1; ++dx) {
              const i64 ny = cy + dy, nx = cx + dx;
              if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
              const size_t q = static_cast<size_t>(ny * w + nx);
              if (gt[static_cast<i64>(q)] != 0.0f && labels[q] < 0) {
                labels[q] = rid;
                stack.push_back(ny * w + nx);
              }
            }
        }
      }
    }
    for (i64 p = 0; p < h * w; ++p) {
      const i64 r = labels[static_cast<size_t>(p)];
      if (r < 0) ++negatives;
      pixels.push_back({map[p], r});
    }
  }
  check_arg(!region_area.empty(), "aupro: ground truth contains no regions");
  check_arg(negatives > 0, "aupro: ground truth contains no negative pixels");

  std::sort(pixels.begin(), pixels.end(),
            [](const PixelRef& a, const PixelRef& b) { return a.value > b.value; });

  // Descending sweep; each distinct value closes one curve point.
  const double nregions = static_cast<double>(region_area.size());
  std::vector<double> hit(region_area.size(), 0.0);
  double pro_sum = 0.0;  // sum over regions of covered fraction
  i64 fp = 0;
  double prev_fpr = 0.0, prev_pro = 0.0, area = 0.0;
  bool done = false;

  size_t i = 0;
  while (i < pixels.size() && !done) {
    size_t j = i;
    while (j < pixels.size() && pixels[j].value == pixels[i].value) ++j;
    for (size_t k = i; k < j; ++k) {
      if (pixels[k].region < 0)
        ++fp;
      else
        pro_sum += 1.0 / static_cast<double>(region_area[static_cast<size_t>(pixels[k].region)]);
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    const double pro = pro_sum / nregions;
    if (fpr >= fpr_limit) {
      // Interpolate the final point at the limit.
      const double t = (fpr_limit - prev_fpr) / (fpr - prev_fpr);
      const double pro_c = prev_pro + t * (pro - prev_pro);
      area += 0.5 * (prev_pro + pro_c) * (fpr_limit - prev_fpr);
      done = true;
    } else {
      area += 0.5 * (prev_pro + pro) * (fpr - prev_fpr);
      prev_fpr = fpr;
      prev_pro = pro;
    }
    i = j;
  }
  return area / fpr_limit;
}

// Scores/labels per image plus maps/masks per pixel, for one category.
struct EvalBundle {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<Tensor> maps;      // post-processed, image resolution
  std::vector<Tensor> gt_masks;  // binary, image resolution
};

struct MetricsRow {
  std::string category;
  i64 n_images = 0;
  std::optional<double> image_auroc;
  std::optional<double> image_ap;
  std::optional<double> pixel_ap;
  std::optional<double> aupro;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;  // categories in listing order
  MetricsRow mean;               // unweighted mean over categories

  nlohmann::ordered_json to_json() const {
    auto row_json = [](const MetricsRow& r) {
      nlohmann::ordered_json j;
      j["category"] = r.category;
      j["n_images"] = r.n_images;
      auto put = [&](const char* k, const std::optional<double>& v) {
        if (v)
          j[k] = *v;
        else
          j[k] = nullptr;
      };
      put("image_auroc", r.image_auroc);
      put("image_ap", r.image_ap);
      put("pixel_ap", r.pixel_ap);
      put("aupro", r.aupro);
      return j;
    };
    nlohmann::ordered_json j;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) j["rows"].push_back(row_json(r));
    j["mean"] = row_json(mean);
    return j;
  }

  std::string to_csv() const {
    auto fmt = [](const std::optional<double>& v) {
      if (!v) return std::string();
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", *v);
      return std::string(buf);
    };
    std::string out = "category,n_images,image_auroc,image_ap,pixel_ap,aupro\n";
    auto line = [&](const MetricsRow& r) {
      out += cat(r.category, ",", r.n_images, ",", fmt(r.image_auroc), ",", fmt(r.image_ap), ",",
                 fmt(r.pixel_ap), ",", fmt(r.aupro), "\n");
    };
    for (const auto& r : rows) line(r);
    line(mean);
    return out;
  }
};

// Per-category metric rows plus an unweighted mean row. Metrics that are
// undefined for a bundle (single-class labels, empty ground truth) are left
// unset rather than failing the whole report.
inline MetricsReport report(const std::vector<std::pair<std::string, EvalBundle>>& bundles,
                            double fpr_limit = 0.3) {
  check_arg(!bundles.empty(), "report: no bundles");
  MetricsReport rep;
  for (const auto& [name, b] : bundles) {
    MetricsRow row;
    row.category = name;
    row.n_images = static_cast<i64>(b.scores.size());
    bool has_pos = false, has_neg = false;
    for (int l : b.labels) (l ? has_pos : has_neg) = true;
    if (has_pos && has_neg) {
      row.image_auroc = auroc(b.scores, b.labels);
      row.image_ap = average_precision(b.scores, b.labels);
    }
    bool any_gt = false;
    for (const Tensor& m : b.gt_masks)
      for (i64 i = 0; i < m.numel() && !any_gt; ++i) any_gt = m[i] != 0.0f;
    if (any_gt && !b.maps.empty()) {
      std::vector<double> pix_scores;
      std::vector<int> pix_labels;
      for (size_t im = 0; im < b.maps.size(); ++im) {
        for (i64 i = 0; i < b.maps[im].numel(); ++i) {
          pix_scores.push_back(b.maps[im][i]);
          pix_labels.push_back(b.gt_masks[im][i] != 0.0f ? 1 : 0);
        }
      }
      row.pixel_ap = average_precision(pix_scores, pix_labels);
      row.aupro = aupro(b.maps, b.gt_masks, fpr_limit);
    }
    rep.rows.push_back(std::move(row));
  }

  rep.mean.category = "mean";
  auto mean_of = [&](const std::function<std::optional<double>(const MetricsRow&)>& get)
      -> std::optional<double> {
    double sum = 0.0;
    i64 n = 0;
    for (const auto& r : rep.rows)
      if (auto v = get(r)) {
        sum += *v;
        ++n;
      }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  for (const auto& r : rep.rows) rep.mean.n_images += r.n_images;
  rep.mean.image_auroc = mean_of([](const MetricsRow& r) { return r.image_auroc; });
  rep.mean.image_ap = mean_of([](const MetricsRow& r) { return r.image_ap; });
  rep.mean.pixel_ap = mean_of([](const MetricsRow& r) { return r.pixel_ap; });
  rep.mean.aupro = mean_of([](const MetricsRow& r) { return r.aupro; });
  return rep;
}

}  // namespace ssnet

#endif  // SSNET_METRICS_HPP_
