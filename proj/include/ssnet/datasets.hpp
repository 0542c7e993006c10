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

#ifndef SSNET_DATASETS_HPP_
#define SSNET_DATASETS_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ssnet/image_io.hpp"
#include "ssnet/rng.hpp"
#include "ssnet/tensor.hpp"

namespace ssnet {

namespace fs = std::filesystem;

enum class Supervision { kUnsupervised, kSupervised };

inline Supervision supervision_from(const std::string& s) {
  if (s == "unsupervised") return Supervision::kUnsupervised;
  if (s == "supervised") return Supervision::kSupervised;
  throw std::invalid_argument(cat("unknown supervision '", s, "'"));
}

struct DatasetSpec {
  std::string family;  // mvtec_like | visa_like | ksdd2 | sensum
  std::string root;
  std::string category;  // empty = every category under root
  i64 height = 256;
  i64 width = 256;
  Supervision supervision = Supervision::kUnsupervised;
  int fold = 0;             // sensum only
  int n_folds = 3;          // sensum only
  std::string fold_file;    // optional fixed fold membership (JSON)
};

struct Sample {
  std::string image_path;
  std::string mask_path;  // empty for normal samples
  std::string category;
  int label = 0;  // 1 = anomalous
};

struct DatasetIndex {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

namespace detail {

inline bool is_image_file(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e == ".png" || e == ".jpg" || e == ".jpeg" || e == ".bmp" || e == ".tif" ||
         e == ".tiff";
}

// Sorted listing; directory iteration order is unspecified.
inline std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::string> list_subdirs(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

inline bool mask_has_positive(const fs::path& p) {
  cv::Mat gray = cv::imread(p.string(), cv::IMREAD_GRAYSCALE);
  check_run(!gray.empty(), cat("cannot read mask ", p.string()));
  for (int y = 0; y < gray.rows; ++y)
    for (int x = 0; x < gray.cols; ++x)
      if (gray.at<std::uint8_t>(y, x) > 127) return true;
  return false;
}

inline u64 fnv1a(const std::string& s) {
  u64 h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// <category>/train/good, <category>/test/<kind>,
// <category>/ground_truth/<kind>/<stem>_mask.png
inline void index_mvtec_like(const fs::path& root, const std::string& category,
                             DatasetIndex* out) {
  const fs::path cdir = root / category;
  check_arg(fs::exists(cdir / "train" / "good"),
            cat("mvtec_like: missing ", (cdir / "train" / "good").string()));
  for (const auto& p : list_images(cdir / "train" / "good"))
    out->train.push_back({p.string(), "", category, 0});
  for (const std::string& kind : list_subdirs(cdir / "test")) {
    for (const auto& p : list_images(cdir / "test" / kind)) {
      Sample s{p.string(), "", category, kind == "good" ? 0 : 1};
      if (s.label == 1) {
        fs::path m = cdir / "ground_truth" / kind / (p.stem().string() + "_mask.png");
        check_arg(fs::exists(m), cat("mvtec_like: missing mask ", m.string()));
        s.mask_path = m.string();
      }
      out->test.push_back(s);
    }
  }
}

// split_csv/1cls.csv with columns object,split,label,image,mask; paths are
// relative to the dataset root and labels are "normal"/"anomaly".
inline void index_visa_like(const fs::path& root, const std::string& category,
                            DatasetIndex* out) {
  const fs::path csv = root / "split_csv" / "1cls.csv";
  std::ifstream is(csv);
  check_arg(is.good(), cat("visa_like: cannot open ", csv.string()));
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> col;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) col.push_back(cell);
    check_arg(col.size() >= 4, cat("visa_like: malformed row '", line, "'"));
    if (col[0] != category) continue;
    Sample s;
    s.category = col[0];
    s.label = col[2] == "anomaly" ? 1 : 0;
    s.image_path = (root / col[3]).string();
    if (s.label == 1) {
      check_arg(col.size() >= 5 && !col[4].empty(),
                cat("visa_like: anomalous row without mask: '", line, "'"));
      s.mask_path = (root / col[4]).string();
    }
    check_arg(fs::exists(s.image_path), cat("visa_like: missing image ", s.image_path));
    (col[1] == "train" ? out->train : out->test).push_back(s);
  }
}

// Flat train/ and test/ directories; every image has a sibling
// <stem>_GT mask, all-black for normal samples.
inline void index_ksdd2(const fs::path& root, DatasetIndex* out) {
  check_arg(fs::exists(root / "train"), cat("ksdd2: missing ", (root / "train").string()));
  for (const char* split : {"train", "test"}) {
    auto& dst = std::string(split) == "train" ? out->train : out->test;
    for (const auto& p : list_images(root / split)) {
      const std::string stem = p.stem().string();
      if (stem.size() >= 3 && stem.substr(stem.size() - 3) == "_GT") continue;
      fs::path m = p.parent_path() / (stem + "_GT" + p.extension().string());
      check_arg(fs::exists(m), cat("ksdd2: missing mask ", m.string()));
      Sample s{p.string(), "", "ksdd2", 0};
      if (mask_has_positive(m)) {
        s.label = 1;
        s.mask_path = m.string();
      }
      dst.push_back(s);
    }
  }
}

struct SensumFile {
  fs::path image;
  fs::path mask;  // empty for good
  int label;
};

inline void index_sensum(const fs::path& root, const std::string& category,
                         const DatasetSpec& spec, DatasetIndex* out) {
  const fs::path cdir = root / category;
  check_arg(fs::exists(cdir / "good" / "data"),
            cat("sensum: missing ", (cdir / "good" / "data").string()));
  std::vector<SensumFile> files;
  for (const auto& p : list_images(cdir / "good" / "data")) files.push_back({p, {}, 0});
  for (const auto& p : list_images(cdir / "defective" / "data")) {
    fs::path m = cdir / "defective" / "annotation" / p.filename();
    check_arg(fs::exists(m), cat("sensum: missing annotation ", m.string()));
    files.push_back({p, m, 1});
  }
  check_arg(spec.fold >= 0 && spec.fold < spec.n_folds,
            cat("sensum: fold ", spec.fold, " out of range [0,", spec.n_folds, ")"));

  std::map<std::string, int> fold_by_name;
  if (!spec.fold_file.empty()) {
    std::ifstream is(spec.fold_file);
    check_arg(is.good(), cat("sensum: cannot open fold file ", spec.fold_file));
    nlohmann::json j = nlohmann::json::parse(is);
    const auto& folds = j.at("folds");
    check_arg(static_cast<int>(folds.size()) == spec.n_folds,
              cat("sensum: fold file has ", folds.size(), " folds, expected ", spec.n_folds));
    for (int f = 0; f < spec.n_folds; ++f)
      for (const auto& name : folds[f]) fold_by_name[name.get<std::string>()] = f;
  } else {
    // Deterministic partition: every filename ordered by a stable hash,
    // folds filled round-robin, so sizes differ by at most one and the
    // assignment is independent of directory listing order.
    std::vector<std::string> names;
    for (const auto& f : files) names.push_back(f.image.filename().string());
    std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
      return std::make_pair(fnv1a(a), a) < std::make_pair(fnv1a(b), b);
    });
    for (size_t i = 0; i < names.size(); ++i)
      fold_by_name[names[i]] = static_cast<int>(i % spec.n_folds);
  }

  for (const auto& f : files) {
    auto it = fold_by_name.find(f.image.filename().string());
    check_arg(it != fold_by_name.end(),
              cat("sensum: ", f.image.filename().string(), " missing from fold assignment"));
    Sample s{f.image.string(), f.mask.empty() ? "" : f.mask.string(), category, f.label};
    (it->second == spec.fold ? out->test : out->train).push_back(s);
  }
}

}  // namespace detail

inline std::vector<std::string> dataset_categories(const DatasetSpec& spec) {
  check_arg(fs::exists(spec.root), cat("dataset root not found: ", spec.root));
  if (!spec.category.empty() && spec.category != "*") return {spec.category};
  if (spec.family == "ksdd2") return {"ksdd2"};
  if (spec.family == "visa_like") {
    const fs::path csv = fs::path(spec.root) / "split_csv" / "1cls.csv";
    std::ifstream is(csv);
    check_arg(is.good(), cat("visa_like: cannot open ", csv.string()));
    std::set<std::string> cats;
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      auto comma = line.find(',');
      if (comma != std::string::npos && comma > 0) cats.insert(line.substr(0, comma));
    }
    return {cats.begin(), cats.end()};
  }
  std::vector<std::string> dirs = detail::list_subdirs(spec.root);
  std::vector<std::string> cats;
  for (const auto& d : dirs)
    if (d != "split_csv") cats.push_back(d);
  check_arg(!cats.empty(), cat("no categories under ", spec.root));
  return cats;
}

// Enumerates one category; pixel data stays on disk. In unsupervised mode
// anomalous training samples are dropped (their labels are off limits).
inline DatasetIndex index_dataset(const DatasetSpec& spec, const std::string& category) {
  check_arg(fs::exists(spec.root), cat("dataset root not found: ", spec.root));
  DatasetIndex out;
  if (spec.family == "mvtec_like") {
    detail::index_mvtec_like(spec.root, category, &out);
  } else if (spec.family == "visa_like") {
    detail::index_visa_like(spec.root, category, &out);
  } else if (spec.family == "ksdd2") {
    detail::index_ksdd2(spec.root, &out);
  } else if (spec.family == "sensum") {
    detail::index_sensum(spec.root, category, spec, &out);
  } else {
    throw std::invalid_argument(cat("unknown dataset family '", spec.family, "'"));
  }
  if (spec.supervision == Supervision::kUnsupervised) {
    std::erase_if(out.train, [](const Sample& s) { return s.label != 0; });
  }
  check_arg(!out.train.empty(), cat("empty train split for category '", category, "'"));
  return out;
}

struct LoadedSample {
  Tensor image;  // [3,H,W], normalized
  Tensor mask;   // [H,W] 0/1, all zero for normal samples
  int label = 0;
};

inline LoadedSample load_sample(const DatasetSpec& spec, const Sample& s) {
  LoadedSample out;
  out.image = load_image(s.image_path, spec.height, spec.width);
  out.label = s.label;
  if (!s.mask_path.empty()) {
    out.mask = load_mask(s.mask_path, spec.height, spec.width);
    if (mask_area(out.mask) == 0) out.label = 0;  // annotation file, no positive pixels
  } else {
    out.mask = Tensor::zeros({spec.height, spec.width});
  }
  return out;
}

// flip code: bit0 horizontal, bit1 vertical.
inline Tensor flip_hw(const Tensor& t, int code) {
  if (code == 0) return t;
  const bool fh = code & 1, fv = code & 2;
  Tensor out(t.shape());
  const i64 h = t.dim(t.rank() - 2), w = t.dim(t.rank() - 1);
  const i64 planes = t.numel() / (h * w);
  for (i64 p = 0; p < planes; ++p) {
    const float* src = t.data() + p * h * w;
    float* dst = out.data() + p * h * w;
    for (i64 y = 0; y < h; ++y) {
      const i64 sy = fv ? h - 1 - y : y;
      for (i64 x = 0; x < w; ++x) dst[y * w + x] = src[sy * w + (fh ? w - 1 - x : x)];
    }
  }
  return out;
}

struct BatchPlan {
  struct Entry {
    i64 sample;    // index into the train split
    int flip = 0;  // augmentation code
  };
  std::vector<std::vector<Entry>> batches;
};

// Unsupervised epochs shuffle normals into fixed-size batches. Supervised
// epochs balance each batch: floor(B/2) anomalous + ceil(B/2) normal, the
// majority side consumed without replacement (reshuffled when exhausted),
// the minority side drawn with replacement; anomalous entries get random
// flips so repeats are not byte-identical.
inline BatchPlan plan_epoch(const std::vector<Sample>& train, i64 batch_size,
                            Supervision supervision, Rng& rng) {
  check_arg(batch_size > 0, "batch_size must be positive");
  BatchPlan plan;
  if (supervision == Supervision::kUnsupervised) {
    std::vector<i64> order(train.size());
    for (size_t i = 0; i < train.size(); ++i) order[i] = static_cast<i64>(i);
    rng.shuffle(order);
    for (size_t at = 0; at < order.size(); at += static_cast<size_t>(batch_size)) {
      std::vector<BatchPlan::Entry> b;
      for (size_t i = at; i < std::min(order.size(), at + static_cast<size_t>(batch_size)); ++i)
        b.push_back({order[i], 0});
      plan.batches.push_back(std::move(b));
    }
    return plan;
  }

  std::vector<i64> normal, anom;
  for (size_t i = 0; i < train.size(); ++i)
    (train[i].label == 0 ? normal : anom).push_back(static_cast<i64>(i));
  check_arg(!normal.empty() && !anom.empty(),
            "supervised batches need both normal and anomalous train samples");
  const i64 n_anom = batch_size / 2, n_norm = batch_size - n_anom;
  const bool anom_major = anom.size() >= normal.size();
  std::vector<i64>& major = anom_major ? anom : normal;
  std::vector<i64>& minor = anom_major ? normal : anom;
  const i64 per_batch_major = anom_major ? n_anom : n_norm;
  const i64 per_batch_minor = anom_major ? n_norm : n_anom;
  const i64 n_batches =
      std::max<i64>(1, (static_cast<i64>(major.size()) + per_batch_major - 1) / per_batch_major);

  rng.shuffle(major);
  size_t cursor = 0;
  for (i64 bi = 0; bi < n_batches; ++bi) {
    std::vector<BatchPlan::Entry> b;
    for (i64 k = 0; k < per_batch_major; ++k) {
      if (cursor == major.size()) {
        rng.shuffle(major);
        cursor = 0;
      }
      b.push_back({major[cursor++], 0});
    }
    for (i64 k = 0; k < per_batch_minor; ++k)
      b.push_back({minor[rng.uniform_int(static_cast<u64>(minor.size()))], 0});
    for (auto& e : b)
      if (train[static_cast<size_t>(e.sample)].label == 1)
        e.flip = static_cast<int>(rng.uniform_int(4));
    plan.batches.push_back(std::move(b));
  }
  return plan;
}

struct ToyCounts {
  i64 train_normal = 0;
  i64 train_anomalous = 0;
  i64 test_normal = 0;
  i64 test_anomalous = 0;
};

namespace detail {

struct ToyPainter {
  i64 h, w;
  Rng& rng;

  Tensor background() {
    Tensor img({3, h, w});
    // One nominal surface across the corpus: inspection runs image the same
    // product under the same lighting, so per-image brightness varies only
    // slightly. Texture phases below still make every image distinct.
    float base[3];
    for (int c = 0; c < 3; ++c) base[c] = 0.44f + 0.08f * static_cast<float>(rng.uniform());
    const float a1 = 0.03f + 0.02f * static_cast<float>(rng.uniform());
    const float a2 = 0.03f + 0.02f * static_cast<float>(rng.uniform());
    const float fx = 2.0f + 4.0f * static_cast<float>(rng.uniform());
    const float fy = 2.0f + 4.0f * static_cast<float>(rng.uniform());
    const float p1 = static_cast<float>(rng.uniform() * 6.2831853);
    const float p2 = static_cast<float>(rng.uniform() * 6.2831853);
    for (i64 y = 0; y < h; ++y)
      for (i64 x = 0; x < w; ++x) {
        const float u = static_cast<float>(x) / static_cast<float>(w);
        const float v = static_cast<float>(y) / static_cast<float>(h);
        const float tex = a1 * std::sin(6.2831853f * fx * u + p1) +
                          a2 * std::sin(6.2831853f * fy * v + p2) +
                          0.015f * static_cast<float>(rng.uniform() - 0.5);
        for (i64 c = 0; c < 3; ++c)
          img[c * h * w + y * w + x] = std::clamp(base[c] + tex, 0.0f, 1.0f);
      }
    return img;
  }

  // Per-defect micro-texture: a fine oriented grating at frequencies the
  // sinusoidal background never contains. Damaged surfaces carry their own
  // texture (score marks, corrosion pitting), and a coherent pattern moves
  // the whole region's features in one consistent direction instead of
  // cancelling out like per-pixel noise.
  double gu = 0, gv = 0, gphase = 0, gamp = 0;

  void new_grating() {
    const double freq = 10.0 + 10.0 * rng.uniform();  // 3-6 px period
    const double ang = rng.uniform() * 6.2831853;
    gu = freq * std::cos(ang);
    gv = freq * std::sin(ang);
    gphase = rng.uniform() * 6.2831853;
    gamp = 0.15 + 0.1 * rng.uniform();
  }

  void stamp(Tensor* img, Tensor* mask, i64 cy, i64 cx, double r, const float color[3]) {
    const i64 y0 = std::max<i64>(0, cy - static_cast<i64>(r) - 1);
    const i64 y1 = std::min(h - 1, cy + static_cast<i64>(r) + 1);
    const i64 x0 = std::max<i64>(0, cx - static_cast<i64>(r) - 1);
    const i64 x1 = std::min(w - 1, cx + static_cast<i64>(r) + 1);
    for (i64 y = y0; y <= y1; ++y)
      for (i64 x = x0; x <= x1; ++x) {
        const double dy = static_cast<double>(y - cy), dx = static_cast<double>(x - cx);
        if (dy * dy + dx * dx > r * r) continue;
        const double u = static_cast<double>(x) / static_cast<double>(w);
        const double v = static_cast<double>(y) / static_cast<double>(h);
        const float tex = static_cast<float>(
            gamp * std::sin(6.2831853 * (gu * u + gv * v) + gphase) +
            rng.uniform(-0.05, 0.05));
        for (i64 c = 0; c < 3; ++c)
          (*img)[c * h * w + y * w + x] = std::clamp(color[c] + tex, 0.0f, 1.0f);
        mask->at(y, x) = 1.0f;
      }
  }

  // Defects are sized and contrasted to survive map smoothing: compact
  // blobs and thick scratches, far from the mid-grey background band.
  // One compact region per image. Region area has to dominate the halo the
  // stride-4 map resolution smears around it, or pixel-precise metrics
  // saturate on upsampling blur instead of model quality.
  Tensor paint_defects(Tensor* img) {
    Tensor mask = Tensor::zeros({h, w});
    // Defect polarity opposes the background so every region has contrast;
    // a bright blotch on a bright part would be invisible to any detector.
    double lum = 0;
    for (i64 i = 0; i < h * w; ++i) lum += (*img)[h * w + i];  // green channel
    const bool bg_bright = lum / static_cast<double>(h * w) > 0.5;
    new_grating();
    float color[3];
    const bool dark = bg_bright || rng.bernoulli(0.35);
    for (int c = 0; c < 3; ++c)
      color[c] = dark ? 0.05f + 0.2f * static_cast<float>(rng.uniform())
                      : 0.75f + 0.2f * static_cast<float>(rng.uniform());
    if (rng.bernoulli(0.5)) {
      const double r = 8.0 + 6.0 * rng.uniform();
      const i64 cy = static_cast<i64>(r) + 2 +
                     static_cast<i64>(rng.uniform_int(static_cast<u64>(
                         std::max<i64>(1, h - 2 * (static_cast<i64>(r) + 2)))));
      const i64 cx = static_cast<i64>(r) + 2 +
                     static_cast<i64>(rng.uniform_int(static_cast<u64>(
                         std::max<i64>(1, w - 2 * (static_cast<i64>(r) + 2)))));
      stamp(img, &mask, cy, cx, r, color);
    } else {
      const double thick = 6.0 + 2.0 * rng.uniform();
      const double len = 10.0 + 8.0 * rng.uniform();
      const double ang = rng.uniform() * 6.2831853;
      const double margin = len / 2 + thick + 2;
      const double cy = margin + rng.uniform() * std::max(1.0, h - 2 * margin);
      const double cx = margin + rng.uniform() * std::max(1.0, w - 2 * margin);
      const int steps = static_cast<int>(len);
      for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps - 0.5;
        stamp(img, &mask, static_cast<i64>(cy + t * len * std::sin(ang)),
              static_cast<i64>(cx + t * len * std::cos(ang)), thick, color);
      }
    }
    return mask;
  }
};

}  // namespace detail

// Self-contained corpus for experiments without external data. "mvtec"
// layout builds <out>/toy/{train,test,ground_truth}; "ksdd2" layout builds
// flat train/ and test/ with _GT masks (anomalous samples in train too,
// for supervised runs).
inline ToyCounts make_toy_corpus(const std::string& out_dir, i64 n_normal, i64 n_defect, i64 h,
                                 i64 w, u64 seed, const std::string& layout = "mvtec") {
  check_arg(n_normal > 0 && n_defect > 0, "toy corpus needs positive sample counts");
  check_arg(layout == "mvtec" || layout == "ksdd2", cat("unknown toy layout '", layout, "'"));
  Rng rng(seed);
  detail::ToyPainter painter{h, w, rng};
  ToyCounts counts;
  char name[64];

  if (layout == "mvtec") {
    const fs::path base = fs::path(out_dir) / "toy";
    fs::create_directories(base / "train" / "good");
    fs::create_directories(base / "test" / "good");
    fs::create_directories(base / "test" / "defect");
    fs::create_directories(base / "ground_truth" / "defect");
    for (i64 i = 0; i < n_normal; ++i) {
      std::snprintf(name, sizeof(name), "%03lld.png", static_cast<long long>(i));
      save_image_rgb(base / "train" / "good" / name, painter.background());
      ++counts.train_normal;
    }
    for (i64 i = 0; i < n_defect; ++i) {
      std::snprintf(name, sizeof(name), "%03lld.png", static_cast<long long>(i));
      save_image_rgb(base / "test" / "good" / name, painter.background());
      ++counts.test_normal;
      Tensor img = painter.background();
      Tensor mask = painter.paint_defects(&img);
      save_image_rgb(base / "test" / "defect" / name, img);
      std::snprintf(name, sizeof(name), "%03lld_mask.png", static_cast<long long>(i));
      save_mask(base / "ground_truth" / "defect" / name, mask);
      ++counts.test_anomalous;
    }
    return counts;
  }

  const fs::path base = fs::path(out_dir);
  fs::create_directories(base / "train");
  fs::create_directories(base / "test");
  auto emit = [&](const fs::path& dir, i64 id, bool defective) {
    std::snprintf(name, sizeof(name), "%05lld.png", static_cast<long long>(id));
    Tensor img = painter.background();
    Tensor mask = defective ? painter.paint_defects(&img) : Tensor::zeros({h, w});
    save_image_rgb(dir / name, img);
    std::snprintf(name, sizeof(name), "%05lld_GT.png", static_cast<long long>(id));
    save_mask(dir / name, mask);
  };
  i64 id = 0;
  for (i64 i = 0; i < n_normal; ++i, ++id) emit(base / "train", id, false), ++counts.train_normal;
  for (i64 i = 0; i < n_defect; ++i, ++id)
    emit(base / "train", id, true), ++counts.train_anomalous;
  for (i64 i = 0; i < n_defect; ++i, ++id) emit(base / "test", id, false), ++counts.test_normal;
  for (i64 i = 0; i < n_defect; ++i, ++id)
    emit(base / "test", id, true), ++counts.test_anomalous;
  return counts;
}

}  // namespace ssnet

#endif  // SSNET_DATASETS_HPP_
