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

#ifndef SSNET_CONFIG_HPP_
#define SSNET_CONFIG_HPP_

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ssnet/engine.hpp"

namespace ssnet::config {

// Dataset-dependent defaults; any explicit config value wins.
inline std::pair<i64, i64> default_resolution(const std::string& family,
                                              const std::string& category) {
  if (family == "ksdd2") return {232, 640};
  if (family == "sensum") {
    std::string c = category;
    std::transform(c.begin(), c.end(), c.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (c.find("caps") != std::string::npos) return {192, 320};
    if (c.find("soft") != std::string::npos) return {144, 144};
  }
  return {256, 256};
}

inline double default_perlin_threshold(const std::string& family) {
  return family == "mvtec_like" ? 0.2 : 0.6;
}

inline Supervision default_supervision(const std::string& family) {
  return family == "ksdd2" || family == "sensum" ? Supervision::kSupervised
                                                 : Supervision::kUnsupervised;
}

namespace detail {

// Section reader that tracks consumed keys so typos surface as errors
// instead of silently falling back to defaults.
class Keys {
 public:
  Keys(const nlohmann::ordered_json& j, std::string prefix)
      : j_(j), prefix_(std::move(prefix)) {
    check_arg(j.is_object(), cat("config: ", prefix_.empty() ? "top level" : prefix_,
                                 " must be an object"));
  }

  template <typename T>
  T get(const std::string& key, T def) {
    auto v = get_opt<T>(key);
    return v ? *v : def;
  }

  // Absent, null, or the string "auto" all mean "resolve from context".
  template <typename T>
  std::optional<T> get_opt(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
    if constexpr (!std::is_same_v<T, std::string>) {
      if (j_.at(key).is_string() && j_.at(key).get<std::string>() == "auto") return std::nullopt;
    }
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(cat("config: bad value for ", prefix_, key, ": ", e.what()));
    }
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      check_arg(seen_.count(k) > 0, cat("config: unknown key ", prefix_, k));
  }

 private:
  const nlohmann::ordered_json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

inline const nlohmann::ordered_json& section(const nlohmann::ordered_json& j,
                                             const std::string& name) {
  static const nlohmann::ordered_json kEmpty = nlohmann::ordered_json::object();
  return j.contains(name) && !j.at(name).is_null() ? j.at(name) : kEmpty;
}

}  // namespace detail

struct RunConfig {
  DatasetSpec dataset;
  bool resolution_explicit = false;
  BackboneSpec backbone;
  bool upscale = true;
  HeadConfig heads;
  NoiseConfig noise;
  LossConfig loss;
  engine::TrainConfig train;
  double eval_fpr_limit = 0.3;
  i64 eval_batch = 8;
  double smooth_sigma = engine::kSmoothSigma;
  i64 smooth_radius = engine::kSmoothRadius;
  bool export_overlays = false;
  std::vector<u64> seeds = {0};
  std::string output_dir = "runs/out";
  std::string device = "cpu";
};

// Fully resolved view, echoed into output directories and checkpoints so a
// run can be reproduced without the original file + overrides.
inline nlohmann::ordered_json effective_json(const RunConfig& rc) {
  nlohmann::ordered_json j;
  j["dataset"]["family"] = rc.dataset.family;
  j["dataset"]["root"] = rc.dataset.root;
  j["dataset"]["category"] = rc.dataset.category;
  j["dataset"]["resolution"] = {rc.dataset.height, rc.dataset.width};
  j["dataset"]["supervision"] =
      rc.dataset.supervision == Supervision::kSupervised ? "supervised" : "unsupervised";
  j["dataset"]["fold"] = rc.dataset.fold;
  j["dataset"]["n_folds"] = rc.dataset.n_folds;
  j["dataset"]["fold_file"] = rc.dataset.fold_file;
  j["backbone"]["name"] = rc.backbone.name;
  j["backbone"]["layers"] = rc.backbone.layers;
  j["backbone"]["weights"] = rc.backbone.weights;
  j["featurizer"]["upscale"] = rc.upscale;
  j["heads"]["seg_hidden"] = rc.heads.seg_hidden;
  j["heads"]["cls_conv_channels"] = rc.heads.cls_conv_channels;
  j["heads"]["cls_enabled"] = rc.heads.cls_enabled;
  j["heads"]["stop_grad_to_seg"] = rc.heads.stop_grad_to_seg;
  j["noise"]["gauss_mu"] = rc.noise.gauss_mu;
  j["noise"]["gauss_sigma"] = rc.noise.gauss_sigma;
  j["noise"]["perlin_threshold"] = rc.noise.perlin_threshold;
  j["noise"]["anomaly_probability"] = rc.noise.anomaly_probability;
  j["noise"]["duplicate_features"] = rc.noise.duplicate_features;
  j["noise"]["overlap_allowed"] = rc.noise.overlap_allowed;
  j["noise"]["synthetic_enabled"] = rc.noise.synthetic_enabled;
  j["noise"]["generator_style"] =
      rc.noise.style == GeneratorStyle::kSimplenetFullCopy ? "simplenet_full_copy"
                                                           : "perlin_masked";
  j["loss"]["th"] = rc.loss.th;
  j["loss"]["focal_gamma"] = rc.loss.focal_gamma;
  j["loss"]["focal_alpha"] = rc.loss.focal_alpha;
  j["loss"]["seg_focal_enabled"] = rc.loss.seg_focal_enabled;
  j["loss"]["clip_grad_norm"] = rc.loss.clip_grad_norm;
  j["train"]["epochs"] = rc.train.epochs;
  j["train"]["batch_size"] = rc.train.batch_size;
  j["train"]["lr_adaptor"] = rc.train.lr_adaptor;
  j["train"]["lr_heads"] = rc.train.lr_heads;
  j["train"]["weight_decay"] = rc.train.weight_decay;
  j["train"]["milestones"] = rc.train.milestones;
  j["train"]["scheduler_gamma"] = rc.train.scheduler_gamma;
  j["train"]["feature_cache_mb"] = rc.train.feature_cache_mb;
  j["eval"]["fpr_limit"] = rc.eval_fpr_limit;
  j["eval"]["batch"] = rc.eval_batch;
  j["eval"]["smooth_sigma"] = rc.smooth_sigma;
  j["eval"]["smooth_radius"] = rc.smooth_radius;
  j["export_overlays"] = rc.export_overlays;
  j["seeds"] = rc.seeds;
  j["output_dir"] = rc.output_dir;
  j["device"] = rc.device;
  return j;
}

inline RunConfig parse(const nlohmann::ordered_json& j) {
  RunConfig rc;
  {
    detail::Keys top(j, "");
    for (const char* k : {"dataset", "backbone", "featurizer", "heads", "noise", "loss", "train",
                          "eval", "seeds", "output_dir", "device", "export_overlays"})
      (void)top.get_opt<nlohmann::ordered_json>(k);
    top.finish();
  }
  {
    detail::Keys d(detail::section(j, "dataset"), "dataset.");
    rc.dataset.family = d.get<std::string>("family", "mvtec_like");
    rc.dataset.root = d.get<std::string>("root", "");
    rc.dataset.category = d.get<std::string>("category", "");
    auto res = d.get_opt<std::vector<i64>>("resolution");
    if (res) {
      check_arg(res->size() == 2 && (*res)[0] > 0 && (*res)[1] > 0,
                "config: dataset.resolution must be [height, width]");
      rc.dataset.height = (*res)[0];
      rc.dataset.width = (*res)[1];
      rc.resolution_explicit = true;
    } else {
      std::tie(rc.dataset.height, rc.dataset.width) =
          default_resolution(rc.dataset.family, rc.dataset.category);
    }
    auto sup = d.get_opt<std::string>("supervision");
    rc.dataset.supervision =
        sup ? supervision_from(*sup) : default_supervision(rc.dataset.family);
    rc.dataset.fold = d.get<int>("fold", 0);
    rc.dataset.n_folds = d.get<int>("n_folds", 3);
    rc.dataset.fold_file = d.get<std::string>("fold_file", "");
    d.finish();
  }
  {
    detail::Keys b(detail::section(j, "backbone"), "backbone.");
    rc.backbone.name = b.get<std::string>("name", "wide_resnet50_2");
    rc.backbone.layers = b.get<std::vector<int>>("layers", {2, 3});
    rc.backbone.weights = b.get<std::string>("weights", "random:0");
    b.finish();
  }
  {
    detail::Keys f(detail::section(j, "featurizer"), "featurizer.");
    rc.upscale = f.get<bool>("upscale", true);
    f.finish();
  }
  {
    detail::Keys h(detail::section(j, "heads"), "heads.");
    rc.heads.seg_hidden = h.get<i64>("seg_hidden", 1024);
    rc.heads.cls_conv_channels = h.get<i64>("cls_conv_channels", 128);
    rc.heads.cls_enabled = h.get<bool>("cls_enabled", true);
    auto sg = h.get_opt<bool>("stop_grad_to_seg");
    rc.heads.stop_grad_to_seg = sg ? *sg : rc.dataset.supervision == Supervision::kUnsupervised;
    h.finish();
  }
  {
    detail::Keys n(detail::section(j, "noise"), "noise.");
    rc.noise.gauss_mu = n.get<double>("gauss_mu", 0.0);
    rc.noise.gauss_sigma = n.get<double>("gauss_sigma", 0.015);
    rc.noise.perlin_threshold =
        n.get<double>("perlin_threshold", default_perlin_threshold(rc.dataset.family));
    rc.noise.anomaly_probability = n.get<double>("anomaly_probability", 0.5);
    rc.noise.duplicate_features = n.get<bool>("duplicate_features", true);
    rc.noise.overlap_allowed = n.get<bool>("overlap_allowed", false);
    rc.noise.synthetic_enabled = n.get<bool>("synthetic_enabled", true);
    rc.noise.style = generator_style_from(n.get<std::string>("generator_style", "perlin_masked"));
    n.finish();
  }
  {
    detail::Keys l(detail::section(j, "loss"), "loss.");
    rc.loss.th = l.get<double>("th", 0.5);
    rc.loss.focal_gamma = l.get<double>("focal_gamma", 2.0);
    rc.loss.focal_alpha = l.get<double>("focal_alpha", -1.0);
    rc.loss.seg_focal_enabled = l.get<bool>("seg_focal_enabled", true);
    auto clip = l.get_opt<double>("clip_grad_norm");
    rc.loss.clip_grad_norm =
        clip ? *clip : (rc.dataset.supervision == Supervision::kSupervised ? 1.0 : -1.0);
    l.finish();
  }
  {
    detail::Keys t(detail::section(j, "train"), "train.");
    rc.train.epochs = t.get<i64>("epochs", 300);
    rc.train.batch_size = t.get<i64>("batch_size", 32);
    rc.train.lr_adaptor = t.get<double>("lr_adaptor", 1e-4);
    rc.train.lr_heads = t.get<double>("lr_heads", 2e-4);
    rc.train.weight_decay = t.get<double>("weight_decay", 1e-5);
    rc.train.milestones = t.get<std::vector<i64>>("milestones", {240, 270});
    rc.train.scheduler_gamma = t.get<double>("scheduler_gamma", 0.4);
    rc.train.feature_cache_mb = t.get<i64>("feature_cache_mb", 1024);
    t.finish();
  }
  {
    detail::Keys e(detail::section(j, "eval"), "eval.");
    rc.eval_fpr_limit = e.get<double>("fpr_limit", 0.3);
    rc.eval_batch = e.get<i64>("batch", 8);
    rc.smooth_sigma = e.get<double>("smooth_sigma", engine::kSmoothSigma);
    rc.smooth_radius = e.get<i64>("smooth_radius", engine::kSmoothRadius);
    e.finish();
  }
  {
    detail::Keys top(j, "");
    rc.export_overlays = top.get<bool>("export_overlays", false);
    rc.seeds = top.get<std::vector<u64>>("seeds", {0});
    rc.output_dir = top.get<std::string>("output_dir", "runs/out");
    const char* env = std::getenv("SSNET_DEVICE");
    rc.device = top.get<std::string>("device", env ? env : "cpu");
  }

  check_arg(!rc.seeds.empty(), "config: seeds must not be empty");
  check_arg(rc.eval_fpr_limit > 0.0 && rc.eval_fpr_limit <= 1.0,
            "config: eval.fpr_limit must be in (0, 1]");
  check_arg(rc.eval_batch > 0, "config: eval.batch must be > 0");
  rc.train.validate();
  rc.noise.validate();
  rc.loss.validate();
  rc.heads.validate();
  return rc;
}

inline nlohmann::ordered_json load_file(const std::string& path) {
  std::ifstream is(path);
  check_arg(is.good(), cat("cannot open config file ", path));
  try {
    return nlohmann::ordered_json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    // e.what() carries line/column, e.g. "parse error at line 4, column 8".
    throw std::invalid_argument(cat(path, ": ", e.what()));
  }
}

// "a.b.c=value"; the value is parsed as JSON when possible, otherwise kept
// as a bare string, so --set train.epochs=2 and --set dataset.root=/data
// both work without quoting gymnastics.
inline void apply_override(nlohmann::ordered_json& j, const std::string& expr) {
  const auto eq = expr.find('=');
  check_arg(eq != std::string::npos && eq > 0,
            cat("override '", expr, "' must look like key.path=value"));
  const std::string path = expr.substr(0, eq);
  const std::string value = expr.substr(eq + 1);
  nlohmann::ordered_json parsed;
  try {
    parsed = nlohmann::ordered_json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;
  }
  nlohmann::ordered_json* node = &j;
  size_t at = 0;
  while (true) {
    const size_t dot = path.find('.', at);
    const std::string key =
        dot == std::string::npos ? path.substr(at) : path.substr(at, dot - at);
    check_arg(!key.empty(), cat("override '", expr, "': empty path segment"));
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      return;
    }
    node = &(*node)[key];
    check_arg(node->is_object() || node->is_null(),
              cat("override '", expr, "': ", path.substr(0, dot), " is not an object"));
    at = dot + 1;
  }
}

inline const std::vector<std::string>& ablation_presets() {
  static const std::vector<std::string> kNames = {
      "no_upscale", "no_cls", "no_cls_sn_anom", "old_train", "overlap", "sn_anom", "no_anom"};
  return kNames;
}

// Toggle sets reproducing the ablation variants; merged over the base
// config (RFC 7386 semantics), still overridable from the command line.
inline nlohmann::ordered_json ablation_patch(const std::string& preset) {
  using J = nlohmann::ordered_json;
  if (preset == "no_upscale") return J{{"featurizer", {{"upscale", false}}}};
  if (preset == "no_cls") return J{{"heads", {{"cls_enabled", false}}}};
  if (preset == "sn_anom") return J{{"noise", {{"generator_style", "simplenet_full_copy"}}}};
  if (preset == "no_cls_sn_anom")
    return J{{"heads", {{"cls_enabled", false}}},
             {"noise", {{"generator_style", "simplenet_full_copy"}}}};
  if (preset == "old_train")
    // Inverts the training upgrades: milestone scheduler, gradient
    // stopping, clipping, and the focal term of the segmentation loss.
    return J{{"train", {{"milestones", J::array()}}},
             {"heads", {{"stop_grad_to_seg", false}}},
             {"loss", {{"clip_grad_norm", -1.0}, {"seg_focal_enabled", false}}}};
  if (preset == "overlap") return J{{"noise", {{"overlap_allowed", true}}}};
  if (preset == "no_anom") return J{{"noise", {{"synthetic_enabled", false}}}};
  throw std::invalid_argument(cat("unknown ablation preset '", preset, "'; known: no_upscale, ",
                                  "no_cls, no_cls_sn_anom, old_train, overlap, sn_anom, no_anom"));
}

}  // namespace ssnet::config

#endif  // SSNET_CONFIG_HPP_
