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

#ifndef SSNET_CLI_HPP_
#define SSNET_CLI_HPP_

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ssnet/config.hpp"
#include "ssnet/engine.hpp"

namespace ssnet::cli {

namespace fs = std::filesystem;

inline void check_device(const std::string& device) {
  check_arg(device == "cpu", cat("device '", device, "' unavailable (CPU-only build)"));
}

// file -> ablation preset -> --set overrides; later sources win.
inline nlohmann::ordered_json compose_config(const std::string& config_path,
                                             const std::string& preset,
                                             const std::vector<std::string>& sets) {
  nlohmann::ordered_json j =
      config_path.empty() ? nlohmann::ordered_json::object() : config::load_file(config_path);
  if (!preset.empty()) j.merge_patch(config::ablation_patch(preset));
  for (const std::string& s : sets) config::apply_override(j, s);
  return j;
}

// The single concrete category this run trains on; wildcards are only
// valid when the root holds exactly one category.
inline std::string resolve_train_category(const config::RunConfig& rc) {
  if (!rc.dataset.category.empty() && rc.dataset.category != "*") return rc.dataset.category;
  std::vector<std::string> cats = dataset_categories(rc.dataset);
  check_arg(cats.size() == 1,
            cat("train: dataset.category must name one category; root has ", cats.size()));
  return cats[0];
}

struct TrainOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string preset;  // set by the ablation command
};

inline std::vector<std::string> run_train(const TrainOpts& opt) {
  config::RunConfig rc = config::parse(compose_config(opt.config_path, opt.preset, opt.sets));
  check_device(rc.device);
  rc.dataset.category = resolve_train_category(rc);
  if (!rc.resolution_explicit)
    std::tie(rc.dataset.height, rc.dataset.width) =
        config::default_resolution(rc.dataset.family, rc.dataset.category);

  std::vector<std::string> checkpoints;
  for (u64 seed : rc.seeds) {
    engine::TrainJob job;
    job.dataset = rc.dataset;
    job.backbone = rc.backbone;
    job.upscale = rc.upscale;
    job.heads = rc.heads;
    job.noise = rc.noise;
    job.loss = rc.loss;
    job.train = rc.train;
    job.seed = seed;
    job.out_dir = (fs::path(rc.output_dir) / cat("seed_", seed)).string();
    job.config_echo = config::effective_json(rc);
    fs::create_directories(job.out_dir);
    {
      std::ofstream os(fs::path(job.out_dir) / "config.json");
      os << job.config_echo.dump(2) << "\n";
    }
    engine::TrainResult res = engine::train(job);
    std::cout << "seed " << seed << ": " << res.checkpoint_path
              << " (final loss " << res.final_loss << ")\n";
    checkpoints.push_back(res.checkpoint_path);
  }
  return checkpoints;
}

inline int cmd_train(const TrainOpts& opt) {
  run_train(opt);
  return 0;
}

struct LoadedModel {
  config::RunConfig rc;
  std::unique_ptr<Featurizer> feat;
  std::unique_ptr<Network> net;
  i64 epoch = 0;
};

inline LoadedModel load_model(const std::string& checkpoint_path,
                              const std::vector<std::string>& sets = {}) {
  check_arg(fs::exists(checkpoint_path), cat("missing checkpoint ", checkpoint_path));
  engine::Checkpoint ck = engine::load_checkpoint(checkpoint_path);
  nlohmann::ordered_json j = ck.config;
  for (const std::string& s : sets) config::apply_override(j, s);
  LoadedModel m;
  m.rc = config::parse(j);
  m.epoch = ck.epoch;
  m.feat = std::make_unique<Featurizer>(m.rc.backbone, m.rc.upscale, /*load_weights=*/false);
  m.net = std::make_unique<Network>(m.feat->out_channels(), m.rc.heads);
  engine::restore_params(ck.archive, *m.feat, *m.net);
  return m;
}

struct EvaluateOpts {
  std::vector<std::string> checkpoints;
  std::vector<std::string> sets;
  std::string out_dir;
  bool overlays = false;
};

namespace detail {

struct AggCell {
  std::vector<double> values;

  void add(const std::optional<double>& v) {
    if (v) values.push_back(*v);
  }
  bool defined() const { return !values.empty(); }
  std::pair<double, double> stat() const { return engine::detail::mean_std(values); }
};

struct AggRow {
  i64 n_images = 0;
  AggCell auroc, ap, pixel_ap, aupro;
};

inline void agg_put(nlohmann::ordered_json& j, const char* key, const AggCell& c) {
  if (c.defined()) {
    auto [m, s] = c.stat();
    j[cat(key, "_mean")] = m;
    j[cat(key, "_std")] = s;
  } else {
    j[cat(key, "_mean")] = nullptr;
    j[cat(key, "_std")] = nullptr;
  }
}

inline void agg_csv(std::string& line, const AggCell& c) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  if (c.defined()) {
    auto [m, s] = c.stat();
    line += "," + num(m) + "," + num(s);
  } else {
    line += ",,";
  }
}

}  // namespace detail

// Evaluates each checkpoint over every category of its dataset and
// aggregates per-category metrics over checkpoints as mean +- std.
inline int cmd_evaluate(const EvaluateOpts& opt) {
  check_arg(!opt.checkpoints.empty(), "evaluate: need at least one --checkpoint");
  check_arg(!opt.out_dir.empty(), "evaluate: need --out");
  fs::create_directories(opt.out_dir);

  nlohmann::ordered_json out_json;
  out_json["checkpoints"] = nlohmann::ordered_json::array();
  std::vector<std::string> category_order;
  std::map<std::string, detail::AggRow> agg;
  double fpr_limit = 0.3;

  for (size_t ci = 0; ci < opt.checkpoints.size(); ++ci) {
    LoadedModel m = load_model(opt.checkpoints[ci], opt.sets);
    check_device(m.rc.device);
    fpr_limit = m.rc.eval_fpr_limit;
    const bool overlays = opt.overlays || m.rc.export_overlays;

    std::vector<std::pair<std::string, EvalBundle>> bundles;
    for (const std::string& category : dataset_categories(m.rc.dataset)) {
      DatasetSpec spec = m.rc.dataset;
      spec.category = category;
      if (!m.rc.resolution_explicit)
        std::tie(spec.height, spec.width) =
            config::default_resolution(spec.family, category);
      DatasetIndex index = index_dataset(spec, category);
      check_arg(!index.test.empty(), cat("empty test split for category '", category, "'"));
      engine::EvalOptions eo;
      eo.fpr_limit = m.rc.eval_fpr_limit;
      eo.batch = m.rc.eval_batch;
      eo.smooth_sigma = m.rc.smooth_sigma;
      eo.smooth_radius = m.rc.smooth_radius;
      if (overlays) {
        eo.export_dir = (fs::path(opt.out_dir) / cat("ckpt_", ci)).string();
        eo.overlays = true;
      }
      bundles.emplace_back(category,
                           engine::evaluate_category(*m.feat, *m.net, spec, index.test, eo));
    }

    MetricsReport rep = report(bundles, m.rc.eval_fpr_limit);
    nlohmann::ordered_json entry;
    entry["path"] = opt.checkpoints[ci];
    entry["report"] = rep.to_json();
    out_json["checkpoints"].push_back(entry);

    for (const MetricsRow& row : rep.rows) {
      if (agg.find(row.category) == agg.end()) category_order.push_back(row.category);
      detail::AggRow& a = agg[row.category];
      a.n_images = row.n_images;
      a.auroc.add(row.image_auroc);
      a.ap.add(row.image_ap);
      a.pixel_ap.add(row.pixel_ap);
      a.aupro.add(row.aupro);
    }
    detail::AggRow& mean_row = agg["__mean__"];
    mean_row.n_images = rep.mean.n_images;
    mean_row.auroc.add(rep.mean.image_auroc);
    mean_row.ap.add(rep.mean.image_ap);
    mean_row.pixel_ap.add(rep.mean.pixel_ap);
    mean_row.aupro.add(rep.mean.aupro);
  }

  auto row_json = [&](const std::string& name, const detail::AggRow& a) {
    nlohmann::ordered_json j;
    j["category"] = name;
    j["n_images"] = a.n_images;
    j["n_checkpoints"] = opt.checkpoints.size();
    detail::agg_put(j, "image_auroc", a.auroc);
    detail::agg_put(j, "image_ap", a.ap);
    detail::agg_put(j, "pixel_ap", a.pixel_ap);
    detail::agg_put(j, "aupro", a.aupro);
    return j;
  };
  auto row_csv = [&](const std::string& name, const detail::AggRow& a) {
    std::string line = name + "," + std::to_string(a.n_images);
    detail::agg_csv(line, a.auroc);
    detail::agg_csv(line, a.ap);
    detail::agg_csv(line, a.pixel_ap);
    detail::agg_csv(line, a.aupro);
    return line + "\n";
  };

  out_json["aggregate"]["fpr_limit"] = fpr_limit;
  out_json["aggregate"]["rows"] = nlohmann::ordered_json::array();
  std::string csv =
      "category,n_images,image_auroc_mean,image_auroc_std,image_ap_mean,image_ap_std,"
      "pixel_ap_mean,pixel_ap_std,aupro_mean,aupro_std\n";
  for (const std::string& c : category_order) {
    out_json["aggregate"]["rows"].push_back(row_json(c, agg.at(c)));
    csv += row_csv(c, agg.at(c));
  }
  out_json["aggregate"]["mean"] = row_json("mean", agg.at("__mean__"));
  csv += row_csv("mean", agg.at("__mean__"));

  {
    std::ofstream os(fs::path(opt.out_dir) / "metrics.json");
    os << out_json.dump(2) << "\n";
  }
  {
    std::ofstream os(fs::path(opt.out_dir) / "metrics.csv");
    os << csv;
  }
  std::cout << out_json["aggregate"]["mean"].dump() << "\n";
  return 0;
}

struct PredictOpts {
  std::string checkpoint;
  std::string input;
  std::string out_dir;
  std::vector<std::string> sets;
  bool overlays = false;
};

// Maps (and optional overlays) at the original image resolution plus one
// scores CSV row per image; repeated runs are byte-identical.
inline int cmd_predict(const PredictOpts& opt) {
  check_arg(!opt.out_dir.empty(), "predict: need --out");
  LoadedModel m = load_model(opt.checkpoint, opt.sets);
  check_device(m.rc.device);

  std::vector<fs::path> inputs;
  check_arg(fs::exists(opt.input), cat("missing input ", opt.input));
  if (fs::is_directory(opt.input)) {
    for (const auto& e : fs::directory_iterator(opt.input))
      if (e.is_regular_file()) inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    check_arg(!inputs.empty(), cat("no files under ", opt.input));
  } else {
    inputs.push_back(opt.input);
  }

  fs::create_directories(opt.out_dir);
  std::string csv = "image,score\n";
  for (const fs::path& p : inputs) {
    cv::Mat probe = cv::imread(p.string(), cv::IMREAD_COLOR);
    check_run(!probe.empty(), cat("cannot read image ", p.string()));
    const i64 oh = probe.rows, ow = probe.cols;

    Tensor img = load_image(p, m.rc.dataset.height, m.rc.dataset.width);
    InferOutput out = m.net->forward_infer(
        m.feat->featurize(img.reshaped({1, 3, m.rc.dataset.height, m.rc.dataset.width})).data);
    Tensor map = engine::postprocess(out.seg_logits, oh, ow, m.rc.smooth_sigma,
                                     m.rc.smooth_radius)
                     .reshaped({oh, ow});
    double score;
    if (out.scores) {
      score = (*out.scores)[0];
    } else {
      score = map[0];
      for (i64 i = 1; i < map.numel(); ++i) score = std::max(score, static_cast<double>(map[i]));
    }
    const std::string stem = p.stem().string();
    save_npy(fs::path(opt.out_dir) / (stem + ".npy"), map);
    if (opt.overlays)
      save_overlay(fs::path(opt.out_dir) / (stem + "_overlay.png"), load_image(p, oh, ow), map,
                   score);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", score);
    csv += p.string() + "," + buf + "\n";
    std::cout << p.string() << " score " << score << "\n";
  }
  std::ofstream os(fs::path(opt.out_dir) / "scores.csv");
  os << csv;
  return 0;
}

struct BenchmarkOpts {
  std::string checkpoint;
  std::string device;  // empty = checkpoint config / env
  std::string out_file;
  engine::BenchmarkConfig bench;  // height/width overridden from checkpoint
};

inline int cmd_benchmark(const BenchmarkOpts& opt) {
  LoadedModel m = load_model(opt.checkpoint);
  check_device(opt.device.empty() ? m.rc.device : opt.device);
  engine::BenchmarkConfig cfg = opt.bench;
  cfg.height = m.rc.dataset.height;
  cfg.width = m.rc.dataset.width;
  engine::BenchmarkReport rep = engine::benchmark(*m.feat, *m.net, cfg);
  const std::string text = rep.to_json().dump(2);
  std::cout << text << "\n";
  if (!opt.out_file.empty()) {
    std::ofstream os(opt.out_file);
    os << text << "\n";
  }
  return 0;
}

struct MakeToyOpts {
  std::string out_dir;
  i64 n_normal = 200;
  i64 n_defect = 50;
  i64 height = 64;
  i64 width = 64;
  u64 seed = 0;
  std::string layout = "mvtec";
};

inline int cmd_make_toy(const MakeToyOpts& opt) {
  check_arg(!opt.out_dir.empty(), "make-toy: need --out");
  ToyCounts c = make_toy_corpus(opt.out_dir, opt.n_normal, opt.n_defect, opt.height, opt.width,
                                opt.seed, opt.layout);
  nlohmann::ordered_json j;
  j["out_dir"] = opt.out_dir;
  j["layout"] = opt.layout;
  j["train_normal"] = c.train_normal;
  j["train_anomalous"] = c.train_anomalous;
  j["test_normal"] = c.test_normal;
  j["test_anomalous"] = c.test_anomalous;
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct AblationOpts {
  std::string preset;
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;  // empty = <output_dir>/ablation_<preset>
};

// Applies the preset onto the base config, trains every seed, then
// evaluates all resulting checkpoints together.
inline int cmd_ablation(const AblationOpts& opt) {
  check_arg(!opt.preset.empty(), "ablation: need --preset");
  (void)config::ablation_patch(opt.preset);  // reject unknown names up front

  TrainOpts topt;
  topt.config_path = opt.config_path;
  topt.preset = opt.preset;
  topt.sets = opt.sets;
  {
    config::RunConfig rc =
        config::parse(compose_config(opt.config_path, opt.preset, opt.sets));
    const std::string out =
        opt.out_dir.empty() ? (fs::path(rc.output_dir) / cat("ablation_", opt.preset)).string()
                            : opt.out_dir;
    topt.sets.push_back(cat("output_dir=", out));
  }
  std::vector<std::string> checkpoints = run_train(topt);

  EvaluateOpts eopt;
  eopt.checkpoints = checkpoints;
  eopt.out_dir = (fs::path(checkpoints.front()).parent_path().parent_path() / "eval").string();
  return cmd_evaluate(eopt);
}

}  // namespace ssnet::cli

#endif  // SSNET_CLI_HPP_
