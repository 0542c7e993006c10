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

#ifndef SSNET_ENGINE_HPP_
#define SSNET_ENGINE_HPP_

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssnet/anomaly.hpp"
#include "ssnet/datasets.hpp"
#include "ssnet/featurizer.hpp"
#include "ssnet/losses.hpp"
#include "ssnet/metrics.hpp"
#include "ssnet/network.hpp"

namespace ssnet::engine {

struct TrainConfig {
  i64 epochs = 300;
  i64 batch_size = 32;
  double lr_adaptor = 1e-4;
  double lr_heads = 2e-4;
  double weight_decay = 1e-5;
  std::vector<i64> milestones = {240, 270};
  double scheduler_gamma = 0.4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  i64 feature_cache_mb = 1024;

  void validate() const {
    check_arg(epochs > 0, "train: epochs must be > 0");
    check_arg(batch_size > 0, "train: batch_size must be > 0");
    check_arg(lr_adaptor > 0.0 && lr_heads > 0.0, "train: learning rates must be > 0");
    check_arg(scheduler_gamma > 0.0, "train: scheduler_gamma must be > 0");
    check_arg(weight_decay >= 0.0, "train: weight_decay must be >= 0");
    for (size_t i = 1; i < milestones.size(); ++i)
      check_arg(milestones[i] > milestones[i - 1], "train: milestones must be increasing");
  }
};

// Stepwise decay: the base rate is multiplied by gamma once per milestone
// already reached. Epochs are 0-based, so milestones [240, 270] leave
// epochs 0..239 at the base rate.
inline double lr_scale_at(const std::vector<i64>& milestones, double gamma, i64 epoch) {
  int hits = 0;
  for (i64 m : milestones)
    if (m <= epoch) ++hits;
  return std::pow(gamma, hits);
}

// Decoupled weight decay Adam over the bound parameter list; the adaptor
// group and the head group run at separate learning rates. Moment state is
// keyed by parameter name, so rebinding is harmless.
class AdamW {
 public:
  explicit AdamW(const TrainConfig& cfg)
      : beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.adam_eps), wd_(cfg.weight_decay) {}

  void step(const std::vector<Network::ParamRef>& params, double lr_adaptor, double lr_heads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const auto& p : params) {
      Slot& s = slots_[p.name];
      if (s.m.empty()) {
        s.m = Tensor(p.value->shape());
        s.v = Tensor(p.value->shape());
      }
      const double lr = p.adaptor_group ? lr_adaptor : lr_heads;
      Tensor& w = *p.value;
      const Tensor& g = *p.grad;
      for (i64 i = 0; i < w.numel(); ++i) {
        const double gi = g[i];
        const double m = beta1_ * s.m[i] + (1.0 - beta1_) * gi;
        const double v = beta2_ * s.v[i] + (1.0 - beta2_) * gi * gi;
        s.m[i] = static_cast<float>(m);
        s.v[i] = static_cast<float>(v);
        const double update = (m / bc1) / (std::sqrt(v / bc2) + eps_) + wd_ * w[i];
        w[i] = static_cast<float>(w[i] - lr * update);
      }
    }
  }

  i64 steps() const { return t_; }

 private:
  struct Slot {
    Tensor m, v;
  };
  double beta1_, beta2_, eps_, wd_;
  i64 t_ = 0;
  std::unordered_map<std::string, Slot> slots_;
};

// Anomaly maps at image resolution: bilinear upsample of the cell logits
// followed by Gaussian smoothing.
inline constexpr double kSmoothSigma = 4.0;
inline constexpr i64 kSmoothRadius = 16;  // 4 * sigma

inline Tensor postprocess(const Tensor& seg_logits, i64 height, i64 width,
                          double sigma = kSmoothSigma, i64 radius = kSmoothRadius) {
  Tensor up = nn::bilinear_resize(seg_logits, height, width);
  return sigma > 0.0 ? nn::gaussian_blur(up, sigma, radius) : up;
}

inline double peak_rss_mb() {
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  return static_cast<double>(ru.ru_maxrss) / 1024.0;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline void save_checkpoint(const std::filesystem::path& path, Featurizer& feat, Network& net,
                            const nlohmann::ordered_json& config, i64 epoch) {
  Archive a;
  a.kind = "checkpoint";
  a.meta["epoch"] = epoch;
  a.meta["config"] = config;
  feat.backbone().save_to_archive(a, "backbone.");
  net.visit_params([&](const std::string& name, Tensor& t) { a.put("net." + name, t); });
  a.save(path);
}

struct Checkpoint {
  Archive archive;
  nlohmann::ordered_json config;
  i64 epoch = 0;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Checkpoint ck;
  ck.archive = Archive::load(path);
  check_run(ck.archive.kind == "checkpoint",
            cat(path.string(), ": archive kind '", ck.archive.kind, "', expected 'checkpoint'"));
  ck.epoch = ck.archive.meta.value("epoch", 0);
  check_run(ck.archive.meta.contains("config"), cat(path.string(), ": no config in checkpoint"));
  ck.config = ck.archive.meta.at("config");
  return ck;
}

inline void restore_params(const Archive& a, Featurizer& feat, Network& net) {
  feat.backbone().visit_params([&](const std::string& name, Tensor& t) {
    t = a.get("backbone." + name).reshaped(t.shape());
  });
  net.visit_params(
      [&](const std::string& name, Tensor& t) { t = a.get("net." + name).reshaped(t.shape()); });
}

// ---------------------------------------------------------------------------
// Training

struct TrainJob {
  DatasetSpec dataset;  // one concrete category
  BackboneSpec backbone;
  bool upscale = true;
  HeadConfig heads;
  NoiseConfig noise;
  LossConfig loss;
  TrainConfig train;
  u64 seed = 0;
  std::string out_dir;
  nlohmann::ordered_json config_echo;  // embedded in the checkpoint
};

struct TrainResult {
  std::string checkpoint_path;
  std::string log_path;
  i64 epochs = 0;
  double final_loss = 0.0;
};

namespace detail {

// Features (and feature-resolution gt masks) per (sample, flip), capped by
// a byte budget; past the cap entries are recomputed on demand.
class FeatureCache {
 public:
  explicit FeatureCache(i64 budget_mb) : budget_floats_(budget_mb * 1024 * 1024 / 4) {}

  const std::pair<Tensor, Tensor>* find(u64 key) const {
    auto it = map_.find(key);
    return it == map_.end() ? nullptr : &it->second;
  }

  const std::pair<Tensor, Tensor>* insert(u64 key, Tensor features, Tensor mask) {
    if (used_ + features.numel() + mask.numel() > budget_floats_) return nullptr;
    used_ += features.numel() + mask.numel();
    auto [it, ok] = map_.emplace(key, std::make_pair(std::move(features), std::move(mask)));
    return &it->second;
  }

 private:
  i64 budget_floats_;
  i64 used_ = 0;
  std::unordered_map<u64, std::pair<Tensor, Tensor>> map_;
};

}  // namespace detail

inline TrainResult train(const TrainJob& job) {
  job.train.validate();
  job.noise.validate();
  job.loss.validate();
  check_arg(!job.dataset.category.empty() && job.dataset.category != "*",
            "train: dataset.category must name one category");

  namespace fs = std::filesystem;
  fs::create_directories(job.out_dir);

  DatasetIndex index = index_dataset(job.dataset, job.dataset.category);
  Featurizer feat(job.backbone, job.upscale);
  check_arg(job.dataset.height % feat.out_stride() == 0 &&
                job.dataset.width % feat.out_stride() == 0,
            cat("train: resolution ", job.dataset.height, "x", job.dataset.width,
                " not divisible by feature stride ", feat.out_stride()));
  const i64 fh = job.dataset.height / feat.out_stride();
  const i64 fw = job.dataset.width / feat.out_stride();
  const i64 channels = feat.out_channels();

  Network net(channels, job.heads);
  net.init(job.seed);
  Gradients grads = net.make_gradients();
  std::vector<Network::ParamRef> params = net.bind(grads);
  AdamW opt(job.train);

  Rng root(job.seed);
  detail::FeatureCache cache(job.train.feature_cache_mb);

  const fs::path log_path = fs::path(job.out_dir) / "train_log.jsonl";
  std::ofstream log(log_path, std::ios::trunc);
  check_run(log.good(), cat("cannot write ", log_path.string()));

  // Features of one training entry, computed through a frozen backbone so
  // they are reusable across epochs.
  auto fetch = [&](i64 sample_idx, int flip) -> std::pair<Tensor, Tensor> {
    const u64 key = static_cast<u64>(sample_idx) * 4 + static_cast<u64>(flip);
    if (const auto* hit = cache.find(key)) return *hit;
    LoadedSample ls = load_sample(job.dataset, index.train[static_cast<size_t>(sample_idx)]);
    Tensor img = flip_hw(ls.image, flip).reshaped({1, 3, job.dataset.height, job.dataset.width});
    Tensor f = feat.featurize(img).data.reshaped({channels, fh, fw});
    Tensor m = downsample_gt(flip_hw(ls.mask, flip), fh, fw);
    if (const auto* ins = cache.insert(key, f, m)) return *ins;
    return {std::move(f), std::move(m)};
  };

  TrainResult result;
  result.log_path = log_path.string();

  for (i64 epoch = 0; epoch < job.train.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double scale = lr_scale_at(job.train.milestones, job.train.scheduler_gamma, epoch);
    const double lr_a = job.train.lr_adaptor * scale;
    const double lr_h = job.train.lr_heads * scale;

    Rng plan_rng = root.child(static_cast<u64>(epoch) + 1, 0, 1);
    BatchPlan plan = plan_epoch(index.train, job.train.batch_size, job.dataset.supervision,
                                plan_rng);

    LossBreakdown epoch_loss;
    i64 n_batches = 0;
    for (size_t bi = 0; bi < plan.batches.size(); ++bi) {
      const auto& entries = plan.batches[bi];
      const i64 n = static_cast<i64>(entries.size());
      Tensor features({n, channels, fh, fw});
      std::vector<Tensor> gts(static_cast<size_t>(n));
      for (i64 i = 0; i < n; ++i) {
        auto [f, m] = fetch(entries[static_cast<size_t>(i)].sample,
                            entries[static_cast<size_t>(i)].flip);
        std::copy(f.data(), f.data() + f.numel(), features.data() + i * channels * fh * fw);
        gts[static_cast<size_t>(i)] = std::move(m);
      }

      Tensor adapted = net.adapt(features);
      Rng batch_rng = root.child(static_cast<u64>(epoch) + 1, static_cast<u64>(bi) + 1, 2);
      PerturbResult pr =
          perturb(FeatureBatch{std::move(adapted), feat.out_stride()}, gts, job.noise, batch_rng);

      ForwardCache fwd = net.forward_train(pr.perturbed.data);
      const i64 nb = pr.perturbed.batch();
      Tensor seg_targets({nb, 1, fh, fw});
      Tensor score_targets({nb});
      for (i64 i = 0; i < nb; ++i) {
        const Tensor& m = pr.masks[static_cast<size_t>(i)].combined;
        std::copy(m.data(), m.data() + m.numel(), seg_targets.data() + i * fh * fw);
        score_targets[i] = static_cast<float>(pr.labels[static_cast<size_t>(i)]);
      }

      Tensor dseg(fwd.seg_logits.shape());
      Tensor dscores;
      const bool cls = job.heads.cls_enabled;
      if (cls) dscores = Tensor({nb});
      LossBreakdown lb =
          total_loss(fwd.seg_logits, seg_targets, cls ? &fwd.scores : nullptr,
                     cls ? &score_targets : nullptr, job.loss, &dseg, cls ? &dscores : nullptr);
      check_run(std::isfinite(lb.total),
                cat("non-finite loss at epoch ", epoch, ", batch ", bi, " (seed ", job.seed, ")"));

      grads.zero();
      net.backward(fwd, features, dseg, dscores, grads);
      if (job.loss.clip_grad_norm > 0.0) {
        std::vector<Tensor*> gs;
        for (const auto& p : params) gs.push_back(p.grad);
        clip_gradients(gs, job.loss.clip_grad_norm);
      }
      opt.step(params, lr_a, lr_h);

      epoch_loss.total += lb.total;
      epoch_loss.seg += lb.seg;
      epoch_loss.cls += lb.cls;
      epoch_loss.seg_trunc += lb.seg_trunc;
      epoch_loss.seg_focal += lb.seg_focal;
      ++n_batches;
    }

    const double inv = n_batches > 0 ? 1.0 / static_cast<double>(n_batches) : 0.0;
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::ordered_json line;
    line["epoch"] = epoch;
    line["lr_adaptor"] = lr_a;
    line["lr_heads"] = lr_h;
    line["loss"] = epoch_loss.total * inv;
    line["seg"] = epoch_loss.seg * inv;
    line["cls"] = epoch_loss.cls * inv;
    line["seg_trunc"] = epoch_loss.seg_trunc * inv;
    line["seg_focal"] = epoch_loss.seg_focal * inv;
    line["seconds"] = seconds;
    log << line.dump() << "\n";
    log.flush();
    result.final_loss = epoch_loss.total * inv;
  }

  const fs::path ck_path = fs::path(job.out_dir) / "checkpoint.ssna";
  save_checkpoint(ck_path, feat, net, job.config_echo, job.train.epochs);
  result.checkpoint_path = ck_path.string();
  result.epochs = job.train.epochs;
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalOptions {
  double fpr_limit = 0.3;
  i64 batch = 8;
  double smooth_sigma = kSmoothSigma;
  i64 smooth_radius = kSmoothRadius;
  std::string export_dir;  // empty = nothing written
  bool overlays = false;
};

// Runs the test split of one category and collects scores, smoothed maps
// and ground truth for the metric suite. Without the classification head
// the image score falls back to the maximum of the smoothed map.
inline EvalBundle evaluate_category(Featurizer& feat, Network& net, const DatasetSpec& spec,
                                    const std::vector<Sample>& test, const EvalOptions& opt) {
  namespace fs = std::filesystem;
  EvalBundle bundle;
  if (!opt.export_dir.empty()) {
    fs::create_directories(fs::path(opt.export_dir) / "maps");
    if (opt.overlays) fs::create_directories(fs::path(opt.export_dir) / "overlays");
  }
  for (size_t at = 0; at < test.size(); at += static_cast<size_t>(opt.batch)) {
    const size_t end = std::min(test.size(), at + static_cast<size_t>(opt.batch));
    const i64 n = static_cast<i64>(end - at);
    Tensor images({n, 3, spec.height, spec.width});
    std::vector<Tensor> gts(static_cast<size_t>(n));
    std::vector<int> labels(static_cast<size_t>(n));
    for (i64 i = 0; i < n; ++i) {
      LoadedSample ls = load_sample(spec, test[at + static_cast<size_t>(i)]);
      std::copy(ls.image.data(), ls.image.data() + ls.image.numel(),
                images.data() + i * 3 * spec.height * spec.width);
      gts[static_cast<size_t>(i)] = std::move(ls.mask);
      labels[static_cast<size_t>(i)] = ls.label;
    }
    InferOutput out = net.forward_infer(feat.featurize(images).data);
    Tensor maps =
        postprocess(out.seg_logits, spec.height, spec.width, opt.smooth_sigma, opt.smooth_radius);
    for (i64 i = 0; i < n; ++i) {
      Tensor map({spec.height, spec.width});
      std::copy(maps.data() + i * map.numel(), maps.data() + (i + 1) * map.numel(), map.data());
      double score;
      if (out.scores) {
        score = (*out.scores)[i];
      } else {
        score = map[0];
        for (i64 j = 1; j < map.numel(); ++j) score = std::max(score, static_cast<double>(map[j]));
      }
      const Sample& s = test[at + static_cast<size_t>(i)];
      if (!opt.export_dir.empty()) {
        // Stems repeat across test subdirectories (good/000.png vs
        // defect/000.png), so the parent directory is part of the name.
        const fs::path rel(s.image_path);
        const std::string parent = rel.parent_path().filename().string();
        const std::string stem = s.category + "_" + (parent.empty() ? "" : parent + "_") +
                                 rel.stem().string();
        save_npy(fs::path(opt.export_dir) / "maps" / (stem + ".npy"), map);
        if (opt.overlays) {
          Tensor img({3, spec.height, spec.width});
          std::copy(images.data() + i * img.numel(), images.data() + (i + 1) * img.numel(),
                    img.data());
          save_overlay(fs::path(opt.export_dir) / "overlays" / (stem + ".png"), img, map, score);
        }
      }
      bundle.scores.push_back(score);
      bundle.labels.push_back(labels[static_cast<size_t>(i)]);
      bundle.maps.push_back(std::move(map));
      bundle.gt_masks.push_back(std::move(gts[static_cast<size_t>(i)]));
    }
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchmarkConfig {
  i64 height = 256;
  i64 width = 256;
  i64 warmup = 200;
  i64 iters = 1000;  // timed single-image passes per repetition
  i64 reps = 5;
  i64 batch_size = 16;  // throughput batches

  void validate() const {
    check_arg(warmup >= 0 && iters > 0 && reps > 0 && batch_size > 0,
              "benchmark: counts must be positive");
  }
};

struct BenchmarkReport {
  double latency_ms_mean = 0.0;
  double latency_ms_std = 0.0;
  double throughput_mean = 0.0;  // images / second at batch_size
  double throughput_std = 0.0;
  i64 params_total = 0;
  i64 params_trainable = 0;
  double peak_rss_mb = 0.0;
  BenchmarkConfig config;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["resolution"] = {config.height, config.width};
    j["warmup"] = config.warmup;
    j["iters"] = config.iters;
    j["reps"] = config.reps;
    j["batch_size"] = config.batch_size;
    j["latency_ms_mean"] = latency_ms_mean;
    j["latency_ms_std"] = latency_ms_std;
    j["throughput_img_per_s_mean"] = throughput_mean;
    j["throughput_img_per_s_std"] = throughput_std;
    j["params_total"] = params_total;
    j["params_trainable"] = params_trainable;
    j["peak_rss_mb"] = peak_rss_mb;
    return j;
  }
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  const double std_dev = v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1)) : 0.0;
  return {mean, std_dev};
}

}  // namespace detail

// Full inference path (featurize -> heads -> postprocess) on synthetic
// input: mean +- std of single-image latency over `reps` repetitions of
// `iters` passes, plus batched throughput.
inline BenchmarkReport benchmark(Featurizer& feat, Network& net, const BenchmarkConfig& cfg) {
  cfg.validate();
  Rng rng(612);
  Tensor one({1, 3, cfg.height, cfg.width});
  for (i64 i = 0; i < one.numel(); ++i) one[i] = static_cast<float>(rng.normal());
  Tensor many({cfg.batch_size, 3, cfg.height, cfg.width});
  for (i64 i = 0; i < many.numel(); ++i) many[i] = static_cast<float>(rng.normal());

  volatile float sink = 0.0f;  // keep the pipeline from being optimized out
  auto pass = [&](const Tensor& images) {
    InferOutput out = net.forward_infer(feat.featurize(images).data);
    Tensor maps = postprocess(out.seg_logits, cfg.height, cfg.width);
    sink = sink + maps[0] + (out.scores ? (*out.scores)[0] : 0.0f);
  };

  for (i64 i = 0; i < cfg.warmup; ++i) pass(one);

  std::vector<double> lat, thr;
  for (i64 r = 0; r < cfg.reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    for (i64 i = 0; i < cfg.iters; ++i) pass(one);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    lat.push_back(dt * 1000.0 / static_cast<double>(cfg.iters));
  }
  const i64 n_batches = std::max<i64>(1, cfg.iters / cfg.batch_size);
  for (i64 r = 0; r < cfg.reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    for (i64 i = 0; i < n_batches; ++i) pass(many);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    thr.push_back(static_cast<double>(n_batches * cfg.batch_size) / dt);
  }

  BenchmarkReport rep;
  rep.config = cfg;
  std::tie(rep.latency_ms_mean, rep.latency_ms_std) = detail::mean_std(lat);
  std::tie(rep.throughput_mean, rep.throughput_std) = detail::mean_std(thr);
  rep.params_trainable = net.param_count();
  rep.params_total = rep.params_trainable + feat.backbone().param_count();
  rep.peak_rss_mb = peak_rss_mb();
  return rep;
}

}  // namespace ssnet::engine

#endif  // SSNET_ENGINE_HPP_
