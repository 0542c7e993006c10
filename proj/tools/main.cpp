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

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "ssnet/cli.hpp"

namespace {

std::pair<ssnet::i64, ssnet::i64> parse_resolution(const std::string& s) {
  const auto x = s.find('x');
  ssnet::check_arg(x != std::string::npos, "resolution must look like HxW, e.g. 64x64");
  return {std::stoll(s.substr(0, x)), std::stoll(s.substr(x + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ssnet: surface-defect detection with synthetic latent anomalies"};
  app.set_version_flag("--version", SSNET_VERSION_STRING);
  app.require_subcommand(1);

  ssnet::cli::TrainOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "Train one model per seed");
  train->add_option("--config", train_opts.config_path, "Config file (JSON)");
  train->add_option("--set", train_opts.sets, "Dotted-path override, e.g. train.epochs=2");

  ssnet::cli::EvaluateOpts eval_opts;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Compute metrics for checkpoints");
  evaluate->add_option("--checkpoint", eval_opts.checkpoints, "Checkpoint path (repeatable)")
      ->required();
  evaluate->add_option("--out", eval_opts.out_dir, "Output directory")->required();
  evaluate->add_option("--set", eval_opts.sets, "Dotted-path config override");
  evaluate->add_flag("--overlays", eval_opts.overlays, "Export colormapped overlays");

  ssnet::cli::PredictOpts predict_opts;
  CLI::App* predict = app.add_subcommand("predict", "Anomaly maps + scores for images");
  predict->add_option("--checkpoint", predict_opts.checkpoint, "Checkpoint path")->required();
  predict->add_option("--input", predict_opts.input, "Image file or directory")->required();
  predict->add_option("--out", predict_opts.out_dir, "Output directory")->required();
  predict->add_option("--set", predict_opts.sets, "Dotted-path config override");
  predict->add_flag("--overlays", predict_opts.overlays, "Export overlays with the score");

  ssnet::cli::BenchmarkOpts bench_opts;
  CLI::App* bench = app.add_subcommand("benchmark", "Measure inference latency/throughput");
  bench->add_option("--checkpoint", bench_opts.checkpoint, "Checkpoint path")->required();
  bench->add_option("--device", bench_opts.device, "Execution device (cpu)");
  bench->add_option("--out", bench_opts.out_file, "Also write the JSON report here");
  bench->add_option("--warmup", bench_opts.bench.warmup, "Warm-up passes (default 200)");
  bench->add_option("--iters", bench_opts.bench.iters, "Timed passes per rep (default 1000)");
  bench->add_option("--reps", bench_opts.bench.reps, "Repetitions (default 5)");
  bench->add_option("--batch", bench_opts.bench.batch_size, "Throughput batch (default 16)");

  ssnet::cli::MakeToyOpts toy_opts;
  std::string toy_resolution = "64x64";
  CLI::App* toy = app.add_subcommand("make-toy", "Generate a synthetic corpus");
  toy->add_option("--out", toy_opts.out_dir, "Output directory")->required();
  toy->add_option("--n-normal", toy_opts.n_normal, "Normal image count (default 200)");
  toy->add_option("--n-defect", toy_opts.n_defect, "Defective image count (default 50)");
  toy->add_option("--resolution", toy_resolution, "HxW (default 64x64)");
  toy->add_option("--seed", toy_opts.seed, "Generator seed");
  toy->add_option("--layout", toy_opts.layout, "mvtec | ksdd2 (default mvtec)");

  ssnet::cli::AblationOpts abl_opts;
  CLI::App* ablation = app.add_subcommand("ablation", "Train + evaluate one preset variant");
  ablation->add_option("--preset", abl_opts.preset, "Variant name")->required();
  ablation->add_option("--config", abl_opts.config_path, "Base config file (JSON)");
  ablation->add_option("--set", abl_opts.sets, "Dotted-path override");
  ablation->add_option("--out", abl_opts.out_dir, "Output directory override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return ssnet::cli::cmd_train(train_opts);
    if (*evaluate) return ssnet::cli::cmd_evaluate(eval_opts);
    if (*predict) return ssnet::cli::cmd_predict(predict_opts);
    if (*bench) return ssnet::cli::cmd_benchmark(bench_opts);
    if (*toy) {
      std::tie(toy_opts.height, toy_opts.width) = parse_resolution(toy_resolution);
      return ssnet::cli::cmd_make_toy(toy_opts);
    }
    if (*ablation) return ssnet::cli::cmd_ablation(abl_opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
