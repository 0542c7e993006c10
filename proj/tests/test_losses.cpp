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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ssnet/losses.hpp"
#include "ssnet/rng.hpp"
#include "support/oracles.hpp"

using ssnet::i64;
using ssnet::LossConfig;
using ssnet::Rng;
using ssnet::Tensor;

namespace {

struct Instance {
  Tensor logits;   // [1,1,h,w] so the batch/cell mean equals the flat mean
  Tensor targets;
  std::vector<double> logit_v;
  std::vector<int> target_v;
};

Instance random_instance(i64 n, Rng& rng, double span = 3.0) {
  Instance ins;
  ins.logits = Tensor({1, 1, 1, n});
  ins.targets = Tensor({1, 1, 1, n});
  for (i64 i = 0; i < n; ++i) {
    ins.logits[i] = static_cast<float>(rng.uniform(-span, span));
    ins.targets[i] = rng.bernoulli(0.4) ? 1.0f : 0.0f;
    ins.logit_v.push_back(ins.logits[i]);
    ins.target_v.push_back(ins.targets[i] != 0.0f ? 1 : 0);
  }
  return ins;
}

}  // namespace

TEST_CASE("truncated L1 agrees with the reference mean", "[losses]") {
  Rng rng(301);
  for (int rep = 0; rep < 50; ++rep) {
    Instance ins = random_instance(1 + rng.uniform_int(64), rng);
    for (double th : {0.25, 0.5, 1.0}) {
      const double got = ssnet::truncated_l1(ins.logits, ins.targets, th);
      const double want = oracles::truncated_l1_mean(ins.logit_v, ins.target_v, th);
      REQUIRE_THAT(got, Catch::Matchers::WithinAbs(want, 1e-6));
    }
  }
}

TEST_CASE("focal loss agrees with the reference mean", "[losses]") {
  Rng rng(302);
  for (int rep = 0; rep < 50; ++rep) {
    Instance ins = random_instance(1 + rng.uniform_int(64), rng);
    for (double gamma : {0.0, 1.0, 2.0, 4.0}) {
      for (double alpha : {-1.0, 0.25, 0.75}) {
        const double got = ssnet::focal_loss(ins.logits, ins.targets, gamma, alpha);
        const double want = oracles::focal_mean(ins.logit_v, ins.target_v, gamma, alpha);
        REQUIRE_THAT(got, Catch::Matchers::WithinAbs(want, 1e-9));
      }
    }
  }
}

TEST_CASE("focal loss with gamma 0 reduces to cross-entropy", "[losses]") {
  Rng rng(303);
  for (int rep = 0; rep < 20; ++rep) {
    Instance ins = random_instance(16, rng);
    double bce = 0.0;
    for (size_t i = 0; i < ins.logit_v.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-ins.logit_v[i]));
      bce += ins.target_v[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    bce /= static_cast<double>(ins.logit_v.size());
    REQUIRE_THAT(ssnet::focal_loss(ins.logits, ins.targets, 0.0, -1.0),
                 Catch::Matchers::WithinAbs(bce, 1e-9));
  }
}

TEST_CASE("worked single-cell examples", "[losses]") {
  Tensor one({1, 1, 1, 1});
  Tensor pos = Tensor::full({1, 1, 1, 1}, 1.0f);
  Tensor neg = Tensor::zeros({1, 1, 1, 1});

  one[0] = -0.3f;
  REQUIRE_THAT(ssnet::truncated_l1(one, pos, 0.5),
               Catch::Matchers::WithinAbs(oracles::kTruncL1AnomMargin, 1e-7));
  REQUIRE_THAT(ssnet::truncated_l1(one, neg, 0.5),
               Catch::Matchers::WithinAbs(oracles::kTruncL1NormMargin, 1e-7));

  // Saturation: confident cells pay nothing.
  one[0] = 0.7f;
  REQUIRE(ssnet::truncated_l1(one, pos, 0.5) == 0.0);
  one[0] = -0.9f;
  REQUIRE(ssnet::truncated_l1(one, neg, 0.5) == 0.0);

  one[0] = 0.0f;
  REQUIRE_THAT(ssnet::focal_loss(one, pos, 0.0, -1.0),
               Catch::Matchers::WithinAbs(oracles::kBceLogitZero, 1e-12));
  REQUIRE_THAT(ssnet::focal_loss(one, pos, 2.0, -1.0),
               Catch::Matchers::WithinAbs(oracles::kFocalG2LogitZero, 1e-12));
}

TEST_CASE("analytic gradients match finite differences", "[losses]") {
  Rng rng(304);
  const i64 n = 8;
  for (int rep = 0; rep < 10; ++rep) {
    Instance ins = random_instance(n, rng, 2.0);
    const i64 idx = rng.uniform_int(n);
    const double th = 0.5;
    // Keep the probe away from the truncation kinks.
    if (std::abs(std::abs(static_cast<double>(ins.logits[idx])) - th) < 0.05) continue;

    {
      Tensor grad(ins.logits.shape());
      ssnet::truncated_l1(ins.logits, ins.targets, th, &grad);
      auto f = [&](double v) {
        Tensor probe = ins.logits;
        probe[idx] = static_cast<float>(v);
        return ssnet::truncated_l1(probe, ins.targets, th);
      };
      const double fd = oracles::fd_derivative(f, ins.logits[idx], 1e-3);
      REQUIRE_THAT(grad[idx], Catch::Matchers::WithinAbs(fd, 1e-4));
    }
    {
      Tensor grad(ins.logits.shape());
      ssnet::focal_loss(ins.logits, ins.targets, 2.0, 0.25, &grad);
      auto f = [&](double v) {
        Tensor probe = ins.logits;
        probe[idx] = static_cast<float>(v);
        return ssnet::focal_loss(probe, ins.targets, 2.0, 0.25);
      };
      const double fd = oracles::fd_derivative(f, ins.logits[idx], 1e-3);
      REQUIRE_THAT(grad[idx], Catch::Matchers::WithinAbs(fd, 1e-4));
    }
  }
}

TEST_CASE("total loss composes its parts and accumulates gradients", "[losses]") {
  Rng rng(305);
  Instance seg = random_instance(32, rng);
  Tensor scores({4});
  Tensor score_targets({4});
  for (i64 i = 0; i < 4; ++i) {
    scores[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
    score_targets[i] = (i % 2 == 0) ? 1.0f : 0.0f;
  }

  LossConfig cfg;
  ssnet::LossBreakdown full =
      ssnet::total_loss(seg.logits, seg.targets, &scores, &score_targets, cfg);
  REQUIRE_THAT(full.seg, Catch::Matchers::WithinAbs(full.seg_trunc + full.seg_focal, 1e-12));
  REQUIRE_THAT(full.total, Catch::Matchers::WithinAbs(full.seg + full.cls, 1e-12));
  REQUIRE_THAT(full.seg_trunc,
               Catch::Matchers::WithinAbs(ssnet::truncated_l1(seg.logits, seg.targets, cfg.th), 1e-12));
  REQUIRE_THAT(full.cls,
               Catch::Matchers::WithinAbs(
                   ssnet::focal_loss(scores, score_targets, cfg.focal_gamma, cfg.focal_alpha),
                   1e-12));

  // Focal term removable (the legacy training recipe).
  LossConfig plain = cfg;
  plain.seg_focal_enabled = false;
  ssnet::LossBreakdown trunc_only =
      ssnet::total_loss(seg.logits, seg.targets, nullptr, nullptr, plain);
  REQUIRE(trunc_only.seg_focal == 0.0);
  REQUIRE(trunc_only.cls == 0.0);
  REQUIRE_THAT(trunc_only.total, Catch::Matchers::WithinAbs(trunc_only.seg_trunc, 1e-12));

  // dseg accumulates trunc + focal contributions.
  Tensor dseg(seg.logits.shape()), dtr(seg.logits.shape()), dfo(seg.logits.shape());
  Tensor dscores(scores.shape());
  ssnet::total_loss(seg.logits, seg.targets, &scores, &score_targets, cfg, &dseg, &dscores);
  ssnet::truncated_l1(seg.logits, seg.targets, cfg.th, &dtr);
  ssnet::focal_loss(seg.logits, seg.targets, cfg.focal_gamma, cfg.focal_alpha, &dfo);
  for (i64 i = 0; i < dseg.numel(); ++i)
    REQUIRE_THAT(dseg[i], Catch::Matchers::WithinAbs(dtr[i] + dfo[i], 1e-7));

  // Scores without targets are rejected.
  REQUIRE_THROWS_AS(ssnet::total_loss(seg.logits, seg.targets, &scores, nullptr, cfg),
                    std::invalid_argument);
}

TEST_CASE("gradient clipping rescales exactly at the norm", "[losses]") {
  Tensor a = Tensor::full({2, 4}, 1.0f);   // 8 ones
  Tensor b = Tensor::full({8}, 1.0f);      // 8 ones -> global norm sqrt(16) = 4
  std::vector<Tensor*> grads{&a, &b};

  SECTION("over the limit: scaled to max_norm") {
    const double pre = ssnet::clip_gradients(grads, 1.0);
    REQUIRE_THAT(pre, Catch::Matchers::WithinAbs(4.0, 1e-12));
    for (i64 i = 0; i < a.numel(); ++i)
      REQUIRE_THAT(a[i], Catch::Matchers::WithinAbs(0.25, 1e-7));
    double sq = 0.0;
    for (const Tensor* g : grads)
      for (i64 i = 0; i < g->numel(); ++i) sq += static_cast<double>((*g)[i]) * (*g)[i];
    REQUIRE_THAT(std::sqrt(sq), Catch::Matchers::WithinAbs(1.0, 1e-6));
  }

  SECTION("under the limit: untouched") {
    const double pre = ssnet::clip_gradients(grads, 10.0);
    REQUIRE_THAT(pre, Catch::Matchers::WithinAbs(4.0, 1e-12));
    for (i64 i = 0; i < a.numel(); ++i) REQUIRE(a[i] == 1.0f);
    for (i64 i = 0; i < b.numel(); ++i) REQUIRE(b[i] == 1.0f);
  }

  REQUIRE_THROWS_AS(ssnet::clip_gradients(grads, 0.0), std::invalid_argument);
}

TEST_CASE("loss config validation", "[losses]") {
  LossConfig ok;
  REQUIRE_NOTHROW(ok.validate());
  LossConfig bad = ok;
  bad.th = -0.1;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.focal_gamma = -1.0;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.focal_alpha = 1.5;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}
