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
#include <sstream>
#include <string>
#include <vector>

#include "ssnet/anomaly.hpp"
#include "ssnet/metrics.hpp"
#include "ssnet/rng.hpp"
#include "support/oracles.hpp"

using ssnet::EvalBundle;
using ssnet::i64;
using ssnet::Rng;
using ssnet::Tensor;

namespace {

// Random score vector with deliberate ties (one-decimal quantization).
void random_scored(i64 n, Rng& rng, std::vector<double>* scores, std::vector<int>* labels) {
  scores->clear();
  labels->clear();
  bool pos = false, neg = false;
  for (i64 i = 0; i < n; ++i) {
    scores->push_back(std::round(rng.uniform(0.0, 1.0) * 10.0) / 10.0);
    const int l = rng.bernoulli(0.4) ? 1 : 0;
    labels->push_back(l);
    (l ? pos : neg) = true;
  }
  // Guarantee both classes.
  if (!pos) (*labels)[0] = 1;
  if (!neg) (*labels)[static_cast<size_t>(n - 1)] = 0;
}

Tensor map_from(const oracles::RealImage& im) {
  Tensor t({im.h, im.w});
  for (i64 i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(im.px[static_cast<size_t>(i)]);
  return t;
}

Tensor gt_from(const oracles::BinaryImage& im) {
  Tensor t({im.h, im.w});
  for (i64 i = 0; i < t.numel(); ++i) t[i] = im.px[static_cast<size_t>(i)] ? 1.0f : 0.0f;
  return t;
}

// Random instance with blob-ish regions; guarantees >= 1 region and
// negative pixels across the set.
void random_pro_instance(Rng& rng, int n_images, int h, int w,
                         std::vector<oracles::RealImage>* maps,
                         std::vector<oracles::BinaryImage>* gts) {
  maps->clear();
  gts->clear();
  bool any_region = false;
  for (int im = 0; im < n_images; ++im) {
    oracles::RealImage m;
    m.h = h;
    m.w = w;
    for (int i = 0; i < h * w; ++i)
      m.px.push_back(std::round(rng.uniform(0.0, 1.0) * 50.0) / 50.0);
    oracles::BinaryImage g;
    g.h = h;
    g.w = w;
    g.px.assign(static_cast<size_t>(h * w), 0);
    const int blobs = static_cast<int>(rng.uniform_int(3));
    for (int b = 0; b < blobs; ++b) {
      const int cy = static_cast<int>(rng.uniform_int(h));
      const int cx = static_cast<int>(rng.uniform_int(w));
      const int r = 1 + static_cast<int>(rng.uniform_int(2));
      for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y)
        for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x)
          g.px[static_cast<size_t>(y) * w + x] = 1;
      any_region = true;
    }
    maps->push_back(std::move(m));
    gts->push_back(std::move(g));
  }
  if (!any_region) {
    (*gts)[0].px[0] = 1;
    (*gts)[0].px[1] = 1;
  }
}

}  // namespace

TEST_CASE("ranking metrics reproduce the worked examples", "[metrics]") {
  const std::vector<double> s1{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> l1{0, 0, 1, 1};
  REQUIRE(ssnet::auroc(s1, l1) == oracles::kAurocWorkedExample);

  const std::vector<double> s2{0.9, 0.8, 0.1};
  const std::vector<int> l2{1, 0, 1};
  REQUIRE_THAT(ssnet::average_precision(s2, l2),
               Catch::Matchers::WithinAbs(oracles::kApWorkedExample, 1e-12));
}

TEST_CASE("rank-based and pairwise AUROC agree, ties included", "[metrics]") {
  Rng rng(401);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> scores;
    std::vector<int> labels;
    random_scored(2 + rng.uniform_int(99), rng, &scores, &labels);
    REQUIRE_THAT(ssnet::auroc(scores, labels),
                 Catch::Matchers::WithinAbs(oracles::auroc_pairwise(scores, labels), 1e-9));
  }
}

TEST_CASE("average precision matches the threshold enumeration", "[metrics]") {
  Rng rng(402);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> scores;
    std::vector<int> labels;
    random_scored(2 + rng.uniform_int(99), rng, &scores, &labels);
    REQUIRE_THAT(ssnet::average_precision(scores, labels),
                 Catch::Matchers::WithinAbs(oracles::ap_threshold_enum(scores, labels), 1e-9));
  }
}

TEST_CASE("AUROC properties: complement symmetry, ties, invariance", "[metrics]") {
  Rng rng(403);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> scores;
    std::vector<int> labels;
    random_scored(40, rng, &scores, &labels);

    // Strictly increasing transforms leave both metrics untouched.
    std::vector<double> warped;
    for (double s : scores) warped.push_back(std::exp(2.0 * s) + 1.0);
    REQUIRE_THAT(ssnet::auroc(scores, labels),
                 Catch::Matchers::WithinAbs(ssnet::auroc(warped, labels), 1e-12));
    REQUIRE_THAT(ssnet::average_precision(scores, labels),
                 Catch::Matchers::WithinAbs(ssnet::average_precision(warped, labels), 1e-12));

    // Tie-free scores: negation flips the ranking exactly.
    std::vector<double> unique_scores = scores;
    for (size_t i = 0; i < unique_scores.size(); ++i)
      unique_scores[i] += 1e-6 * static_cast<double>(i + 1);
    std::vector<double> negated;
    for (double s : unique_scores) negated.push_back(-s);
    REQUIRE_THAT(ssnet::auroc(unique_scores, labels) + ssnet::auroc(negated, labels),
                 Catch::Matchers::WithinAbs(1.0, 1e-9));
  }

  // All-equal scores: chance level.
  const std::vector<double> flat(10, 0.5);
  const std::vector<int> labels{1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  REQUIRE_THAT(ssnet::auroc(flat, labels), Catch::Matchers::WithinAbs(0.5, 1e-12));

  // Single-class inputs are rejected.
  REQUIRE_THROWS_AS(ssnet::auroc({0.1, 0.2}, {1, 1}), std::invalid_argument);
  REQUIRE_THROWS_AS(ssnet::auroc({0.1, 0.2}, {0, 0}), std::invalid_argument);
  REQUIRE_THROWS_AS(ssnet::average_precision({0.1, 0.2}, {0, 0}), std::invalid_argument);
}

TEST_CASE("AUPRO agrees with exhaustive threshold enumeration", "[metrics]") {
  Rng rng(404);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<oracles::RealImage> maps;
    std::vector<oracles::BinaryImage> gts;
    random_pro_instance(rng, 1 + static_cast<int>(rng.uniform_int(3)), 8 + static_cast<int>(rng.uniform_int(5)),
                        8 + static_cast<int>(rng.uniform_int(5)), &maps, &gts);
    std::vector<Tensor> tmaps, tgts;
    for (const auto& m : maps) tmaps.push_back(map_from(m));
    for (const auto& g : gts) tgts.push_back(gt_from(g));
    for (double limit : {0.05, 0.3, 1.0}) {
      REQUIRE_THAT(ssnet::aupro(tmaps, tgts, limit),
                   Catch::Matchers::WithinAbs(oracles::aupro_exhaustive(maps, gts, limit), 1e-9));
    }
  }
}

TEST_CASE("AUPRO analytic cases", "[metrics]") {
  // Constant map: the curve is the single segment (0,0) -> (1,1), so the
  // normalized area at limit 1 is exactly one half.
  std::vector<Tensor> maps{Tensor::full({8, 8}, 0.7f)};
  Tensor gt({8, 8});
  gt.at(2, 2) = gt.at(2, 3) = gt.at(3, 2) = gt.at(3, 3) = 1.0f;
  std::vector<Tensor> gts{gt};
  REQUIRE_THAT(ssnet::aupro(maps, gts, 1.0), Catch::Matchers::WithinAbs(0.5, 1e-12));

  // A map that equals the ground truth is perfect at any limit.
  std::vector<Tensor> perfect{gt};
  REQUIRE_THAT(ssnet::aupro(perfect, gts, 0.3), Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(ssnet::aupro(perfect, gts, 1.0), Catch::Matchers::WithinAbs(1.0, 1e-12));

  // Monotone transforms leave the curve unchanged.
  Rng rng(405);
  std::vector<oracles::RealImage> rmaps;
  std::vector<oracles::BinaryImage> rgts;
  random_pro_instance(rng, 2, 10, 10, &rmaps, &rgts);
  std::vector<Tensor> tmaps, warped, tgts;
  for (const auto& m : rmaps) {
    Tensor t = map_from(m);
    Tensor w2(t.shape());
    for (i64 i = 0; i < t.numel(); ++i) w2[i] = std::tanh(3.0f * t[i]) + 2.0f;
    tmaps.push_back(std::move(t));
    warped.push_back(std::move(w2));
  }
  for (const auto& g : rgts) tgts.push_back(gt_from(g));
  REQUIRE_THAT(ssnet::aupro(tmaps, tgts, 0.3),
               Catch::Matchers::WithinAbs(ssnet::aupro(warped, tgts, 0.3), 1e-6));

  // The unnormalized integral grows with the limit.
  double prev = 0.0;
  for (double limit : {0.05, 0.1, 0.3, 0.6, 1.0}) {
    const double unnorm = ssnet::aupro(tmaps, tgts, limit) * limit;
    REQUIRE(unnorm >= prev - 1e-12);
    prev = unnorm;
  }

  // Degenerate inputs are rejected.
  std::vector<Tensor> empty_gt{Tensor({8, 8})};
  REQUIRE_THROWS_AS(ssnet::aupro(maps, empty_gt, 0.3), std::invalid_argument);
  std::vector<Tensor> all_pos{Tensor::full({8, 8}, 1.0f)};
  REQUIRE_THROWS_AS(ssnet::aupro(maps, all_pos, 0.3), std::invalid_argument);
  REQUIRE_THROWS_AS(ssnet::aupro(maps, gts, 0.0), std::invalid_argument);
  std::vector<Tensor> wrong_shape{Tensor({4, 4})};
  REQUIRE_THROWS_AS(ssnet::aupro(maps, wrong_shape, 0.3), std::invalid_argument);
}

TEST_CASE("report aggregates categories and degrades gracefully", "[metrics]") {
  Rng rng(406);

  // Category A: fully evaluable.
  EvalBundle a;
  {
    std::vector<oracles::RealImage> maps;
    std::vector<oracles::BinaryImage> gts;
    random_pro_instance(rng, 3, 10, 10, &maps, &gts);
    for (size_t i = 0; i < maps.size(); ++i) {
      a.maps.push_back(map_from(maps[i]));
      a.gt_masks.push_back(gt_from(gts[i]));
      a.scores.push_back(rng.uniform(0.0, 1.0));
      a.labels.push_back(ssnet::mask_any(a.gt_masks.back()) ? 1 : 0);
    }
    if (!a.labels.empty() && a.labels[0] != 0) {
      // Ensure a negative image exists for image metrics.
      a.labels.push_back(0);
      a.scores.push_back(0.01);
      a.maps.push_back(Tensor({10, 10}));
      a.gt_masks.push_back(Tensor({10, 10}));
    }
    bool pos = false;
    for (int l : a.labels) pos |= l == 1;
    if (!pos) {
      a.labels[0] = 1;
      Tensor g({10, 10});
      g.at(0, 0) = g.at(0, 1) = 1.0f;
      a.gt_masks[0] = g;
    }
  }

  // Category B: one class only -> image metrics unavailable; clean ground
  // truth -> pixel metrics unavailable.
  EvalBundle b;
  for (int i = 0; i < 4; ++i) {
    b.scores.push_back(rng.uniform(0.0, 1.0));
    b.labels.push_back(0);
    b.maps.push_back(Tensor({6, 6}));
    b.gt_masks.push_back(Tensor({6, 6}));
  }

  ssnet::MetricsReport rep = ssnet::report({{"cat_a", a}, {"cat_b", b}}, 0.3);
  REQUIRE(rep.rows.size() == 2);
  REQUIRE(rep.rows[0].category == "cat_a");
  REQUIRE(rep.rows[0].image_auroc.has_value());
  REQUIRE(rep.rows[0].pixel_ap.has_value());
  REQUIRE(rep.rows[0].aupro.has_value());
  REQUIRE_FALSE(rep.rows[1].image_auroc.has_value());
  REQUIRE_FALSE(rep.rows[1].pixel_ap.has_value());
  REQUIRE_FALSE(rep.rows[1].aupro.has_value());

  // Mean row: unweighted over defined values; here only category A counts.
  REQUIRE(rep.mean.category == "mean");
  REQUIRE(rep.mean.n_images == rep.rows[0].n_images + rep.rows[1].n_images);
  REQUIRE(rep.mean.image_auroc == rep.rows[0].image_auroc);
  REQUIRE(rep.mean.aupro == rep.rows[0].aupro);

  // JSON and CSV agree with the in-memory rows.
  nlohmann::ordered_json j = rep.to_json();
  REQUIRE(j["rows"].size() == 2);
  REQUIRE(j["rows"][0]["category"] == "cat_a");
  REQUIRE(j["rows"][1]["image_auroc"].is_null());
  REQUIRE_THAT(j["rows"][0]["image_auroc"].get<double>(),
               Catch::Matchers::WithinAbs(*rep.rows[0].image_auroc, 0.0));
  REQUIRE_THAT(j["mean"]["aupro"].get<double>(),
               Catch::Matchers::WithinAbs(*rep.mean.aupro, 0.0));

  const std::string csv = rep.to_csv();
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  REQUIRE(line == "category,n_images,image_auroc,image_ap,pixel_ap,aupro");
  std::getline(is, line);
  REQUIRE(line.rfind("cat_a,", 0) == 0);
  // The CSV round-trips the same double that JSON carries.
  {
    std::istringstream fields(line);
    std::string f;
    std::getline(fields, f, ',');  // category
    std::getline(fields, f, ',');  // n_images
    std::getline(fields, f, ',');  // image_auroc
    REQUIRE_THAT(std::stod(f), Catch::Matchers::WithinAbs(*rep.rows[0].image_auroc, 1e-15));
  }
  std::getline(is, line);
  REQUIRE(line.rfind("cat_b,4,,,,", 0) == 0);
  std::getline(is, line);
  REQUIRE(line.rfind("mean,", 0) == 0);

  // Two-category means average the per-category values.
  EvalBundle c = a;
  for (double& s : c.scores) s = 1.0 - s;
  ssnet::MetricsReport two = ssnet::report({{"x", a}, {"y", c}}, 0.3);
  REQUIRE_THAT(*two.mean.image_auroc,
               Catch::Matchers::WithinAbs(
                   0.5 * (*two.rows[0].image_auroc + *two.rows[1].image_auroc), 1e-12));
}
