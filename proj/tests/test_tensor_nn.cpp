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

#include "ssnet/nn.hpp"
#include "ssnet/rng.hpp"
#include "ssnet/tensor.hpp"
#include "support/oracles.hpp"

using ssnet::i64;
using ssnet::Rng;
using ssnet::Tensor;

namespace {

Tensor random_tensor(const std::vector<i64>& shape, Rng& rng, float lo = -1.0f,
                     float hi = 1.0f) {
  Tensor t(shape);
  for (i64 i = 0; i < t.numel(); ++i)
    t[i] = lo + (hi - lo) * static_cast<float>(rng.uniform());
  return t;
}

}  // namespace

TEST_CASE("tensor shape, indexing, reshape", "[tensor]") {
  Tensor t({2, 3, 4, 5});
  REQUIRE(t.rank() == 4);
  REQUIRE(t.numel() == 120);
  t.at(1, 2, 3, 4) = 7.5f;
  REQUIRE(t[119] == 7.5f);

  Tensor r = t.reshaped({6, 20});
  REQUIRE(r.rank() == 2);
  REQUIRE(r.at(5, 19) == 7.5f);
  REQUIRE_THROWS_AS(t.reshaped({7, 20}), std::invalid_argument);

  Tensor z = Tensor::zeros({3, 3});
  for (i64 i = 0; i < z.numel(); ++i) REQUIRE(z[i] == 0.0f);
  Tensor f = Tensor::full({2, 2}, 3.0f);
  REQUIRE(f.at(1, 1) == 3.0f);

  REQUIRE(t.all_finite());
  t[0] = std::numeric_limits<float>::quiet_NaN();
  REQUIRE_FALSE(t.all_finite());
}

TEST_CASE("rng determinism and stream independence", "[tensor]") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    REQUIRE(u == b.uniform());
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  bool differs = false;
  for (int i = 0; i < 10; ++i) differs |= a.uniform() != c.uniform();
  REQUIRE(differs);

  Rng p(7);
  Rng child0 = p.child(1, 2, 3);
  Rng child1 = Rng(7).child(1, 2, 3);
  REQUIRE(child0.uniform() == child1.uniform());
  REQUIRE(Rng(7).child(1, 2, 3).uniform() != Rng(7).child(1, 2, 4).uniform());

  // normal(): sanity on mean/var over many draws
  Rng g(5);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = g.normal();
    sum += x;
    sq += x * x;
  }
  REQUIRE(std::abs(sum / n) < 0.05);
  REQUIRE(std::abs(sq / n - 1.0) < 0.05);

  // uniform_int bounds and rough uniformity
  Rng u(11);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const i64 v = u.uniform_int(7);
    REQUIRE(v >= 0);
    REQUIRE(v < 7);
    ++counts[static_cast<size_t>(v)];
  }
  for (int cnt : counts) REQUIRE(cnt > 700);
}

TEST_CASE("conv2d matches the naive oracle", "[nn]") {
  Rng rng(101);
  struct Case {
    i64 cin, cout, h, w, k, stride, pad;
  };
  for (const Case& cs : {Case{3, 5, 9, 11, 3, 1, 1}, Case{4, 2, 8, 8, 1, 1, 0},
                         Case{2, 3, 12, 7, 5, 1, 2}, Case{3, 4, 10, 10, 3, 2, 1},
                         Case{1, 1, 6, 6, 7, 2, 3}}) {
    ssnet::nn::Conv2d conv(cs.cin, cs.cout, cs.k, cs.stride, cs.pad);
    conv.init_he(rng);
    Tensor x = random_tensor({2, cs.cin, cs.h, cs.w}, rng);
    Tensor y = conv.forward(x);

    std::vector<double> wv(conv.w.data(), conv.w.data() + conv.w.numel());
    std::vector<double> bv(conv.b.data(), conv.b.data() + conv.b.numel());
    for (i64 n = 0; n < 2; ++n) {
      std::vector<double> xv(x.data() + n * cs.cin * cs.h * cs.w,
                             x.data() + (n + 1) * cs.cin * cs.h * cs.w);
      int oh = 0, ow = 0;
      std::vector<double> want = oracles::conv2d_naive(
          xv, static_cast<int>(cs.cin), static_cast<int>(cs.h), static_cast<int>(cs.w), wv, bv,
          static_cast<int>(cs.cout), static_cast<int>(cs.k), static_cast<int>(cs.k),
          static_cast<int>(cs.stride), static_cast<int>(cs.pad), &oh, &ow);
      REQUIRE(y.dim(2) == oh);
      REQUIRE(y.dim(3) == ow);
      const float* got = y.data() + n * cs.cout * oh * ow;
      for (size_t i = 0; i < want.size(); ++i)
        REQUIRE_THAT(got[i], Catch::Matchers::WithinAbs(want[i], 1e-4));
    }
  }
}

TEST_CASE("replicate padding keeps constant fields constant", "[nn]") {
  Rng rng(7);
  ssnet::nn::Conv2d conv(3, 4, 5, 1, 2, ssnet::nn::Pad::kReplicate);
  conv.init_he(rng);
  Tensor x = Tensor::full({1, 3, 10, 14}, 0.6f);
  Tensor y = conv.forward(x);
  // Expected: (sum of weights per out channel) * 0.6 + bias, everywhere.
  for (i64 oc = 0; oc < 4; ++oc) {
    double wsum = 0.0;
    for (i64 i = 0; i < 3 * 25; ++i) wsum += conv.w[oc * 3 * 25 + i];
    const double want = wsum * 0.6 + conv.b[oc];
    for (i64 p = 0; p < 10 * 14; ++p)
      REQUIRE_THAT(y[oc * 10 * 14 + p], Catch::Matchers::WithinAbs(want, 1e-4));
  }
}

TEST_CASE("conv2d backward passes finite differences", "[nn]") {
  Rng rng(55);
  for (int variant = 0; variant < 3; ++variant) {
    const i64 k = variant == 0 ? 1 : (variant == 1 ? 3 : 5);
    const i64 pad = (k - 1) / 2;
    const auto mode = variant == 2 ? ssnet::nn::Pad::kReplicate : ssnet::nn::Pad::kZero;
    ssnet::nn::Conv2d conv(2, 3, k, 1, pad, mode);
    conv.init_he(rng);
    Tensor x = random_tensor({2, 2, 6, 5}, rng);
    Tensor dy = random_tensor(conv.forward(x).shape(), rng);

    auto loss = [&]() {
      Tensor y = conv.forward(x);
      double s = 0.0;
      for (i64 i = 0; i < y.numel(); ++i) s += static_cast<double>(y[i]) * dy[i];
      return s;
    };

    Tensor dw(conv.w.shape()), db(conv.b.shape()), dx(x.shape());
    conv.backward(x, dy, dw, db, &dx);

    const double h = 1e-3;
    auto check = [&](Tensor& param, const Tensor& grad, i64 idx) {
      const float keep = param[idx];
      param[idx] = keep + static_cast<float>(h);
      const double up = loss();
      param[idx] = keep - static_cast<float>(h);
      const double dn = loss();
      param[idx] = keep;
      const double fd = (up - dn) / (2 * h);
      REQUIRE_THAT(grad[idx], Catch::Matchers::WithinAbs(fd, 2e-2) ||
                                  Catch::Matchers::WithinRel(fd, 1e-2));
    };
    Rng pick(variant + 1);
    for (int t = 0; t < 6; ++t) {
      check(conv.w, dw, pick.uniform_int(conv.w.numel()));
      check(conv.b, db, pick.uniform_int(conv.b.numel()));
      check(x, dx, pick.uniform_int(x.numel()));
    }
  }
}

TEST_CASE("bilinear resize matches the naive oracle", "[nn]") {
  Rng rng(21);
  Tensor x = random_tensor({1, 2, 7, 9}, rng);
  for (auto [oh, ow] : std::vector<std::pair<i64, i64>>{{14, 18}, {13, 5}, {7, 9}, {29, 3}}) {
    Tensor y = ssnet::nn::bilinear_resize(x, oh, ow);
    REQUIRE(y.dim(2) == oh);
    REQUIRE(y.dim(3) == ow);
    for (i64 c = 0; c < 2; ++c) {
      std::vector<double> xv(x.data() + c * 63, x.data() + (c + 1) * 63);
      std::vector<double> want =
          oracles::bilinear_naive(xv, 7, 9, static_cast<int>(oh), static_cast<int>(ow));
      for (size_t i = 0; i < want.size(); ++i)
        REQUIRE_THAT(y[c * oh * ow + static_cast<i64>(i)],
                     Catch::Matchers::WithinAbs(want[i], 1e-5));
    }
  }
  // constants are preserved exactly by interpolation
  Tensor c = Tensor::full({1, 1, 5, 5}, 1.25f);
  Tensor up = ssnet::nn::bilinear_resize(c, 16, 12);
  for (i64 i = 0; i < up.numel(); ++i) REQUIRE_THAT(up[i], Catch::Matchers::WithinAbs(1.25, 1e-6));
}

TEST_CASE("gaussian blur matches the naive oracle and conserves mass", "[nn]") {
  Rng rng(31);
  Tensor x = random_tensor({1, 1, 12, 10}, rng);
  Tensor y = ssnet::nn::gaussian_blur(x, 1.7, 5);
  std::vector<double> xv(x.data(), x.data() + 120);
  std::vector<double> want = oracles::gaussian_naive(xv, 12, 10, 1.7, 5);
  for (size_t i = 0; i < want.size(); ++i)
    REQUIRE_THAT(y[static_cast<i64>(i)], Catch::Matchers::WithinAbs(want[i], 1e-5));

  // single impulse: blurred response integrates back to the impulse value
  Tensor imp = Tensor::zeros({1, 1, 64, 64});
  imp.at(0, 0, 32, 32) = 3.0f;
  Tensor blurred = ssnet::nn::gaussian_blur(imp, 4.0, 16);
  double mass = 0.0;
  for (i64 i = 0; i < blurred.numel(); ++i) mass += blurred[i];
  REQUIRE_THAT(mass, Catch::Matchers::WithinAbs(3.0, 1e-4));

  Tensor c = Tensor::full({1, 1, 9, 9}, -0.4f);
  Tensor cb = ssnet::nn::gaussian_blur(c, 4.0, 16);
  for (i64 i = 0; i < cb.numel(); ++i) REQUIRE_THAT(cb[i], Catch::Matchers::WithinAbs(-0.4, 1e-5));
}

TEST_CASE("3x3 neighborhood mean with replicate edges", "[nn]") {
  Tensor x({1, 1, 3, 3});
  for (i64 i = 0; i < 9; ++i) x[i] = static_cast<float>(i);
  Tensor y = ssnet::nn::mean3x3_replicate(x);
  // center: mean of all nine values = 4
  REQUIRE_THAT(y.at(0, 0, 1, 1), Catch::Matchers::WithinAbs(4.0, 1e-6));
  // corner (0,0) with replicated edges: rows {0,0,1}, cols {0,0,1} ->
  // (0+0+1 + 0+0+1 + 3+3+4)/9 = 12/9
  REQUIRE_THAT(y.at(0, 0, 0, 0), Catch::Matchers::WithinAbs(12.0 / 9.0, 1e-6));

  Tensor c = Tensor::full({2, 3, 6, 7}, 2.5f);
  Tensor cm = ssnet::nn::mean3x3_replicate(c);
  for (i64 i = 0; i < cm.numel(); ++i)
    REQUIRE_THAT(cm[i], Catch::Matchers::WithinAbs(2.5, 1e-6));
}

TEST_CASE("maxpool 3x3 stride 2", "[nn]") {
  Tensor x({1, 1, 4, 4});
  for (i64 i = 0; i < 16; ++i) x[i] = static_cast<float>(i);
  Tensor y = ssnet::nn::maxpool3x3s2(x);
  REQUIRE(y.dim(2) == 2);
  REQUIRE(y.dim(3) == 2);
  // window at (0,0) covers rows/cols {-1..1} (pad) -> max = 5
  REQUIRE(y.at(0, 0, 0, 0) == 5.0f);
  REQUIRE(y.at(0, 0, 1, 1) == 15.0f);
}

TEST_CASE("linear layer forward/backward", "[nn]") {
  Rng rng(77);
  ssnet::nn::Linear fc(4, 3);
  fc.init_he(rng);
  Tensor x = random_tensor({5, 4}, rng);
  Tensor y = fc.forward(x);
  REQUIRE(y.dim(0) == 5);
  REQUIRE(y.dim(1) == 3);
  for (i64 n = 0; n < 5; ++n)
    for (i64 o = 0; o < 3; ++o) {
      double want = fc.b[o];
      for (i64 i = 0; i < 4; ++i) want += static_cast<double>(fc.w[o * 4 + i]) * x[n * 4 + i];
      REQUIRE_THAT(y[n * 3 + o], Catch::Matchers::WithinAbs(want, 1e-5));
    }

  Tensor dy = random_tensor({5, 3}, rng);
  Tensor dw(fc.w.shape()), db(fc.b.shape()), dx(x.shape());
  fc.backward(x, dy, dw, db, &dx);
  auto loss = [&]() {
    Tensor out = fc.forward(x);
    double s = 0.0;
    for (i64 i = 0; i < out.numel(); ++i) s += static_cast<double>(out[i]) * dy[i];
    return s;
  };
  const double h = 1e-3;
  for (i64 idx : {0, 5, 11}) {
    const float keep = fc.w[idx];
    fc.w[idx] = keep + static_cast<float>(h);
    const double up = loss();
    fc.w[idx] = keep - static_cast<float>(h);
    const double dn = loss();
    fc.w[idx] = keep;
    REQUIRE_THAT(dw[idx], Catch::Matchers::WithinAbs((up - dn) / (2 * h), 1e-2));
  }
}

TEST_CASE("activations and their backward rules", "[nn]") {
  Tensor pre({4});
  pre[0] = -2.0f;
  pre[1] = -0.5f;
  pre[2] = 0.0f;
  pre[3] = 1.5f;

  Tensor r = ssnet::nn::leaky_relu(pre, 0.2f);
  REQUIRE_THAT(r[0], Catch::Matchers::WithinAbs(-0.4, 1e-6));
  REQUIRE_THAT(r[3], Catch::Matchers::WithinAbs(1.5, 1e-6));

  Tensor d = Tensor::full({4}, 1.0f);
  ssnet::nn::leaky_relu_backward_(pre, 0.2f, d);
  REQUIRE_THAT(d[0], Catch::Matchers::WithinAbs(0.2, 1e-6));
  REQUIRE_THAT(d[3], Catch::Matchers::WithinAbs(1.0, 1e-6));

  Tensor d2 = Tensor::full({4}, 1.0f);
  ssnet::nn::relu_backward_(pre, d2);
  REQUIRE(d2[0] == 0.0f);
  REQUIRE(d2[1] == 0.0f);
  REQUIRE(d2[2] == 0.0f);  // pre <= 0 gated
  REQUIRE(d2[3] == 1.0f);
}
