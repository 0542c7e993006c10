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

#ifndef SSNET_RNG_HPP_
#define SSNET_RNG_HPP_

#include <cmath>
#include <random>

#include "ssnet/common.hpp"

namespace ssnet {

inline u64 splitmix64(u64 x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seeded generator with hand-rolled transforms so that draws are
// bit-reproducible across standard libraries (std::*_distribution is
// implementation-defined; the mt19937_64 engine itself is not).
class Rng {
 public:
  explicit Rng(u64 seed) : engine_(splitmix64(seed)), seed_mix_(seed) {}

  u64 next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  i64 uniform_int(i64 n) {
    check_arg(n > 0, "uniform_int needs n > 0");
    return static_cast<i64>((static_cast<unsigned __int128>(engine_()) *
                             static_cast<unsigned __int128>(n)) >>
                            64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (i64 i = static_cast<i64>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(uniform_int(i + 1))]);
    }
  }

  // Independent child stream; stable under the (seed, a, b, c) key.
  Rng child(u64 a, u64 b = 0, u64 c = 0) const {
    u64 s = seed_mix_;
    s = splitmix64(s ^ (0x517cc1b727220a95ull + a));
    s = splitmix64(s ^ (0x2545f4914f6cdd1dull + b));
    s = splitmix64(s ^ (0x9e3779b97f4a7c15ull + c));
    return Rng(s);
  }

 private:
  std::mt19937_64 engine_;
  u64 seed_mix_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ssnet

#endif  // SSNET_RNG_HPP_
