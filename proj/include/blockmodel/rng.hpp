// Copyright 2026 The Blockmodel Authors
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

#ifndef BLOCKMODEL_RNG_HPP_
#define BLOCKMODEL_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace blockmodel {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the stream-th independent substream of a master seed. Used to give
// every replicate, restart and worker its own generator.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream * 0xd1342543de82ef95ULL + 1));
}

// Counter-based generator: the i-th output is a pure function of (key, i), so
// streams are reproducible bit-for-bit on every platform. Distributions are
// implemented here rather than through <random>, whose distribution objects
// are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(splitmix64(seed)) {}

  std::uint64_t next_u64() {
    return splitmix64(key_ ^ splitmix64(counter_++));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = -bound % bound;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Standard exponential; Dirichlet(1) rows are normalized exponentials.
  double exponential() { return -std::log1p(-uniform()); }

  // Index drawn from an unnormalized discrete distribution by inverse CDF.
  template <typename Weights>
  int categorical(const Weights& weights) {
    double total = 0.0;
    for (auto w : weights) total += w;
    const double u = uniform() * total;
    double acc = 0.0;
    int last_positive = -1;
    int index = 0;
    for (auto w : weights) {
      if (w > 0.0) last_positive = index;
      acc += w;
      if (u < acc) return index;
      ++index;
    }
    return last_positive;
  }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(p[i], p[j]);
    }
    return p;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace blockmodel

#endif  // BLOCKMODEL_RNG_HPP_
