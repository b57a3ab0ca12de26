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

#include "blockmodel/modularity.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "blockmodel/errors.hpp"
#include "blockmodel/numeric.hpp"
#include "blockmodel/rng.hpp"
#include "blockmodel/spectral.hpp"

namespace blockmodel {

namespace {

double qn_from_counts(const std::vector<std::int64_t>& n_a, const CountMatrix& O, int n) {
  const auto K = static_cast<int>(n_a.size());
  double q = 0.0;
  for (int a = 0; a < K; ++a) {
    const auto na = static_cast<double>(n_a[a]);
    q += xlogy(na, na / n);
  }
  double block = 0.0;
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      const std::int64_t pairs = a == b ? n_a[a] * (n_a[a] - 1) : n_a[a] * n_a[b];
      if (pairs == 0) continue;
      const auto o = static_cast<double>(O(a, b));
      const double h = o / static_cast<double>(pairs);
      block += xlogy(o, h) + xlogy(static_cast<double>(pairs) - o, 1.0 - h);
    }
  }
  return q + 0.5 * block;
}

// Moves node i out of class `from` (or into class `to`) given its neighbor
// counts per class.
void shift_node(std::vector<std::int64_t>& n_a, CountMatrix& O,
                const std::vector<std::int64_t>& nb, int cls, int sign) {
  n_a[cls] += sign;
  for (std::size_t b = 0; b < nb.size(); ++b) {
    if (static_cast<int>(b) == cls) {
      O(cls, cls) += sign * 2 * nb[b];
    } else {
      O(cls, static_cast<Eigen::Index>(b)) += sign * nb[b];
      O(static_cast<Eigen::Index>(b), cls) += sign * nb[b];
    }
  }
}

struct SearchRun {
  std::vector<int> z;
  double q;
  int sweeps;
  bool monotone;
};

SearchRun greedy_search(const Graph& graph, int K, std::vector<int> z, int max_sweeps,
                        Rng& rng) {
  const int n = graph.n();
  std::vector<std::int64_t> n_a(static_cast<std::size_t>(K), 0);
  CountMatrix O = CountMatrix::Zero(K, K);
  for (int i = 0; i < n; ++i) {
    ++n_a[z[i]];
    for (int j : graph.neighbors(i)) ++O(z[i], z[j]);
  }
  double current = qn_from_counts(n_a, O, n);
  bool monotone = true;
  int sweeps = 0;
  std::vector<std::int64_t> nb(static_cast<std::size_t>(K));
  while (sweeps < max_sweeps) {
    ++sweeps;
    bool moved = false;
    for (int i : rng.permutation(n)) {
      std::fill(nb.begin(), nb.end(), 0);
      for (int j : graph.neighbors(i)) ++nb[z[j]];
      const int from = z[i];
      shift_node(n_a, O, nb, from, -1);
      int best = from;
      double best_q = current;
      for (int c = 0; c < K; ++c) {
        if (c == from) continue;
        shift_node(n_a, O, nb, c, +1);
        const double qc = qn_from_counts(n_a, O, n);
        shift_node(n_a, O, nb, c, -1);
        if (qc > best_q + 1e-10 * std::max(1.0, std::abs(best_q))) {
          best_q = qc;
          best = c;
        }
      }
      shift_node(n_a, O, nb, best, +1);
      if (best != from) {
        if (best_q < current) monotone = false;
        current = best_q;
        z[i] = best;
        moved = true;
      }
    }
    if (!moved) break;
  }
  return {std::move(z), current, sweeps, monotone};
}

}  // namespace

double tau(double x) {
  if (x < 0.0 || std::isnan(x)) throw DomainError("tau needs x >= 0");
  if (x == 0.0) return 0.0;
  return x * std::log(x) - x;
}

double likelihood_functional(const Matrix& M, const Vector& t) {
  const auto K = t.size();
  if (M.rows() != K || M.cols() != K) throw DomainError("M must be K x K");
  if ((t.array() < 0.0).any() || std::abs(t.sum() - 1.0) > 1e-12) {
    throw DomainError("t must lie in the simplex");
  }
  if ((M.array() < 0.0).any()) throw DomainError("M must be nonnegative");
  double f = 0.0;
  for (Eigen::Index a = 0; a < K; ++a) {
    for (Eigen::Index b = 0; b < K; ++b) {
      const double w = t(a) * t(b);
      if (w == 0.0) {
        if (M(a, b) > 0.0) throw DomainError("M_ab > 0 where t_a t_b = 0");
        continue;
      }
      f += w * tau(M(a, b) / w);
    }
  }
  return f;
}

double modularity_Qn(const SufficientStats& stats) {
  std::vector<std::int64_t> n_a(stats.n_a.data(), stats.n_a.data() + stats.n_a.size());
  return qn_from_counts(n_a, stats.O, stats.n);
}

double modularity_Qn(const Graph& graph, const Labels& labels) {
  return modularity_Qn(sufficient_stats(graph, labels));
}

Matrix confusion(const Labels& e, const Labels& c) {
  if (e.size() != c.size()) throw DomainError("label vectors differ in length");
  Matrix R = Matrix::Zero(e.K(), c.K());
  const int n = e.size();
  for (int i = 0; i < n; ++i) R(e[i], c[i]) += 1.0;
  return R / n;
}

Matrix concentration_X(const Graph& graph, const Labels& e, const Labels& c,
                       const ModelParams& params) {
  const int n = graph.n();
  const Labels cw(c.values(), params.K());
  const Matrix R = confusion(e, cw);
  const Matrix& S = params.S();
  const double mu = static_cast<double>(n) * n * params.rho();
  Matrix expected = R * S * R.transpose();
  for (int a = 0; a < e.K(); ++a) {
    double self = 0.0;
    for (int b = 0; b < params.K(); ++b) self += R(a, b) * S(b, b);
    expected(a, a) -= self / n;
  }
  const SufficientStats s = sufficient_stats(graph, e);
  return s.O.cast<double>() / mu - expected;
}

ProfileSearchResult profile_label_search(const Graph& graph, int K,
                                         const ProfileSearchConfig& config) {
  const int n = graph.n();
  if (n < K) throw DomainError("need n >= K");
  std::optional<SearchRun> best;
  bool monotone = true;
  const int starts = config.restarts + (config.spectral_start ? 1 : 0);
  for (int r = 0; r < starts; ++r) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));
    std::vector<int> z;
    if (r == 0 && config.spectral_start) {
      z = spectral_clustering(graph, K, derive_seed(config.seed, 1000)).values();
    } else {
      z.resize(static_cast<std::size_t>(n));
      for (int& v : z) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    }
    SearchRun run = greedy_search(graph, K, std::move(z), config.max_sweeps, rng);
    monotone = monotone && run.monotone;
    if (!best || run.q > best->q) best = std::move(run);
  }
  return {Labels(std::move(best->z), K), best->q, best->sweeps, monotone};
}

}  // namespace blockmodel
