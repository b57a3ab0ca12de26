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

#include "blockmodel/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "blockmodel/errors.hpp"
#include "blockmodel/rng.hpp"

namespace blockmodel {

namespace {

constexpr int kDenseLimit = 400;

Matrix adjacency_times(const Graph& graph, const Matrix& x) {
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (int i = 0; i < graph.n(); ++i) {
    for (int j : graph.neighbors(i)) y.row(i) += x.row(j);
  }
  return y;
}

Matrix top_algebraic(const Eigen::VectorXd& values, const Matrix& vectors, int K) {
  // SelfAdjointEigenSolver sorts ascending.
  std::vector<int> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values(a) > values(b); });
  Matrix out(vectors.rows(), K);
  for (int k = 0; k < K; ++k) out.col(k) = vectors.col(order[k]);
  return out;
}

}  // namespace

Matrix leading_eigenvectors(const Graph& graph, int K, std::uint64_t seed) {
  const int n = graph.n();
  if (K < 1 || K > n) throw DomainError("need 1 <= K <= n");
  if (n <= kDenseLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(graph.adjacency().cast<double>());
    return top_algebraic(es.eigenvalues(), es.eigenvectors(), K);
  }
  const int p = std::min(n, K + 8);
  Rng rng(seed);
  Matrix x(n, p);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < p; ++k) x(i, k) = rng.uniform() - 0.5;
  }
  Eigen::VectorXd previous = Eigen::VectorXd::Zero(p);
  for (int it = 0; it < 1000; ++it) {
    Eigen::HouseholderQR<Matrix> qr(adjacency_times(graph, x));
    x = qr.householderQ() * Matrix::Identity(n, p);
    if (it % 10 == 9) {
      const Matrix b = x.transpose() * adjacency_times(graph, x);
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (b + b.transpose()));
      Eigen::VectorXd ritz = es.eigenvalues();
      const double scale = std::max(1.0, ritz.cwiseAbs().maxCoeff());
      if ((ritz - previous).cwiseAbs().maxCoeff() < 1e-10 * scale) break;
      previous = ritz;
    }
  }
  const Matrix b = x.transpose() * adjacency_times(graph, x);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (b + b.transpose()));
  return top_algebraic(es.eigenvalues(), x * es.eigenvectors(), K);
}

Labels kmeans(const Matrix& points, int K, std::uint64_t seed, int restarts) {
  const auto n = static_cast<int>(points.rows());
  if (K < 1 || K > n) throw DomainError("need 1 <= K <= n");
  Rng rng(seed);
  std::vector<int> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Matrix centers(K, points.cols());
    centers.row(0) = points.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd d2(n);
    for (int i = 0; i < n; ++i) d2(i) = (points.row(i) - centers.row(0)).squaredNorm();
    for (int k = 1; k < K; ++k) {
      int pick = d2.sum() > 0.0 ? rng.categorical(d2)
                                : static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      centers.row(k) = points.row(pick);
      for (int i = 0; i < n; ++i) {
        d2(i) = std::min(d2(i), (points.row(i) - centers.row(k)).squaredNorm());
      }
    }
    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    double cost = 0.0;
    for (int it = 0; it < 300; ++it) {
      bool changed = false;
      cost = 0.0;
      for (int i = 0; i < n; ++i) {
        int arg = 0;
        double dmin = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
          const double d = (points.row(i) - centers.row(k)).squaredNorm();
          if (d < dmin) {
            dmin = d;
            arg = k;
          }
        }
        cost += dmin;
        if (assign[i] != arg) {
          assign[i] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      Matrix sums = Matrix::Zero(K, points.cols());
      std::vector<int> counts(static_cast<std::size_t>(K), 0);
      for (int i = 0; i < n; ++i) {
        sums.row(assign[i]) += points.row(i);
        ++counts[assign[i]];
      }
      for (int k = 0; k < K; ++k) {
        if (counts[k] > 0) {
          centers.row(k) = sums.row(k) / counts[k];
          continue;
        }
        // Empty cluster: move its center to the worst-fit point.
        int far = 0;
        double dfar = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = (points.row(i) - centers.row(assign[i])).squaredNorm();
          if (d > dfar) {
            dfar = d;
            far = i;
          }
        }
        centers.row(k) = points.row(far);
      }
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = assign;
    }
  }
  return Labels(std::move(best), K);
}

Labels spectral_clustering(const Graph& graph, int K, std::uint64_t seed) {
  if (K == 1) return Labels(std::vector<int>(static_cast<std::size_t>(graph.n()), 0), 1);
  Matrix emb = leading_eigenvectors(graph, K, derive_seed(seed, 0));
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    const double norm = emb.row(i).norm();
    if (norm > 0.0) emb.row(i) /= norm;
  }
  return kmeans(emb, K, derive_seed(seed, 1));
}

}  // namespace blockmodel
