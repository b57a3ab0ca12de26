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

#ifndef BLOCKMODEL_EXACT_HPP_
#define BLOCKMODEL_EXACT_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "blockmodel/model.hpp"

namespace blockmodel {

// Largest K^n the brute-force routines will enumerate.
inline constexpr std::int64_t kEnumerationBudget = 10'000'000;

// K^n, or BudgetError when it exceeds kEnumerationBudget.
std::int64_t enumeration_size(int n, int K);

// Labeling with the given mixed-radix index; node 0 is the fastest digit.
Labels labeling_at(std::int64_t index, int n, int K);

// log g(A; pi, H) = log sum_z f(z, A), summed in fixed-size chunks so the
// result is identical for any thread count.
double marginal_loglik(const Graph& graph, const Vector& pi, const Matrix& H,
                       int threads = 1);
double marginal_loglik(const Graph& graph, const ModelParams& params,
                       int threads = 1);

struct ExactPosterior {
  int n = 0;
  int K = 0;
  double log_g = 0.0;
  // prob[index] for the labeling labeling_at(index, n, K).
  std::vector<double> prob;

  Labels labels(std::int64_t index) const { return labeling_at(index, n, K); }
};

ExactPosterior exact_posterior(const Graph& graph, const ModelParams& params,
                               int threads = 1);

struct ExactMleConfig {
  int restarts = 5;  // random interior starts besides the profile start
  double tol = 1e-10;
  int max_iters = 5000;
  std::uint64_t seed = 0;
  int threads = 1;
  // Optional additional start (used by the Wilks statistic so the maximum is
  // never below the null value).
  std::optional<ModelParams> extra_start;
};

struct ExactMleResult {
  ModelParams params;
  double log_g;
  bool converged;
  int iterations;
  // log g after every EM iteration of the winning run.
  std::vector<double> trace;
  // False if any run ever decreased log g by more than 1e-9 relative.
  bool monotone;
};

// Maximizes the marginal likelihood by exact EM from several starts.
ExactMleResult exact_gm_mle(const Graph& graph, int K,
                            const ExactMleConfig& config = {});

struct IdentityCheck {
  double lhs;
  double rhs;
  double abs_diff;
};

// g(A; theta) / g(A; theta0) against E_theta0[f(Z, A; theta) / f0(Z, A) | A].
IdentityCheck verify_marginal_identity(const Graph& graph,
                                       const ModelParams& theta,
                                       const ModelParams& theta0);

}  // namespace blockmodel

#endif  // BLOCKMODEL_EXACT_HPP_
