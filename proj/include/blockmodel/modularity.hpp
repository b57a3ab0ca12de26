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

#ifndef BLOCKMODEL_MODULARITY_HPP_
#define BLOCKMODEL_MODULARITY_HPP_

#include <cstdint>

#include "blockmodel/model.hpp"

namespace blockmodel {

// tau(x) = x log x - x, tau(0) = 0.
double tau(double x);

// F(M, t) = sum_ab t_a t_b tau(M_ab / (t_a t_b)); terms with t_a t_b = 0 and
// M_ab = 0 vanish, t_a t_b = 0 with M_ab > 0 is a DomainError.
double likelihood_functional(const Matrix& M, const Vector& t);

// Likelihood modularity Q_n(A, e) = sup_theta log f(A, e; theta), from block
// counts with 0 log 0 = 0. Empty classes are allowed.
double modularity_Qn(const SufficientStats& stats);
double modularity_Qn(const Graph& graph, const Labels& labels);

// R(a, a') = #{i : e_i = a, c_i = a'} / n.
Matrix confusion(const Labels& e, const Labels& c);

// X(e) = O(A, e) / mu_n - E[O(A, e) | c] / mu_n with mu_n = n^2 rho, where c
// is the generating labeling. The expectation is R S R^T minus the i = j
// terms that the ordered-pair counts O exclude, so X is exactly centered.
Matrix concentration_X(const Graph& graph, const Labels& e, const Labels& c,
                       const ModelParams& params);

struct ProfileSearchConfig {
  int restarts = 5;  // random starts besides the spectral start
  int max_sweeps = 100;
  std::uint64_t seed = 0;
  bool spectral_start = true;
};

struct ProfileSearchResult {
  Labels labels;
  double Qn;
  int sweeps;  // sweeps used by the winning start
  bool monotone;
};

// Greedy node moves maximizing Q_n: each node in a seeded random order moves
// to the class with the largest Q_n (the current class wins ties, then the
// lowest index) until a sweep moves nothing.
ProfileSearchResult profile_label_search(const Graph& graph, int K,
                                         const ProfileSearchConfig& config = {});

}  // namespace blockmodel

#endif  // BLOCKMODEL_MODULARITY_HPP_
