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

#ifndef BLOCKMODEL_CGM_HPP_
#define BLOCKMODEL_CGM_HPP_

#include "blockmodel/model.hpp"

namespace blockmodel {

// log f(z, A; theta) evaluated from block counts. Uses 0 log 0 = 0, so
// boundary probabilities are fine when the data agree with them; data with
// zero probability give -infinity rather than an exception.
double loglik_from_stats(const SufficientStats& stats, const Vector& pi,
                         const Matrix& H);

double complete_loglik(const Graph& graph, const Labels& labels,
                       const ModelParams& params);

// Lambda(theta, theta0) = log f(theta) - log f(theta0) in exponential-family
// form; depends on the data only through the sufficient statistics.
double loglik_ratio(const LogitParams& theta, const LogitParams& theta0,
                    const SufficientStats& stats);

struct CgmFit {
  Vector pi_hat;
  // NaN where n_ab = 0 (an empty block makes those entries undefined).
  Matrix H_hat;
  double loglik = 0.0;
  SufficientStats stats;
  bool empty_block = false;

  // Throws FitError when a block is empty or H_hat has undefined entries.
  ModelParams params() const;
};

CgmFit cgm_mle(const Graph& graph, const Labels& labels);

// Gradient of Lambda over the free coordinates (varpi, then nu(a,b) for
// a <= b). An off-diagonal coordinate stands for both nu(a,b) and nu(b,a).
Vector gradient(const LogitParams& theta, const SufficientStats& stats);

// Observed information: the NEGATED Hessian of Lambda, over the same free
// coordinates. Block-diagonal in (varpi, nu); varpi block is
// n (diag(pi) - pi pi^T), nu block diagonal with n_ab H (1 - H) off the
// diagonal and n_aa H (1 - H) / 2 on it (ordered pairs count each edge
// inside a block twice).
Matrix hessian(const LogitParams& theta, const SufficientStats& stats);

// Limiting covariances of sqrt(n) (varpi_hat - varpi) and
// sqrt(n^2 rho) (nu_hat - nu), each the inverse of the expected information
// normalized by n and by n^2 rho respectively. The information matrices
// themselves are kept for local expansions.
struct AsymptoticCov {
  Matrix sigma1;
  Matrix sigma2;
  Matrix info1;
  Matrix info2;
};

AsymptoticCov asymptotic_cov(const ModelParams& params, int n);

inline int wilks_degrees_of_freedom(int K) { return K * (K + 3) / 2 - 1; }

// 2 (log f at the CGM MLE - log f at theta0).
double wilks_cgm(const Graph& graph, const Labels& labels,
                 const ModelParams& theta0);

}  // namespace blockmodel

#endif  // BLOCKMODEL_CGM_HPP_
