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

#ifndef BLOCKMODEL_VARIATIONAL_HPP_
#define BLOCKMODEL_VARIATIONAL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "blockmodel/model.hpp"

namespace blockmodel {

// Product distribution q = prod_i q_i over labelings; row i of q is q_i.
class MeanFieldPosterior {
 public:
  // Rows must be nonnegative and sum to 1 within 1e-12.
  explicit MeanFieldPosterior(Matrix q);
  static MeanFieldPosterior point_mass(const Labels& labels);
  static MeanFieldPosterior uniform(int n, int K);

  int n() const { return static_cast<int>(q_.rows()); }
  int K() const { return static_cast<int>(q_.cols()); }
  const Matrix& q() const { return q_; }
  double operator()(int i, int a) const { return q_(i, a); }
  // Most probable class per node, lowest index on ties.
  Labels argmax() const;

 private:
  Matrix q_;
};

// Evidence lower bound J(q, theta; A). Logs of H are evaluated with H
// clamped to [1e-12, 1 - 1e-12], so J stays finite at boundary H; a pair
// whose data contradict an exact 0/1 entry costs log(1e-12) per unit weight.
double elbo(const MeanFieldPosterior& q, const ModelParams& params,
            const Graph& graph);

// One coordinate-ascent sweep over the nodes in `order`; every single-node
// update maximizes J in q_i with the others fixed.
MeanFieldPosterior e_step(const MeanFieldPosterior& q, const ModelParams& params,
                          const Graph& graph, std::span<const int> order);

struct MStepResult {
  ModelParams params;
  // Some class pair had zero pair weight; its H entry was set to 0.
  bool zero_denominator = false;
};

// Closed-form maximizer of J over (pi, H) at fixed q. Throws FitError if a
// class has (numerically) no mass.
MStepResult m_step(const MeanFieldPosterior& q, const Graph& graph);

enum class VarInit { kSpectral, kRandom };

struct VarConfig {
  double tol = 1e-8;  // relative change in J
  int max_iters = 500;
  int restarts = 1;
  VarInit init = VarInit::kSpectral;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct VarFit {
  ModelParams params;
  MeanFieldPosterior q;
  double elbo;
  int iterations;
  bool converged;
  int restarts_used;
  int best_restart;
  // J after initialization and after every e/m iteration of the best run.
  std::vector<double> trace;
};

// Alternates e_step and m_step from a given starting q.
VarFit fit_variational_from(const Graph& graph, const MeanFieldPosterior& q0,
                            const VarConfig& config, std::uint64_t sweep_seed);

// Multi-restart variational EM: restart 0 is the spectral start (when
// requested), the rest start from Dirichlet(1) rows. Best J wins, ties to the
// lower restart index. Throws FitError if every restart degenerates.
VarFit fit_variational(const Graph& graph, int K, const VarConfig& config = {});

// Initial q from spectral clustering: 0.9 on the assigned class.
MeanFieldPosterior spectral_init(const Graph& graph, int K, std::uint64_t seed);
MeanFieldPosterior random_init(int n, int K, std::uint64_t seed);

struct QOptimum {
  MeanFieldPosterior q;
  double elbo;
  int sweeps;
};

// max_q J(q, theta; A) by e_step sweeps from q0 until the relative change in
// J drops below tol.
QOptimum maximize_q(const MeanFieldPosterior& q0, const ModelParams& params,
                    const Graph& graph, double tol = 1e-12, int max_sweeps = 1000,
                    std::uint64_t seed = 0);

struct SandwichCheck {
  double lower;
  double mid;
  double upper;
  bool ok;
};

// lower = log f(z, A), mid = max_q J started from the point mass at z,
// upper = log g(A). Subject to the enumeration budget.
SandwichCheck check_sandwich(const Labels& labels, const ModelParams& params,
                             const Graph& graph);

}  // namespace blockmodel

#endif  // BLOCKMODEL_VARIATIONAL_HPP_
