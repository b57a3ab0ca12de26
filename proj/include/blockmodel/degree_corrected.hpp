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

#ifndef BLOCKMODEL_DEGREE_CORRECTED_HPP_
#define BLOCKMODEL_DEGREE_CORRECTED_HPP_

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "blockmodel/model.hpp"
#include "blockmodel/variational.hpp"

namespace blockmodel {

// Degree-corrected blockmodel with U communities and V degree levels. Class
// (u, v) is flattened to k = u * V + v; it has probability alpha(u) beta(v)
// and edge probability gamma(v) gamma(v') G(u, u') with class (u', v').
struct DcParams {
  int U = 1;
  int V = 1;
  Vector alpha;
  Vector beta;
  Vector gamma;
  Matrix G;

  // Throws DomainError on any violated invariant.
  void validate() const;
};

inline int dc_param_count(int U, int V) {
  return U * (U + 1) / 2 + (U - 1) + (2 * V - 1);
}

ModelParams dc_to_blockmodel(const DcParams& dc);

// Free coordinates in the order alpha(0..U-2), beta(0..V-2), gamma, G upper
// triangle (row-major). The last alpha and beta entries are implied.
Vector dc_to_vector(const DcParams& dc);
DcParams dc_from_vector(int U, int V, const Vector& v);

// Rescales so max gamma = 1 (G absorbs the square of the factor) and sorts
// degree levels by gamma descending, then beta descending.
DcParams dc_canonical(const DcParams& dc);

nlohmann::json dc_to_json(const DcParams& dc);
DcParams dc_from_json(const nlohmann::json& j);
DcParams read_dc_params(const std::string& path);

struct DcFitConfig {
  double tol = 1e-8;  // relative change in J
  int max_iters = 500;
  int restarts = 1;
  VarInit init = VarInit::kSpectral;
  std::uint64_t seed = 0;
  int threads = 1;
  int max_inner = 2000;  // projected-gradient steps per M-step
  int max_backtracks = 60;
  // alpha held at known_alpha instead of estimated.
  bool known_alpha = false;
  Vector alpha;
  // Class probabilities estimated freely instead of as alpha(u) beta(v).
  bool free_class_probs = false;
};

struct DcFit {
  DcParams dc;
  // Class probabilities actually used (differ from alpha beta only with
  // free_class_probs).
  Vector class_probs;
  VarFit fit;  // params is the mapped UV-class blockmodel
  bool stalled = false;
};

// Variational EM over the submodel: unchanged e_step, then a constrained
// M-step. Class probabilities have closed forms; (gamma, G) are updated by
// projected gradient ascent in log coordinates with backtracking.
DcFit fit_submodel(const Graph& graph, int U, int V, const DcFitConfig& config = {});

}  // namespace blockmodel

#endif  // BLOCKMODEL_DEGREE_CORRECTED_HPP_
