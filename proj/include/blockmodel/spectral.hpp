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

#ifndef BLOCKMODEL_SPECTRAL_HPP_
#define BLOCKMODEL_SPECTRAL_HPP_

#include <cstdint>

#include "blockmodel/model.hpp"

namespace blockmodel {

// Eigenvectors of the adjacency matrix for its K largest (algebraic)
// eigenvalues, one per column. Dense solver for small graphs, orthogonal
// subspace iteration on the sparse adjacency otherwise.
Matrix leading_eigenvectors(const Graph& graph, int K, std::uint64_t seed = 0);

// Lloyd's algorithm with k-means++ seeding; best of `restarts` runs by
// within-cluster sum of squares.
Labels kmeans(const Matrix& points, int K, std::uint64_t seed, int restarts = 10);

// Row-normalized leading-K eigenvector embedding clustered by k-means.
Labels spectral_clustering(const Graph& graph, int K, std::uint64_t seed = 0);

}  // namespace blockmodel

#endif  // BLOCKMODEL_SPECTRAL_HPP_
