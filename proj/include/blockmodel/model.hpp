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

#ifndef BLOCKMODEL_MODEL_HPP_
#define BLOCKMODEL_MODEL_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace blockmodel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// A permutation of the classes [0, K): class a is relabeled to perm[a].
using Permutation = std::vector<int>;

inline constexpr int kMaxAlignClasses = 8;

// Generative parameters theta = (rho, pi, S) with edge probabilities
// H = rho * S and the normalization sum_ab pi(a) pi(b) S(a,b) = 1, so that
// rho is the marginal edge probability and n * rho the expected degree.
class ModelParams {
 public:
  // Validates every invariant; throws DomainError.
  ModelParams(double rho, Vector pi, Matrix S);

  // Builds the (rho, S) split of an edge-probability matrix.
  static ModelParams from_pi_H(const Vector& pi, const Matrix& H);

  int K() const { return static_cast<int>(pi_.size()); }
  double rho() const { return rho_; }
  const Vector& pi() const { return pi_; }
  const Matrix& S() const { return S_; }
  Matrix H() const { return rho_ * S_; }
  double expected_degree(int n) const { return n * rho_; }

 private:
  double rho_;
  Vector pi_;
  Matrix S_;
};

// Logit coordinates: varpi(a) = log(pi(a) / pi(K)) for a < K and
// nu(a,b) = logit H(a,b). The free coordinates are varpi followed by the
// upper triangle (a <= b) of nu in row-major order.
struct LogitParams {
  Vector varpi;
  Matrix nu;

  int K() const { return static_cast<int>(nu.rows()); }
  static int num_free(int K) { return K - 1 + K * (K + 1) / 2; }
  Vector to_vector() const;
  static LogitParams from_vector(int K, const Vector& v);
};

struct PiH {
  Vector pi;
  Matrix H;
};

struct RhoS {
  double rho;
  Matrix S;
};

// Simple undirected graph stored as sorted neighbor lists.
class Graph {
 public:
  Graph() = default;
  // Edges are unordered pairs of distinct 0-based nodes; duplicates rejected.
  Graph(int n, std::span<const std::pair<int, int>> edges);

  static Graph from_adjacency(const Eigen::MatrixXi& adjacency);

  int n() const { return n_; }
  std::int64_t num_edges() const { return num_edges_; }
  // L = sum_{i != j} A_ij, twice the number of edges.
  std::int64_t ordered_edge_count() const { return 2 * num_edges_; }
  const std::vector<int>& neighbors(int i) const { return adj_[i]; }
  bool has_edge(int i, int j) const;
  double average_degree() const {
    return n_ > 0 ? 2.0 * static_cast<double>(num_edges_) / n_ : 0.0;
  }
  // Edge list with i < j, sorted.
  std::vector<std::pair<int, int>> edges() const;
  Eigen::MatrixXi adjacency() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  int n_ = 0;
  std::int64_t num_edges_ = 0;
  std::vector<std::vector<int>> adj_;
};

// Hard class assignment, 0-based internally. Files and user-facing
// interfaces use 1-based labels; convert with from_one_based/to_one_based.
class Labels {
 public:
  Labels() = default;
  Labels(std::vector<int> z, int K);
  static Labels from_one_based(std::span<const int> z, int K);

  int K() const { return K_; }
  int size() const { return static_cast<int>(z_.size()); }
  int operator[](int i) const { return z_[i]; }
  const std::vector<int>& values() const { return z_; }
  std::vector<int> to_one_based() const;

  friend bool operator==(const Labels&, const Labels&) = default;

 private:
  std::vector<int> z_;
  int K_ = 1;
};

// Block counts under the ordered-pair convention: n_ab counts ordered pairs
// (i, j), i != j, and O_ab the ordered pairs joined by an edge, so an edge
// inside block a adds 2 to O_aa.
struct SufficientStats {
  int n = 0;
  CountVector n_a;
  CountMatrix n_ab;
  CountMatrix O;

  int K() const { return static_cast<int>(n_a.size()); }
};

struct GraphSample {
  Labels labels;
  Graph graph;
};

// Draws z_i iid from pi, then A_ij ~ Bernoulli(H(z_i, z_j)) for i < j in
// row-major order. Deterministic given the seed.
GraphSample sample_graph(const ModelParams& params, int n, std::uint64_t seed);

// Throws DomainError when pi or H touch 0 or 1.
LogitParams to_logits(const Vector& pi, const Matrix& H);
LogitParams to_logits(const ModelParams& params);
PiH from_logits(const LogitParams& lp);

RhoS split_rho(const Vector& pi, const Matrix& H);

SufficientStats sufficient_stats(const Graph& graph, const Labels& labels);

Labels permute(const Labels& labels, const Permutation& perm);
ModelParams permute(const ModelParams& params, const Permutation& perm);
Vector permute(const Vector& v, const Permutation& perm);
Matrix permute(const Matrix& m, const Permutation& perm);

// All K! permutations in lexicographic order. K <= kMaxAlignClasses.
std::vector<Permutation> all_permutations(int K);

struct LabelAlignment {
  Permutation perm;
  Labels aligned;
  int hamming;
};

// Permutation of the candidate's classes minimizing the Hamming distance to
// the reference; ties go to the lexicographically smallest permutation.
LabelAlignment align_labels(const Labels& candidate, const Labels& reference);

struct ParamAlignment {
  Permutation perm;
  ModelParams aligned;
};

// ||H_a - H_b||_F + ||pi_a - pi_b||_2.
double param_distance(const ModelParams& a, const ModelParams& b);

// Member of the candidate's permutation class closest to the reference in
// param_distance.
ParamAlignment align_params(const ModelParams& candidate,
                            const ModelParams& reference);

}  // namespace blockmodel

#endif  // BLOCKMODEL_MODEL_HPP_
